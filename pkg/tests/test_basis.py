import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad, simpson

from carleman_picard.basis import (MAX_MODES, TensorBasis, eval_basis, exact_moments,
                                   orthonormalize)
from carleman_picard.exceptions import NonPositiveDefinite

# frozen oracle values
M0_HALF = (math.e - 1.0) / 2.0            # int_0^0.5 e^{2t} dt
M1_HALF = 0.25                            # [t e^{2t}/2]_0^0.5 - m0/2 = e/4 - (e-1)/4


def simpson_gram(basis, panels=8000):
    lo, hi = basis.interval
    t = np.linspace(lo, hi, panels + 1)
    V = basis(t)
    return simpson(V[:, None, :] * V[None, :, :], x=t, axis=-1)


class TestExactMoments:
    def test_first_two_moments(self):
        m = exact_moments((0.0, 0.5), 1)
        assert m[0] == pytest.approx(M0_HALF, rel=1e-15)
        assert m[1] == pytest.approx(M1_HALF, rel=1e-14)

    def test_against_adaptive_quadrature(self):
        m = exact_moments((-1.0, 1.0), 12)
        for k in range(13):
            ref, _ = quad(lambda t: t**k * math.exp(2 * t), -1.0, 1.0, epsabs=0, epsrel=1e-13)
            assert m[k] == pytest.approx(ref, rel=1e-11)

    def test_empty_interval(self):
        assert np.all(exact_moments((0.3, 0.3), 4) == 0.0)

    def test_negative_degree_rejected(self):
        with pytest.raises(ValueError):
            exact_moments((0.0, 1.0), -1)


class TestOrthonormalize:
    def test_single_mode(self):
        b = orthonormalize((0.0, 0.5), 1)
        assert b.coeffs[0, 0] == pytest.approx(1.0 / math.sqrt(M0_HALF), rel=1e-14)
        assert b.coeffs[0, 0] == pytest.approx(1.0788, abs=1e-4)

    @pytest.mark.parametrize("interval,count", [((-1.0, 1.0), 15), ((0.0, 0.5), 10)])
    def test_gram_identity_by_simpson(self, interval, count):
        b = orthonormalize(interval, count)
        G = simpson_gram(b)
        assert np.max(np.abs(G - np.eye(count))) <= 1e-8

    def test_lower_triangular_coefficients(self):
        b = orthonormalize((0.0, 0.5), 8)
        assert np.all(np.triu(b.coeffs, 1) == 0.0)
        assert np.all(np.diag(b.coeffs) > 0)

    def test_span_reproduces_raw_family(self):
        b = orthonormalize((0.0, 0.5), 10)
        t = np.linspace(0.0, 0.5, 4001)
        V = b(t)
        for m in range(1, 11):
            phi = t ** (m - 1) * np.exp(t)
            c = simpson(V[:m] * phi, x=t, axis=-1)
            resid = phi - c @ V[:m]
            assert math.sqrt(simpson(resid**2, x=t)) <= 1e-8

    def test_cap_and_interval_checks(self):
        with pytest.raises(ValueError):
            orthonormalize((0.0, 0.5), MAX_MODES + 1)
        with pytest.raises(ValueError):
            orthonormalize((1.0, 0.0), 3)

    def test_twenty_modes_still_factor(self):
        b = orthonormalize((0.0, 0.5), MAX_MODES)
        assert np.max(np.abs(simpson_gram(b) - np.eye(MAX_MODES))) <= 1e-6

    def test_non_positive_definite_is_reported(self, monkeypatch):
        import mpmath

        def refuse(_):
            raise ValueError("matrix is not positive-definite")

        monkeypatch.setattr(mpmath, "cholesky", refuse)
        with pytest.raises(NonPositiveDefinite):
            orthonormalize((0.0, 0.5), 3)


class TestDerivatives:
    def test_first_mode_is_its_own_derivative(self):
        b = orthonormalize((0.0, 0.5), 5)
        t = np.linspace(0, 0.5, 7)
        np.testing.assert_allclose(eval_basis(b, 1, t, 1), eval_basis(b, 1, t), rtol=1e-13)

    def test_value_matches_horner_in_t(self):
        b = orthonormalize((0.0, 0.5), 6)
        t = 0.37
        for n in range(1, 7):
            horner = np.polynomial.polynomial.polyval(t, b.coeffs[n - 1]) * math.exp(t)
            assert eval_basis(b, n, t) == pytest.approx(horner, rel=1e-9)

    def test_second_derivative_psi3_against_fd(self):
        b = orthonormalize((0.0, 0.5), 10)
        h = 1e-5
        fd = (eval_basis(b, 3, 0.25 + h, 1) - eval_basis(b, 3, 0.25 - h, 1)) / (2 * h)
        assert eval_basis(b, 3, 0.25, 2) == pytest.approx(fd, rel=1e-6)

    @pytest.mark.parametrize("interval,count", [((-1.0, 1.0), 15), ((0.0, 0.5), 10)])
    def test_derivative_consistency(self, interval, count):
        b = orthonormalize(interval, count)
        lo, hi = interval
        t = np.linspace(lo, hi, 12)[1:-1]
        h = 1e-6 * (hi - lo)
        for order in (1, 2):
            fd = (b(t + h, order - 1) - b(t - h, order - 1)) / (2 * h)
            exact = b(t, order)
            scale = np.maximum(np.abs(exact), 1e-3 * np.max(np.abs(exact)))
            assert np.max(np.abs(fd - exact) / scale) <= 1e-6

    def test_bad_mode_or_order(self):
        b = orthonormalize((0.0, 0.5), 3)
        with pytest.raises(IndexError):
            b.evaluate(4, 0.1)
        with pytest.raises(ValueError):
            b(0.1, 3)


class TestTensorBasis:
    @given(st.integers(1, 20), st.integers(1, 20), st.data())
    @settings(max_examples=50, deadline=None)
    def test_index_bijection(self, n1, nt, data):
        basis = TensorBasis(orthonormalize((-1.0, 1.0), n1), orthonormalize((0.0, 0.5), nt))
        flat = data.draw(st.integers(0, n1 * nt - 1))
        a, b = basis.multi_index(flat)
        assert basis.flat_index(a, b) == flat

    def test_flat_order(self, small_basis):
        assert small_basis.flat_index(1, 1) == 0
        assert small_basis.flat_index(2, 1) == small_basis.nt
        assert small_basis.flat_index(4, 3) == small_basis.size - 1
        with pytest.raises(IndexError):
            small_basis.flat_index(5, 1)

    def test_modes(self, small_basis):
        x, t = 0.3, 0.2
        flat = small_basis.flat_index(2, 3)
        Px = small_basis.x_basis.evaluate(2, x)
        assert small_basis.evaluate(flat, x, t) == pytest.approx(Px * small_basis.t_basis.evaluate(3, t))
        assert small_basis.evaluate(flat, x, t, "dt") == pytest.approx(
            Px * small_basis.t_basis.evaluate(3, t, 1))
        assert small_basis.evaluate(flat, x, t, "value_at_t0") == pytest.approx(
            Px * small_basis.t_basis.evaluate(3, 0.0))
        first = small_basis.flat_index(1, 2)
        assert small_basis.evaluate(first, x, t, "dxx") == pytest.approx(
            small_basis.evaluate(first, x, t), rel=1e-12)
        with pytest.raises(ValueError):
            small_basis.evaluate(flat, x, t, "dz")

    def test_tensor_orthonormality(self, small_basis):
        x = np.linspace(-1, 1, 2001)
        t = np.linspace(0, 0.5, 1001)
        P = small_basis.grid_values(x, t)
        inner = simpson(simpson(P[:, None] * P[None, :], x=t, axis=-1), x=x, axis=-1)
        assert np.max(np.abs(inner - np.eye(small_basis.size))) <= 1e-8
