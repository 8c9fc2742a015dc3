import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from carleman_picard.estimators import CarlemanPicardReconstructor, PolynomialExponentialProjector
from carleman_picard.forward import BoundaryRecord

X = np.linspace(-1, 1, 41)
T = np.linspace(0, 0.5, 51)


def _record(side, f):
    return BoundaryRecord(side, 1.0 if side == "top" else -1.0, X, T, f, np.zeros_like(f))


class TestProjector:
    def test_params_and_clone(self):
        est = PolynomialExponentialProjector(x=X, t=T, n1=4, nt=3)
        assert est.get_params()["n1"] == 4
        assert clone(est).get_params()["nt"] == 3

    def test_not_fitted(self):
        with pytest.raises(NotFittedError):
            PolynomialExponentialProjector(x=X, t=T).transform(np.zeros(X.size * T.size))

    def test_round_trip_in_span(self, rng):
        est = PolynomialExponentialProjector(x=X, t=T, n1=4, nt=3).fit()
        coeffs = rng.normal(size=(3, 12))
        samples = est.inverse_transform(coeffs)
        assert samples.shape == (3, X.size * T.size)
        np.testing.assert_allclose(est.transform(samples), coeffs, atol=1e-9)

    def test_fit_transform_and_width_check(self, rng):
        est = PolynomialExponentialProjector(x=X, t=T, n1=4, nt=3)
        data = rng.normal(size=(2, X.size * T.size))
        assert est.fit_transform(data).shape == (2, 12)
        with pytest.raises(ValueError):
            est.transform(np.zeros((1, 5)))

    def test_grid_required(self):
        with pytest.raises(ValueError):
            PolynomialExponentialProjector().fit()


class TestReconstructor:
    def test_zero_data(self):
        # a constant is not in the span of t^k e^t for small nt, so use zero records
        const = np.zeros((X.size, T.size))
        est = CarlemanPicardReconstructor(n1=4, nt=3, nz=21).fit((_record("top", const),
                                                                   _record("bottom", const)))
        assert est.converged_ and est.n_iter_ == 1 and est.fit_time_ > 0
        assert np.all(est.coefficient_grid(X) == 0.0)
        pts = np.array([[0.0, 0.0], [0.3, -0.77]])
        assert np.all(est.predict(pts) == 0.0)

    def test_predict_interpolates_grid(self, rng):
        const = np.full((X.size, T.size), 2.0)
        est = CarlemanPicardReconstructor(n1=4, nt=3, nz=21).fit((_record("top", const),
                                                                   _record("bottom", const)))
        est.profile_.values[:] = rng.normal(size=est.profile_.values.shape)
        grid = est.coefficient_grid(X)
        z = est.profile_.zgrid
        pts = np.column_stack([np.repeat(X[[3, 17]], z.size), np.tile(z, 2)])
        np.testing.assert_allclose(est.predict(pts), grid[[3, 17]].ravel(), atol=1e-12)
        with pytest.raises(ValueError):
            est.predict(np.array([[0.0, 1.5]]))

    def test_not_fitted(self):
        with pytest.raises(NotFittedError):
            CarlemanPicardReconstructor().predict(np.zeros((1, 2)))

    def test_divergence_warns(self, rng):
        from sklearn.exceptions import ConvergenceWarning

        f = 2.0 + 50.0 * rng.normal(size=(X.size, T.size))
        est = CarlemanPicardReconstructor(n1=4, nt=3, nz=21, max_iters=2, kappa0=1e-12)
        with pytest.warns(ConvergenceWarning):
            est.fit((_record("top", f), _record("bottom", f)))
        assert not est.converged_
