"""Polynomial-exponential orthonormal bases.

The raw family ``t**k * exp(t)`` is orthonormalized on an interval through
the Cholesky factor of its exact Gram matrix.  Gram entries are integrals of
``t**k * exp(2 t)`` which have a closed-form recurrence; both the recurrence
and the factorization run in extended precision because the Gram matrix of
this family is numerically singular in float64 already at ten modes on
``(0, 0.5)``.  The resulting coefficients are rounded to float64 once and
stored, so evaluation and differentiation are exact polynomial operations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Tuple

import mpmath
import numpy as np
from numpy.polynomial import polynomial as npoly

from .exceptions import NonPositiveDefinite

MAX_MODES = 20
_EXTENDED_DPS = 80

TENSOR_MODES = ("value", "dt", "dxx", "value_at_t0")


def _moments_mp(lo, hi, max_degree):
    lo = mpmath.mpf(lo)
    hi = mpmath.mpf(hi)
    e_lo = mpmath.exp(2 * lo)
    e_hi = mpmath.exp(2 * hi)
    moments = []
    for k in range(max_degree + 1):
        bracket = (hi**k * e_hi - lo**k * e_lo) / 2
        if k:
            bracket -= mpmath.mpf(k) / 2 * moments[-1]
        moments.append(bracket)
    return moments


def exact_moments(interval: Tuple[float, float], max_degree: int) -> np.ndarray:
    """Integrals ``m_k = int t**k exp(2 t) dt`` over ``interval`` for ``k <= max_degree``.

    Uses ``m_k = [t**k exp(2t) / 2] - (k / 2) m_{k-1}`` evaluated with
    extended precision; the forward recurrence loses all accuracy in float64.
    """
    if max_degree < 0:
        raise ValueError("max_degree must be non-negative")
    lo, hi = interval
    with mpmath.workdps(_EXTENDED_DPS):
        return np.array([float(m) for m in _moments_mp(lo, hi, max_degree)])


@dataclass(frozen=True)
class OrthonormalBasis1D:
    """Orthonormal family ``psi_n(t) = q_n(t) exp(t)`` on ``interval``.

    Attributes
    ----------
    interval : (float, float)
    coeffs : ndarray, shape (N, N)
        Lower-triangular; row ``n - 1`` holds the monomial coefficients of
        ``q_n`` in powers of ``t``.
    local_coeffs : ndarray, shape (N, N)
        The same polynomials in the centred variable
        ``s = (t - center) / half_width``.  Used for evaluation because the
        monomial form in ``t`` suffers cancellation on short intervals.
    """

    interval: Tuple[float, float]
    coeffs: np.ndarray = field(repr=False)
    local_coeffs: np.ndarray = field(repr=False)

    @property
    def count(self) -> int:
        return self.coeffs.shape[0]

    @property
    def center(self) -> float:
        return 0.5 * (self.interval[0] + self.interval[1])

    @property
    def half_width(self) -> float:
        return 0.5 * (self.interval[1] - self.interval[0])

    def __call__(self, t, deriv_order: int = 0) -> np.ndarray:
        """Evaluate every basis function at ``t``.

        Returns an array of shape ``(N,) + np.shape(t)``.
        """
        if deriv_order not in (0, 1, 2):
            raise ValueError("deriv_order must be 0, 1 or 2")
        t = np.asarray(t, dtype=float)
        s = (t - self.center) / self.half_width
        q = self.local_coeffs
        # d/dt [q e^t] = (q + q') e^t, applied deriv_order times
        poly = q.copy()
        for _ in range(deriv_order):
            dq = npoly.polyder(poly, axis=1) / self.half_width
            dq = np.concatenate([dq, np.zeros((poly.shape[0], 1))], axis=1)
            poly = poly + dq
        flat = s.ravel()
        values = npoly.polyval(flat, poly.T, tensor=True) * np.exp(t.ravel())
        return values.reshape((self.count,) + t.shape)

    def evaluate(self, n: int, t, deriv_order: int = 0):
        """Value (or derivative) of the single mode ``psi_n`` (1-based)."""
        if not 1 <= n <= self.count:
            raise IndexError(f"mode {n} outside 1..{self.count}")
        out = self(t, deriv_order)[n - 1]
        return out.item() if out.ndim == 0 else out


def _to_local(coeffs_mp, center, half_width):
    """Re-expand polynomials from powers of t into powers of s, t = c + h s."""
    n = len(coeffs_mp)
    out = [[mpmath.mpf(0)] * n for _ in range(n)]
    for row in range(n):
        for k in range(n):
            a = coeffs_mp[row][k]
            if a == 0:
                continue
            for j in range(k + 1):
                out[row][j] += a * mpmath.binomial(k, j) * center ** (k - j) * half_width**j
    return out


def orthonormalize(interval: Tuple[float, float], count: int) -> OrthonormalBasis1D:
    """Gram-Schmidt the family ``t**k exp(t)``, ``k < count``, on ``interval``.

    Equivalent to classical Gram-Schmidt with positive leading coefficients,
    carried out as ``L^{-1}`` of the Cholesky factor of the exact Gram matrix.

    Raises
    ------
    NonPositiveDefinite
        If the Gram matrix cannot be factorized, i.e. ``count`` is too large.
    """
    lo, hi = interval
    if not lo < hi:
        raise ValueError("interval must satisfy lo < hi")
    if not 1 <= count <= MAX_MODES:
        raise ValueError(f"count must lie in 1..{MAX_MODES}")

    with mpmath.workdps(_EXTENDED_DPS):
        m = _moments_mp(lo, hi, 2 * count - 2)
        gram = mpmath.matrix(count, count)
        for i in range(count):
            for j in range(count):
                gram[i, j] = m[i + j]
        try:
            chol = mpmath.cholesky(gram)
        except ValueError as exc:
            raise NonPositiveDefinite(
                f"Gram matrix of {count} modes on {interval} is not positive definite"
            ) from exc
        inv = mpmath.inverse(chol)
        coeffs_mp = [[inv[i, j] if j <= i else mpmath.mpf(0) for j in range(count)]
                     for i in range(count)]
        local_mp = _to_local(coeffs_mp, mpmath.mpf(lo + hi) / 2, mpmath.mpf(hi - lo) / 2)
        coeffs = np.array([[float(a) for a in row] for row in coeffs_mp])
        local = np.array([[float(a) for a in row] for row in local_mp])

    coeffs.setflags(write=False)
    local.setflags(write=False)
    return OrthonormalBasis1D((float(lo), float(hi)), coeffs, local)


def eval_basis(basis: OrthonormalBasis1D, n: int, t, deriv_order: int = 0):
    """``d^k/dt^k psi_n(t)`` for ``k = deriv_order`` in {0, 1, 2}."""
    return basis.evaluate(n, t, deriv_order)


class TensorBasis:
    """Products ``P_(n1, nt)(x, t) = Psi_n1(x) psi_nt(t)`` on ``(-R, R) x (0, T)``.

    Modes are enumerated with ``flat = (n1 - 1) * Nt + (nt - 1)``.
    """

    def __init__(self, x_basis: OrthonormalBasis1D, t_basis: OrthonormalBasis1D):
        self.x_basis = x_basis
        self.t_basis = t_basis

    @classmethod
    def build(cls, R: float, T: float, n1: int, nt: int) -> "TensorBasis":
        return cls(orthonormalize((-R, R), n1), orthonormalize((0.0, T), nt))

    @property
    def n1(self) -> int:
        return self.x_basis.count

    @property
    def nt(self) -> int:
        return self.t_basis.count

    @property
    def size(self) -> int:
        return self.n1 * self.nt

    def flat_index(self, n1: int, nt: int) -> int:
        if not (1 <= n1 <= self.n1 and 1 <= nt <= self.nt):
            raise IndexError(f"({n1}, {nt}) outside cutoff ({self.n1}, {self.nt})")
        return (n1 - 1) * self.nt + (nt - 1)

    def multi_index(self, flat: int) -> Tuple[int, int]:
        if not 0 <= flat < self.size:
            raise IndexError(f"flat index {flat} outside 0..{self.size - 1}")
        q, r = divmod(flat, self.nt)
        return q + 1, r + 1

    def evaluate(self, flat: int, x, t, mode: str = "value"):
        """Pointwise value of one tensor mode; ``mode`` is one of TENSOR_MODES."""
        n1, nt = self.multi_index(flat)
        if mode == "value":
            out = self.x_basis.evaluate(n1, x) * self.t_basis.evaluate(nt, t)
        elif mode == "dt":
            out = self.x_basis.evaluate(n1, x) * self.t_basis.evaluate(nt, t, 1)
        elif mode == "dxx":
            out = self.x_basis.evaluate(n1, x, 2) * self.t_basis.evaluate(nt, t)
        elif mode == "value_at_t0":
            out = self.x_basis.evaluate(n1, x) * self.t_basis.evaluate(nt, 0.0)
        else:
            raise ValueError(f"unknown mode {mode!r}; expected one of {TENSOR_MODES}")
        return out

    def grid_values(self, x, t, t_deriv: int = 0, x_deriv: int = 0) -> np.ndarray:
        """All modes on the tensor grid ``x`` by ``t``; shape ``(size, len(x), len(t))``."""
        X = self.x_basis(np.asarray(x, dtype=float), x_deriv)
        Tt = self.t_basis(np.asarray(t, dtype=float), t_deriv)
        return np.einsum("ai,bj->abij", X, Tt).reshape(self.size, X.shape[1], Tt.shape[1])
