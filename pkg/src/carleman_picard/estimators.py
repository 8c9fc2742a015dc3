"""scikit-learn style wrappers around the projection and the inverse solver.

``PolynomialExponentialProjector`` is a transformer: rows of ``X`` are
flattened ``x`` by ``t`` samples, ``transform`` returns tensor-basis
coefficients and ``inverse_transform`` synthesizes them back.

``CarlemanPicardReconstructor`` is fitted on a ``(top, bottom)`` pair of
boundary records and predicts the coefficient ``c`` at ``(x, z)`` points.
"""

from __future__ import annotations

import time
import warnings

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import ConvergenceWarning
from sklearn.utils.validation import check_is_fitted

from .carleman import CarlemanParams, picard_solve
from .exceptions import MaxItersExceeded
from .galerkin import assemble_operators, uniform_zgrid
from .reconstruction import synthesize_v
from .reduction import SampleProjector, build_cauchy_data, tensor_basis


class PolynomialExponentialProjector(TransformerMixin, BaseEstimator):
    """Least-squares projection of gridded samples onto ``Psi_n1(x) psi_nt(t)``.

    Parameters
    ----------
    x, t : array_like
        Sample grid; each row of ``X`` holds ``len(x) * len(t)`` values in
        ``x``-major order.
    n1, nt : int
        Cutoffs in ``x`` and ``t``.
    R, T : float
        Basis intervals ``(-R, R)`` and ``(0, T)``.
    """

    def __init__(self, x=None, t=None, n1=15, nt=10, R=1.0, T=0.5):
        self.x = x
        self.t = t
        self.n1 = n1
        self.nt = nt
        self.R = R
        self.T = T

    def fit(self, X=None, y=None):
        if self.x is None or self.t is None:
            raise ValueError("the sample grid x and t must be given")
        self.basis_ = tensor_basis(float(self.R), float(self.T), int(self.n1), int(self.nt))
        self.projector_ = SampleProjector(self.basis_, self.x, self.t)
        self.n_features_in_ = self.projector_.x.size * self.projector_.t.size
        return self

    def _rows(self, X, width):
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != width:
            raise ValueError(f"expected {width} features per row, got {X.shape[1]}")
        return X

    def transform(self, X):
        check_is_fitted(self, "projector_")
        X = self._rows(X, self.n_features_in_)
        shape = (self.projector_.x.size, self.projector_.t.size)
        return np.stack([self.projector_.coefficients(row.reshape(shape)) for row in X])

    def inverse_transform(self, X):
        check_is_fitted(self, "projector_")
        X = self._rows(X, self.basis_.size)
        return np.stack([self.projector_.synthesize(row).ravel() for row in X])


class CarlemanPicardReconstructor(BaseEstimator):
    """Coefficient reconstruction from Cauchy data on ``z = +R`` and ``z = -R``.

    After ``fit`` the attributes ``profile_``, ``trace_``, ``n_iter_``,
    ``converged_`` and ``fit_time_`` describe the solve.
    """

    def __init__(self, n1=15, nt=10, nz=81, lam=10.0, z0=-10.0, eps=10.0**-6.5,
                 kappa0=1e-3, max_iters=50, p_value=2.0, R=1.0, T=0.5):
        self.n1 = n1
        self.nt = nt
        self.nz = nz
        self.lam = lam
        self.z0 = z0
        self.eps = eps
        self.kappa0 = kappa0
        self.max_iters = max_iters
        self.p_value = p_value
        self.R = R
        self.T = T

    def fit(self, X, y=None):
        """``X`` is the pair ``(top, bottom)`` of boundary records."""
        top, bottom = X
        start = time.perf_counter()
        self.basis_ = tensor_basis(float(self.R), float(self.T), int(self.n1), int(self.nt))
        self.cauchy_ = build_cauchy_data(top, bottom, self.basis_)
        ops = assemble_operators(self.basis_, self.p_value)
        params = CarlemanParams(lam=self.lam, z0=self.z0, eps=self.eps, kappa0=self.kappa0,
                                max_iters=self.max_iters, R=self.R)
        zgrid = uniform_zgrid(self.R, self.nz)
        try:
            self.profile_, self.trace_ = picard_solve(ops, self.cauchy_, params, zgrid)
        except MaxItersExceeded as exc:
            warnings.warn(str(exc), ConvergenceWarning)
            self.profile_, self.trace_ = exc.profile, exc.trace
        self.converged_ = bool(self.trace_.converged)
        self.n_iter_ = self.trace_.iterations
        self.fit_time_ = time.perf_counter() - start
        return self

    def coefficient_grid(self, x):
        """``c`` on ``x`` times the solver's ``z`` nodes, shape ``(len(x), nz)``."""
        check_is_fitted(self, "profile_")
        return synthesize_v(self.profile_, self.basis_, np.asarray(x, dtype=float), 0.0) / self.p_value

    def predict(self, X):
        """``c`` at points ``X[:, 0] = x``, ``X[:, 1] = z``; linear interpolation in ``z``."""
        check_is_fitted(self, "profile_")
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != 2:
            raise ValueError("X must have two columns (x, z)")
        zgrid = self.profile_.zgrid
        if np.any(np.abs(X) > self.R + 1e-12):
            raise ValueError(f"points must lie in [-{self.R}, {self.R}]^2")
        Vx = self.basis_.x_basis(X[:, 0])                      # (n1, npts)
        psi0 = self.basis_.t_basis(np.array([0.0]))[:, 0]      # (nt,)
        coeffs = self.profile_.values.reshape(self.basis_.n1, self.basis_.nt, -1)
        trace0 = np.einsum("abz,b->az", coeffs, psi0)          # v_(n1, .)(z) at t = 0
        pos = np.clip(np.searchsorted(zgrid, X[:, 1]) - 1, 0, zgrid.size - 2)
        frac = (X[:, 1] - zgrid[pos]) / (zgrid[pos + 1] - zgrid[pos])
        modes = trace0[:, pos] * (1 - frac) + trace0[:, pos + 1] * frac
        return np.sum(Vx * modes, axis=0) / self.p_value
