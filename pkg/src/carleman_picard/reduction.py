"""From boundary records to the Cauchy data of the reduced ODE system.

Samples on a ``x`` by ``t`` grid are expanded in the tensor basis
``P_(n1, nt)(x, t)``.  Inner products use trapezoid weights on the native
sample grid followed by a solve with the discrete Gram matrix, so the
coefficients are the weighted least-squares projection: exact for data in
the truncated span and idempotent, which plain trapezoid sums are not once
``N1`` reaches double digits on 81 points.

Time derivatives of noisy data are never formed from the samples; the
truncated expansion is differentiated instead.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Optional, Tuple

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .basis import MAX_MODES, TensorBasis
from .forward import BoundaryRecord


@dataclass(frozen=True)
class CutoffSpec:
    n1: int = 15
    nt: int = 10

    def __post_init__(self):
        for name in ("n1", "nt"):
            value = getattr(self, name)
            if not 1 <= value <= MAX_MODES:
                raise ValueError(f"cutoff {name} = {value} outside 1..{MAX_MODES}")

    @property
    def size(self) -> int:
        return self.n1 * self.nt


@dataclass(frozen=True)
class CauchyData:
    """Endpoint values ``v(+-R)`` and derivatives ``v'(+-R)`` of the mode vector."""

    P_plus: np.ndarray
    P_minus: np.ndarray
    Q_plus: np.ndarray
    Q_minus: np.ndarray

    @classmethod
    def zeros(cls, size: int) -> "CauchyData":
        return cls(*(np.zeros(size) for _ in range(4)))

    def is_finite(self) -> bool:
        return all(np.isfinite(a).all() for a in (self.P_plus, self.P_minus, self.Q_plus, self.Q_minus))


@lru_cache(maxsize=64)
def tensor_basis(R: float, T: float, n1: int, nt: int) -> TensorBasis:
    """Cached :meth:`TensorBasis.build`; bases are immutable."""
    return TensorBasis.build(R, T, n1, nt)


def trapezoid_weights(nodes) -> np.ndarray:
    nodes = np.asarray(nodes, dtype=float)
    w = np.zeros_like(nodes)
    h = np.diff(nodes)
    w[:-1] += 0.5 * h
    w[1:] += 0.5 * h
    return w


class SampleProjector:
    """Projection of samples on a fixed ``x`` by ``t`` grid onto a tensor basis."""

    def __init__(self, basis: TensorBasis, x, t):
        self.basis = basis
        self.x = np.asarray(x, dtype=float)
        self.t = np.asarray(t, dtype=float)
        self.Vx = basis.x_basis(self.x)
        self.Vt = basis.t_basis(self.t)
        self.dVt = basis.t_basis(self.t, 1)
        wx = trapezoid_weights(self.x)
        wt = trapezoid_weights(self.t)
        gx = (self.Vx * wx) @ self.Vx.T
        gt = (self.Vt * wt) @ self.Vt.T
        self._ax = cho_solve(cho_factor(gx), self.Vx * wx)
        self._at = cho_solve(cho_factor(gt), self.Vt * wt)

    def coefficients(self, samples) -> np.ndarray:
        samples = np.asarray(samples, dtype=float)
        if samples.shape != (self.x.size, self.t.size):
            raise ValueError(f"samples have shape {samples.shape}, expected {(self.x.size, self.t.size)}")
        return (self._ax @ samples @ self._at.T).ravel()

    def synthesize(self, coeffs, t_deriv: int = 0) -> np.ndarray:
        C = np.asarray(coeffs, dtype=float).reshape(self.basis.n1, self.basis.nt)
        Vt = self.Vt if t_deriv == 0 else self.basis.t_basis(self.t, t_deriv)
        return self.Vx.T @ C @ Vt


def _projector(samples_x, samples_t, basis: TensorBasis) -> SampleProjector:
    return SampleProjector(basis, samples_x, samples_t)


def fourier_coeffs(samples, basis: TensorBasis, x, t) -> np.ndarray:
    """Coefficients ``c_n`` of ``samples[i, l] ~ sum_n c_n P_n(x_i, t_l)``, flat order."""
    return _projector(x, t, basis).coefficients(samples)


def reconstruct(coeffs, basis: TensorBasis, x, t, t_deriv: int = 0) -> np.ndarray:
    """Evaluate ``sum_n c_n Psi_n1(x) d^k psi_nt(t)`` on the grid."""
    return _projector(x, t, basis).synthesize(coeffs, t_deriv)


def mismatch_sup(samples, basis: TensorBasis, x, t) -> float:
    """Sup-norm distance between the samples and their truncated expansion."""
    proj = _projector(x, t, basis)
    fit = proj.synthesize(proj.coefficients(samples))
    return float(np.max(np.abs(np.asarray(samples) - fit)))


def spectral_time_derivative(samples, basis: TensorBasis, x, t) -> np.ndarray:
    """``d/dt`` of the truncated expansion of ``samples``, on the sample grid."""
    proj = _projector(x, t, basis)
    return proj.synthesize(proj.coefficients(samples), t_deriv=1)


def build_cauchy_data(top: BoundaryRecord, bottom: BoundaryRecord, basis: TensorBasis) -> CauchyData:
    """``P(+-R)`` and ``Q(+-R)``: coefficients of ``f_t`` and ``g_t`` on each side."""
    if not (np.array_equal(top.x, bottom.x) and np.array_equal(top.t, bottom.t)):
        raise ValueError("top and bottom records must share the sample grid")
    proj = _projector(top.x, top.t, basis)

    def coeffs_of_derivative(samples):
        dt_samples = proj.synthesize(proj.coefficients(samples), t_deriv=1)
        return proj.coefficients(dt_samples)

    return CauchyData(
        P_plus=coeffs_of_derivative(top.f),
        P_minus=coeffs_of_derivative(bottom.f),
        Q_plus=coeffs_of_derivative(top.g),
        Q_minus=coeffs_of_derivative(bottom.g),
    )


def sweep_mismatch(samples, x, t, R: float, T: float,
                   n1_values: Iterable[int], nt_values: Iterable[int]):
    """Rows ``(N1, Nt, sup mismatch)`` over the product of the given cutoffs."""
    rows = []
    for n1, nt in itertools.product(list(n1_values), list(nt_values)):
        basis = tensor_basis(float(R), float(T), int(n1), int(nt))
        rows.append((int(n1), int(nt), mismatch_sup(samples, basis, x, t)))
    return rows


def write_sweep_csv(rows, path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["N1", "Nt", "sup_mismatch"])
        for n1, nt, value in rows:
            writer.writerow([n1, nt, repr(float(value))])
