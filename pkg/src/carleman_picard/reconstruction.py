"""Recover ``c`` from a mode profile and grade it against the true phantom."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .basis import TensorBasis
from .exceptions import InvalidInitialCondition, NonFiniteField
from .galerkin import ModeProfile
from .phantoms import read_grid_csv, write_grid_csv


@dataclass(frozen=True)
class CoefficientField:
    """Samples ``values[i, j] = c(x[i], z[j])``."""

    x: np.ndarray
    z: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (self.x.size, self.z.size):
            raise ValueError("values must have shape (len(x), len(z))")
        if not np.isfinite(self.values).all():
            raise NonFiniteField("coefficient field contains non-finite values")

    def to_csv(self, path) -> None:
        write_grid_csv(self.x, self.z, self.values, path)

    @classmethod
    def from_csv(cls, path) -> "CoefficientField":
        return cls(*read_grid_csv(path))


@dataclass(frozen=True)
class ReconstructionReport:
    max_in_inclusion: List[float]
    relative_max_error: List[float]
    l2_relative_error: float
    iterations: int = 0
    wall_time_seconds: float = 0.0


def synthesize_v(profile: ModeProfile, basis: TensorBasis, x, t: float) -> np.ndarray:
    """``v(x_i, z_j, t) = sum_n v_n(z_j) Psi_n1(x_i) psi_nt(t)``, shape ``(len(x), nz)``."""
    lo, hi = basis.t_basis.interval
    if not lo <= t <= hi:
        raise ValueError(f"t = {t} lies outside [{lo}, {hi}]")
    x = np.asarray(x, dtype=float)
    coeffs = np.asarray(profile.values).reshape(basis.n1, basis.nt, -1)
    Vx = basis.x_basis(x)
    Vt = basis.t_basis(np.array([float(t)]))[:, 0]
    return np.einsum("ai,abz,b->iz", Vx, coeffs, Vt)


def reconstruct_c(profile: ModeProfile, basis: TensorBasis, p_value: float, x) -> CoefficientField:
    """``c = v(., 0) / p`` for constant ``p`` (so ``Lap p = 0``)."""
    if not p_value > 0:
        raise InvalidInitialCondition(f"initial value p must be positive, got {p_value}")
    x = np.asarray(x, dtype=float)
    values = synthesize_v(profile, basis, x, 0.0) / p_value
    return CoefficientField(x, np.asarray(profile.zgrid, dtype=float), values)


def metrics(c_comp, c_true, masks: Sequence[np.ndarray], *, iterations: int = 0,
            wall_time: float = 0.0, true_max: Optional[Sequence[float]] = None) -> ReconstructionReport:
    """Per-inclusion maxima, their relative errors, and the global relative L2 error.

    Parameters
    ----------
    c_comp, c_true : array_like
        Reconstructed and true coefficients on the same grid.
    masks : sequence of bool arrays
        True support of each inclusion.
    true_max : sequence of float, optional
        Reference maxima; defaults to the max of ``c_true`` over each mask.
    """
    c_comp = np.asarray(c_comp, dtype=float)
    c_true = np.asarray(c_true, dtype=float)
    if c_comp.shape != c_true.shape:
        raise ValueError("c_comp and c_true must share a grid")
    peaks, errors = [], []
    for k, mask in enumerate(masks):
        mask = np.asarray(mask, dtype=bool)
        peak = float(c_comp[mask].max())
        ref = float(c_true[mask].max()) if true_max is None else float(true_max[k])
        peaks.append(peak)
        errors.append(abs(peak - ref) / abs(ref))
    norm = np.linalg.norm(c_true)
    diff = np.linalg.norm(c_comp - c_true)
    l2 = float(diff / norm) if norm > 0 else float(diff)
    return ReconstructionReport(peaks, errors, l2, int(iterations), float(wall_time))
