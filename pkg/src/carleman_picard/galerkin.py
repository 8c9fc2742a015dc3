"""Galerkin operators of the reduced system ``v'' + S v + F(v) = 0``.

Testing ``v_t = Lap v + (v(., 0) / p) v`` against ``P_m`` over
``(-R, R) x (0, T)`` gives, for each mode ``m``::

    v_m'' + sum_n S[m, n] v_n + sum_{n, k} B[m, n, k] v_n v_k + sum_k L[m, k] v_k = 0

Every integral factors into one-dimensional pieces because the basis is a
tensor product, so assembly only needs Gauss-Legendre rules in ``x`` and in
``t`` separately.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import TensorBasis
from .exceptions import InvalidInitialCondition

GAUSS_NODES = 96


def _gauss(lo, hi, n=GAUSS_NODES):
    nodes, weights = np.polynomial.legendre.leggauss(n)
    half = 0.5 * (hi - lo)
    return lo + half * (nodes + 1.0), half * weights


@dataclass(frozen=True)
class GalerkinOperators:
    """Coupling matrix ``S``, quadratic tensor ``B`` and linear term ``L``.

    ``B[m, n, k]`` multiplies ``v_n v_k`` in equation ``m``; the first
    factor carries the ``t = 0`` trace, the second the full mode.
    """

    S: np.ndarray
    B: np.ndarray
    L: np.ndarray
    p_value: float

    @property
    def size(self) -> int:
        return self.S.shape[0]


@dataclass(frozen=True)
class ModeProfile:
    """Mode vector sampled on a uniform ``z`` grid: ``values[m, i] = v_m(z_i)``."""

    zgrid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if self.zgrid.size < 5:
            raise ValueError("a mode profile needs at least 5 z nodes")
        if self.values.shape[1] != self.zgrid.size:
            raise ValueError("values must have one column per z node")

    @property
    def h(self) -> float:
        return float(self.zgrid[1] - self.zgrid[0])

    @classmethod
    def zeros(cls, size: int, zgrid) -> "ModeProfile":
        zgrid = np.asarray(zgrid, dtype=float)
        return cls(zgrid, np.zeros((size, zgrid.size)))


def uniform_zgrid(R: float, nz: int) -> np.ndarray:
    """``nz`` equispaced nodes with endpoints exactly ``-R`` and ``R``."""
    z = np.linspace(-R, R, nz)
    z[0], z[-1] = -R, R
    return z


def time_derivative_matrix(basis: TensorBasis) -> np.ndarray:
    """``A[m, n] = int_0^T psi_n'(t) psi_m(t) dt``."""
    t, w = _gauss(*basis.t_basis.interval)
    return (basis.t_basis(t) * w) @ basis.t_basis(t, 1).T


def x_laplacian_matrix(basis: TensorBasis) -> np.ndarray:
    """``D[m, n] = int_{-R}^{R} Psi_n''(x) Psi_m(x) dx``."""
    x, w = _gauss(*basis.x_basis.interval)
    return (basis.x_basis(x) * w) @ basis.x_basis(x, 2).T


def x_triple_products(basis: TensorBasis) -> np.ndarray:
    """``X3[a, b, c] = int Psi_a Psi_b Psi_c dx``."""
    x, w = _gauss(*basis.x_basis.interval)
    V = basis.x_basis(x)
    return np.einsum("aq,bq,cq,q->abc", V, V, V, w)


def assemble_S(basis: TensorBasis) -> np.ndarray:
    """``S[m, n] = -int P_n,t P_m + int Lap_x P_n P_m`` in flat mode order."""
    A_t = time_derivative_matrix(basis)
    D_x = x_laplacian_matrix(basis)
    return -np.kron(np.eye(basis.n1), A_t) + np.kron(D_x, np.eye(basis.nt))


def assemble_nonlinearity(basis: TensorBasis, p_value: float):
    """Quadratic tensor ``B`` and linear correction ``L`` for constant ``p``.

    ``B[m, n, k] = (1/p) int P_n(x, 0) P_k(x, t) P_m(x, t) dx dt``, which
    separates into ``X3[m1, n1, k1] psi_nt(0) delta(kt, mt) / p``.  With
    constant ``p`` the ``Lap p`` term vanishes and ``L = 0``.
    """
    if not p_value > 0:
        raise InvalidInitialCondition(f"initial value p must be positive, got {p_value}")
    n1, nt = basis.n1, basis.nt
    X3 = x_triple_products(basis)
    psi0 = basis.t_basis(np.array([0.0]))[:, 0]
    # axes: (m1, mt, n1, nt, k1, kt)
    B = np.einsum("acb,n,mk->amcnbk", X3, psi0, np.eye(nt)) / p_value
    B = B.reshape(n1 * nt, n1 * nt, n1 * nt)
    L = np.zeros((n1 * nt, n1 * nt))
    return B, L


def assemble_operators(basis: TensorBasis, p_value: float = 2.0) -> GalerkinOperators:
    B, L = assemble_nonlinearity(basis, p_value)
    return GalerkinOperators(assemble_S(basis), B, L, float(p_value))


def eval_F(ops: GalerkinOperators, v) -> np.ndarray:
    """``F_m(v) = sum B[m, n, k] v_n v_k + sum L[m, k] v_k``.

    ``v`` may be a single mode vector or an array of shape ``(size, nz)``
    holding one vector per ``z`` node.
    """
    v = np.asarray(v, dtype=float)
    if v.ndim == 1:
        return ops.B.reshape(ops.size, -1) @ np.outer(v, v).ravel() + ops.L @ v
    outer = np.einsum("nz,kz->nkz", v, v).reshape(ops.size**2, v.shape[1])
    return ops.B.reshape(ops.size, -1) @ outer + ops.L @ v


def second_difference(values, h: float) -> np.ndarray:
    """``(v_{i-1} - 2 v_i + v_{i+1}) / h**2`` along the last axis.

    End columns use the second-order one-sided stencil ``(2, -5, 4, -1)``
    so the whole column is accurate to ``O(h**2)``.
    """
    v = np.asarray(values, dtype=float)
    if v.shape[-1] < 4:
        raise ValueError("second_difference needs at least 4 nodes")
    out = np.empty_like(v)
    out[..., 1:-1] = (v[..., :-2] - 2.0 * v[..., 1:-1] + v[..., 2:]) / h**2
    out[..., 0] = (2.0 * v[..., 0] - 5.0 * v[..., 1] + 4.0 * v[..., 2] - v[..., 3]) / h**2
    out[..., -1] = (2.0 * v[..., -1] - 5.0 * v[..., -2] + 4.0 * v[..., -3] - v[..., -4]) / h**2
    return out


def residual(ops: GalerkinOperators, profile: ModeProfile, F_source) -> np.ndarray:
    """``v'' + S v + F_source`` on every node of ``profile.zgrid``.

    Interior columns use the centred second difference and the two end
    columns a one-sided four-point stencil.  The functional ``J`` only
    weights the interior columns.
    """
    F_source = np.asarray(F_source, dtype=float)
    if F_source.shape != profile.values.shape:
        raise ValueError("F_source must have the same shape as the profile values")
    return second_difference(profile.values, profile.h) + ops.S @ profile.values + F_source
