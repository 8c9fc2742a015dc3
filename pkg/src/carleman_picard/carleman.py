"""Carleman-weighted quasi-reversibility and the Picard iteration around it.

For a frozen source ``F`` the discrete functional is::

    J(v) = sum_i w(z_i) h |D2 v + S v + F|^2            (interior nodes)
         + lam^4 w(+R) (|v(R) - P+|^2 + |v'(R) - Q+|^2)
         + lam^4 w(-R) (|v(-R) - P-|^2 + |v'(-R) - Q-|^2)
         + eps (|v|^2 + |D1 v|^2 + |D2 v|^2)             (trapezoid in z)

with ``w(z) = exp(2 lam (z - z0)**-2)``.  Unknowns are ordered z-major, so
the normal matrix is banded with half-bandwidth ``3 |N| - 1``; it does not
depend on ``F`` and is factorized once per Picard run.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
from scipy.linalg import LinAlgError, cho_solve_banded, cholesky_banded
from scipy.sparse import dia_matrix

from .exceptions import CalibrationFailed, MaxItersExceeded, SingularSystem
from .galerkin import GalerkinOperators, ModeProfile, eval_F, residual
from .reduction import CauchyData

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CarlemanParams:
    lam: float = 10.0
    z0: float = -10.0
    eps: float = 10.0**-6.5
    kappa0: float = 1e-3
    max_iters: int = 50
    M: float = 1e6
    R: float = 1.0

    def __post_init__(self):
        if not self.lam >= 1:
            raise ValueError(f"Carleman parameter lambda must be >= 1, got {self.lam}")
        if not self.z0 < -self.R:
            raise ValueError(f"z0 = {self.z0} must be strictly below -R = {-self.R}")
        if not self.eps > 0:
            raise ValueError("regularization eps must be positive")
        if not self.kappa0 > 0:
            raise ValueError("stopping threshold kappa0 must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be a positive integer")


def weight(z, params: CarlemanParams):
    """``exp(2 lam (z - z0)**-2)``."""
    z = np.asarray(z, dtype=float)
    out = np.exp(2.0 * params.lam / (z - params.z0) ** 2)
    return out.item() if out.ndim == 0 else out


def _weight(z, lam, z0):
    return np.exp(2.0 * lam / (np.asarray(z, dtype=float) - z0) ** 2)


# -- z stencils --------------------------------------------------------------

def _d2_matrix(nz: int, h: float) -> np.ndarray:
    D = np.zeros((nz, nz))
    for i in range(1, nz - 1):
        D[i, i - 1:i + 2] = (1.0, -2.0, 1.0)
    D[0, :3] = (1.0, -2.0, 1.0)
    D[-1, -3:] = (1.0, -2.0, 1.0)
    return D / h**2


def _d1_matrix(nz: int, h: float) -> np.ndarray:
    D = np.zeros((nz, nz))
    for i in range(1, nz - 1):
        D[i, i - 1] = -1.0
        D[i, i + 1] = 1.0
    D[0, :3] = (-3.0, 4.0, -1.0)
    D[-1, -3:] = (1.0, -4.0, 3.0)
    return D / (2.0 * h)


def endpoint_derivative_stencils(nz: int, h: float):
    """Second-order one-sided ``v'`` at ``z = -R`` and ``z = +R``."""
    D1 = _d1_matrix(nz, h)
    return D1[0], D1[-1]


def _trapezoid(nz: int, h: float) -> np.ndarray:
    w = np.full(nz, h)
    w[0] = w[-1] = 0.5 * h
    return w


def l2_norm(values, zgrid) -> float:
    """``sqrt(sum_m int |v_m|^2 dz)`` by the trapezoid rule."""
    zgrid = np.asarray(zgrid)
    w = _trapezoid(zgrid.size, float(zgrid[1] - zgrid[0]))
    return float(np.sqrt(np.sum(np.asarray(values) ** 2 * w)))


def h2_norm(values, zgrid) -> float:
    zgrid = np.asarray(zgrid)
    h = float(zgrid[1] - zgrid[0])
    v = np.asarray(values)
    return math.sqrt(l2_norm(v, zgrid) ** 2
                     + l2_norm(v @ _d1_matrix(zgrid.size, h).T, zgrid) ** 2
                     + l2_norm(v @ _d2_matrix(zgrid.size, h).T, zgrid) ** 2)


# -- quadratic system ---------------------------------------------------------

@dataclass
class QuadraticSystem:
    """``J(x) = x.A.x - 2 b.x + const`` with ``A`` in LAPACK upper banded storage.

    ``x`` is z-major: ``x[i * block + m] = v_m(z_i)``.
    """

    ab: np.ndarray
    rhs: np.ndarray
    const: float
    block: int
    _factor: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.rhs.size

    @property
    def bandwidth(self) -> int:
        return self.ab.shape[0] - 1

    def factor(self) -> np.ndarray:
        if self._factor is None:
            try:
                self._factor = cholesky_banded(self.ab, lower=False, check_finite=True)
            except LinAlgError as exc:
                raise SingularSystem(
                    "banded Cholesky failed; eps is too small for this system"
                ) from exc
        return self._factor

    def with_rhs(self, rhs, const: float) -> "QuadraticSystem":
        """Same matrix (and factor) with a new right-hand side."""
        return QuadraticSystem(self.ab, np.asarray(rhs, dtype=float), float(const),
                               self.block, self._factor)

    def to_sparse(self):
        u = self.bandwidth
        n = self.n
        data = []
        offsets = []
        for k in range(u + 1):
            diag = self.ab[u - k]
            data.append(diag)
            offsets.append(k)
            if k:
                lower = np.zeros(n)
                lower[: n - k] = diag[k:]
                data.append(lower)
                offsets.append(-k)
        return dia_matrix((np.array(data), offsets), shape=(n, n)).tocsr()

    def matvec(self, x) -> np.ndarray:
        return self.to_sparse() @ np.asarray(x, dtype=float)

    def value(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(x @ self.matvec(x) - 2.0 * self.rhs @ x + self.const)

    def gradient(self, x) -> np.ndarray:
        return 2.0 * (self.matvec(x) - self.rhs)


def minimize(system: QuadraticSystem) -> np.ndarray:
    """Solve ``A x = b`` by banded Cholesky.

    Raises
    ------
    SingularSystem
        If the factorization fails or the relative residual exceeds 1e-8.
    """
    factor = system.factor()
    x = cho_solve_banded((factor, False), system.rhs, check_finite=False)
    b_norm = np.linalg.norm(system.rhs)
    if b_norm > 0:
        rel = np.linalg.norm(system.matvec(x) - system.rhs) / b_norm
        if not rel <= 1e-8:
            raise SingularSystem(f"relative residual {rel:.3e} of the banded solve exceeds 1e-8")
    return x


def _pack_upper_banded(blocks, nz: int, m: int) -> np.ndarray:
    """``blocks[d][i]`` is the ``(i, i + d)`` block, ``d = 0, 1, 2``."""
    u = 3 * m - 1
    n = nz * m
    ab = np.zeros((u + 1, n))
    rows = np.arange(m)[:, None]
    cols = np.arange(m)[None, :]
    for d, per_node in enumerate(blocks):
        for i, block in enumerate(per_node):
            j = i + d
            r = i * m + rows
            c = j * m + cols
            band_row = u + r - c
            mask = np.broadcast_to(r <= c, (m, m))
            ab[band_row[mask], np.broadcast_to(c, (m, m))[mask]] = block[mask]
    return ab


class CarlemanAssembler:
    """Normal equations of ``J`` for fixed operators, parameters and z grid."""

    def __init__(self, ops: GalerkinOperators, params: CarlemanParams, zgrid):
        self.ops = ops
        self.params = params
        self.zgrid = np.asarray(zgrid, dtype=float)
        nz = self.zgrid.size
        if nz < 5:
            raise ValueError("need at least 5 z nodes")
        self.h = h = float(self.zgrid[1] - self.zgrid[0])
        m = ops.size
        lam = params.lam
        w = _weight(self.zgrid, lam, params.z0)

        interior = np.zeros(nz)
        interior[1:-1] = w[1:-1] * h
        self.residual_weights = interior
        self.beta_minus = lam**4 * w[0]
        self.beta_plus = lam**4 * w[-1]
        self.d_minus, self.d_plus = endpoint_derivative_stencils(nz, h)

        D2 = _d2_matrix(nz, h)
        D1 = _d1_matrix(nz, h)
        trap = _trapezoid(nz, h)
        Wr = np.diag(interior)
        # K = kron(D2, I) + kron(E, S) on interior rows; expand K^T W K
        z_II = D2.T @ Wr @ D2
        z_IS = D2.T @ Wr          # multiplies S (block (i, j) gets z_IS[i, j] S)
        z_SS = Wr                 # multiplies S^T S (diagonal blocks only)
        e_minus = np.zeros(nz)
        e_minus[0] = 1.0
        e_plus = np.zeros(nz)
        e_plus[-1] = 1.0
        z_II = z_II + self.beta_minus * (np.outer(e_minus, e_minus) + np.outer(self.d_minus, self.d_minus))
        z_II = z_II + self.beta_plus * (np.outer(e_plus, e_plus) + np.outer(self.d_plus, self.d_plus))
        H = np.diag(trap) + D1.T @ np.diag(trap) @ D1 + D2.T @ np.diag(trap) @ D2
        z_II = z_II + params.eps * H

        S = ops.S
        StS = S.T @ S
        eye = np.eye(m)
        blocks = [[], [], []]
        for d in range(3):
            for i in range(nz - d):
                j = i + d
                block = z_II[i, j] * eye
                # kron(D2^T W, S) + kron(W D2, S^T): (i, j) gets z_IS[i, j] S + z_IS[j, i] S^T
                block = block + z_IS[i, j] * S + z_IS[j, i] * S.T
                if d == 0:
                    block = block + z_SS[i, i] * StS
                blocks[d].append(block)
        self._ab = _pack_upper_banded(blocks, nz, m)
        self._template = QuadraticSystem(self._ab, np.zeros(nz * m), 0.0, m)
        self._D2 = D2

    def system(self, F_source, cauchy: CauchyData) -> QuadraticSystem:
        """Right-hand side for source ``F_source`` (shape ``(size, nz)``)."""
        F_source = np.asarray(F_source, dtype=float)
        target = -F_source.T                       # (nz, m): residual rows want D2 v + S v = -F
        weighted = self.residual_weights[:, None] * target
        b = self._D2.T @ weighted + weighted @ self.ops.S
        b[0] += self.beta_minus * cauchy.P_minus
        b[-1] += self.beta_plus * cauchy.P_plus
        b += self.beta_minus * np.outer(self.d_minus, cauchy.Q_minus)
        b += self.beta_plus * np.outer(self.d_plus, cauchy.Q_plus)
        const = float(np.sum(self.residual_weights[:, None] * target**2))
        const += self.beta_minus * (cauchy.P_minus @ cauchy.P_minus + cauchy.Q_minus @ cauchy.Q_minus)
        const += self.beta_plus * (cauchy.P_plus @ cauchy.P_plus + cauchy.Q_plus @ cauchy.Q_plus)
        return self._template.with_rhs(b.ravel(), const)

    def share_factor(self, system: QuadraticSystem) -> None:
        self._template._factor = system.factor()


def build_normal_equations(ops: GalerkinOperators, F_source, cauchy: CauchyData,
                           params: CarlemanParams, zgrid) -> QuadraticSystem:
    return CarlemanAssembler(ops, params, zgrid).system(F_source, cauchy)


def functional_value(values, ops: GalerkinOperators, F_source, cauchy: CauchyData,
                     params: CarlemanParams, zgrid) -> float:
    """``J`` evaluated directly from the residual, without the normal matrix."""
    zgrid = np.asarray(zgrid, dtype=float)
    profile = ModeProfile(zgrid, np.asarray(values, dtype=float))
    h = profile.h
    nz = zgrid.size
    w = _weight(zgrid, params.lam, params.z0)
    r = residual(ops, profile, F_source)
    total = float(np.sum(w[1:-1] * h * np.sum(r[:, 1:-1] ** 2, axis=0)))
    v = profile.values
    d_minus, d_plus = endpoint_derivative_stencils(nz, h)
    lam4 = params.lam**4
    total += lam4 * w[-1] * (np.sum((v[:, -1] - cauchy.P_plus) ** 2) + np.sum((v @ d_plus - cauchy.Q_plus) ** 2))
    total += lam4 * w[0] * (np.sum((v[:, 0] - cauchy.P_minus) ** 2) + np.sum((v @ d_minus - cauchy.Q_minus) ** 2))
    total += params.eps * h2_norm(v, zgrid) ** 2
    return total


def _unflatten(x, m: int, nz: int) -> np.ndarray:
    return np.asarray(x).reshape(nz, m).T


def _flatten(values) -> np.ndarray:
    return np.asarray(values).T.ravel()


def initial_guess(ops: GalerkinOperators, cauchy: CauchyData, params: CarlemanParams,
                  zgrid, assembler: Optional[CarlemanAssembler] = None) -> ModeProfile:
    """Minimizer of ``J`` with the nonlinearity dropped (``F = 0``)."""
    zgrid = np.asarray(zgrid, dtype=float)
    assembler = assembler or CarlemanAssembler(ops, params, zgrid)
    system = assembler.system(np.zeros((ops.size, zgrid.size)), cauchy)
    assembler.share_factor(system)
    return ModeProfile(zgrid, _unflatten(minimize(system), ops.size, zgrid.size))


# -- Picard iteration ---------------------------------------------------------

@dataclass(frozen=True)
class IterationRecord:
    k: int
    l2_change: float
    rel_linf_change: float
    J_value: float
    h2_norm: float


@dataclass
class IterationTrace:
    records: List[IterationRecord] = field(default_factory=list)
    converged: bool = False

    def __len__(self):
        return len(self.records)

    @property
    def iterations(self) -> int:
        return self.records[-1].k if self.records else 0

    @property
    def l2_changes(self) -> np.ndarray:
        return np.array([r.l2_change for r in self.records])

    def to_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["k", "l2_change", "rel_linf_change", "J_value", "h2_norm"])
            for r in self.records:
                writer.writerow([r.k, repr(r.l2_change), repr(r.rel_linf_change),
                                 repr(r.J_value), repr(r.h2_norm)])


def picard_solve(ops: GalerkinOperators, cauchy: CauchyData, params: CarlemanParams, zgrid):
    """Iterate ``v <- argmin J_v`` from the linear initial guess.

    Stops once the L2 change between consecutive iterates is at most
    ``kappa0``.  Returns ``(profile, trace)``.

    Raises
    ------
    MaxItersExceeded
        After ``max_iters`` updates without meeting the stopping rule; the
        last iterate and the trace are attached to the exception.
    """
    zgrid = np.asarray(zgrid, dtype=float)
    assembler = CarlemanAssembler(ops, params, zgrid)
    current = initial_guess(ops, cauchy, params, zgrid, assembler)
    trace = IterationTrace()
    m, nz = ops.size, zgrid.size
    for k in range(1, params.max_iters + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            F_source = eval_F(ops, current.values)
            system = assembler.system(F_source, cauchy)
        if not (np.isfinite(system.rhs).all() and math.isfinite(system.const)):
            raise MaxItersExceeded(
                f"Picard iterates diverged (non-finite right-hand side at step {k})",
                profile=current, trace=trace,
            )
        x = minimize(system)
        nxt = _unflatten(x, m, nz)
        diff = nxt - current.values
        change = l2_norm(diff, zgrid)
        peak = np.max(np.abs(nxt))
        rel = float(np.max(np.abs(diff)) / peak) if peak > 0 else 0.0
        norm2 = h2_norm(nxt, zgrid)
        trace.records.append(IterationRecord(k, change, rel, system.value(x), norm2))
        if norm2 > params.M:
            logger.warning("iterate %d has discrete H2 norm %.3g above M = %.3g", k, norm2, params.M)
        logger.info("picard k=%d l2_change=%.3e rel_linf=%.3e", k, change, rel)
        current = ModeProfile(zgrid, nxt)
        if change <= params.kappa0:
            trace.converged = True
            return current, trace
    raise MaxItersExceeded(
        f"Picard iteration did not reach kappa0 = {params.kappa0} in {params.max_iters} steps",
        profile=current, trace=trace,
    )


# -- numerical check of the weighted estimate ---------------------------------

@dataclass(frozen=True)
class TestFunction:
    """A ``C^2`` function on ``[-R, R]`` with its first two derivatives."""

    name: str
    f: callable
    df: callable
    d2f: callable


def standard_test_functions() -> dict:
    def sine(k):
        a = k * np.pi
        return TestFunction(f"sin({k}pi z)", lambda z: np.sin(a * z),
                            lambda z: a * np.cos(a * z), lambda z: -a * a * np.sin(a * z))

    funcs = [
        TestFunction("1", np.ones_like, np.zeros_like, np.zeros_like),
        TestFunction("z", lambda z: z, np.ones_like, np.zeros_like),
        TestFunction("z^2", lambda z: z**2, lambda z: 2 * z, lambda z: 2 * np.ones_like(z)),
        TestFunction("z^3", lambda z: z**3, lambda z: 3 * z**2, lambda z: 6 * z),
        TestFunction("e^z", np.exp, np.exp, np.exp),
    ]
    funcs += [sine(k) for k in range(1, 6)]
    return {fn.name: fn for fn in funcs}


@dataclass(frozen=True)
class EstimateTerms:
    """Both sides of the estimate for one function and one ``lam``.

    The inequality reads ``lhs >= C * (interior - boundary)``.
    """

    name: str
    lam: float
    lhs: float
    boundary: float
    interior: float

    @property
    def bracket(self) -> float:
        return self.interior - self.boundary

    def holds(self, C: float) -> bool:
        return self.lhs >= C * self.bracket


def estimate_terms(fn: TestFunction, lam: float, R: float, z0: float,
                   panels: int = 20000) -> EstimateTerms:
    """Quadrature of every integral in the estimate (composite Simpson)."""
    from scipy.integrate import simpson

    z = np.linspace(-R, R, panels + 1)
    W = _weight(z, lam, z0)
    w, dw, d2w = fn.f(z), fn.df(z), fn.d2f(z)
    lhs = simpson(W * d2w**2, x=z)
    interior = lam**3 * simpson(W * w**2, x=z) + lam * simpson(W * dw**2, x=z)
    WR = _weight(R, lam, z0)
    WmR = _weight(-R, lam, z0)
    boundary = (WR * (lam**3 * w[-1] ** 2 + lam * dw[-1] ** 2)
                + WmR * (lam**3 * w[0] ** 2 + lam * dw[0] ** 2))
    return EstimateTerms(fn.name, float(lam), float(lhs), float(boundary), float(interior))


@dataclass
class CalibrationReport:
    C: float
    calibration: List[EstimateTerms]
    held_out: List[EstimateTerms]

    @property
    def failures(self) -> List[EstimateTerms]:
        return [t for t in self.held_out if not t.holds(self.C)]

    @property
    def passed(self) -> bool:
        return not self.failures


def verify_carleman_estimate(calibration_functions: Sequence[TestFunction],
                             held_out_functions: Sequence[TestFunction],
                             lambda_grid: Sequence[float],
                             params: CarlemanParams,
                             calibration_lambda: Optional[float] = None,
                             panels: int = 20000) -> CalibrationReport:
    """Calibrate ``C`` and test the weighted estimate on held-out functions.

    ``C`` is the largest constant for which the estimate holds on every
    calibration function at ``calibration_lambda`` (default: the smallest
    value in ``lambda_grid``); functions whose bracket is non-positive
    impose no bound.  The held-out check uses that ``C`` at every ``lam``.

    Raises
    ------
    CalibrationFailed
        If the calibration set forces ``C <= 0``.
    """
    lam_cal = min(lambda_grid) if calibration_lambda is None else calibration_lambda
    cal = [estimate_terms(fn, lam_cal, params.R, params.z0, panels) for fn in calibration_functions]
    bounds = [t.lhs / t.bracket for t in cal if t.bracket > 0]
    C = min(bounds) if bounds else math.inf
    if not C > 0:
        raise CalibrationFailed(f"calibration at lambda = {lam_cal} leaves no positive constant")
    if math.isinf(C):
        C = 1.0
    held = [estimate_terms(fn, lam, params.R, params.z0, panels)
            for fn in held_out_functions for lam in lambda_grid]
    return CalibrationReport(C, cal, held)
