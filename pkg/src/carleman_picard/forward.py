"""Simulated measurements: explicit finite differences for ``u_t = Lap u + c u``.

The solver works on ``G = (-R1, R1)^2`` with a uniform grid and the standard
five-point Laplacian, marching forward in time with the explicit Euler step.
Cauchy data ``f = u`` and ``g = u_z`` are then read off on the lines
``z = +R`` and ``z = -R`` for ``|x| <= R``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .exceptions import GridMismatch, NonFiniteField, StabilityViolation

STABILITY_LIMIT = 0.25
_GRID_TOL = 1e-9

BoundaryRule = Callable[[np.ndarray, np.ndarray, float], np.ndarray]


@dataclass(frozen=True)
class ForwardGrid:
    """Uniform space-time grid on ``[-R1, R1]^2 x [0, T]``.

    ``n_x`` counts points per spatial axis and ``n_time`` counts time
    levels including ``t = 0``.
    """

    R1: float = 3.0
    n_x: int = 241
    T: float = 0.5
    n_time: int = 4001

    def __post_init__(self):
        if self.n_x < 3:
            raise ValueError("n_x must be at least 3")
        if self.n_time < 2:
            raise ValueError("n_time must be at least 2")
        if self.R1 <= 0 or self.T <= 0:
            raise ValueError("R1 and T must be positive")

    @property
    def dx(self) -> float:
        return 2.0 * self.R1 / (self.n_x - 1)

    @property
    def dt(self) -> float:
        return self.T / (self.n_time - 1)

    @property
    def ratio(self) -> float:
        """``dt / dx**2``; the explicit scheme needs this <= 0.25."""
        return self.dt / self.dx**2

    @property
    def x(self) -> np.ndarray:
        return -self.R1 + self.dx * np.arange(self.n_x)

    @property
    def t(self) -> np.ndarray:
        return self.dt * np.arange(self.n_time)

    def line_index(self, value: float) -> int:
        """Index of the grid line at coordinate ``value``; GridMismatch if off-grid."""
        pos = (value + self.R1) / self.dx
        j = int(round(pos))
        if abs(pos - j) > _GRID_TOL * max(1.0, abs(pos)) or not 0 <= j < self.n_x:
            raise GridMismatch(f"coordinate {value} is not a grid line (dx = {self.dx})")
        return j


@dataclass(frozen=True)
class ForwardField:
    """Stored samples ``values[i, j, l] = u(x[i], z[j], t[l])``.

    ``z_index`` and ``t_index`` give the positions of the stored rows and
    time levels in the full grid; by default everything is kept.
    """

    values: np.ndarray
    x: np.ndarray
    z: np.ndarray
    t: np.ndarray
    z_index: np.ndarray
    t_index: np.ndarray


@dataclass(frozen=True)
class BoundaryRecord:
    """Cauchy data on one side: ``f[i, l] = u(x_i, z, t_l)``, ``g = u_z`` there."""

    side: str
    z: float
    x: np.ndarray
    t: np.ndarray
    f: np.ndarray
    g: np.ndarray

    def to_csv(self, path) -> None:
        write_boundary_csv(self, path)


@dataclass(frozen=True)
class NoiseSpec:
    delta: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.delta < 1.0:
            raise ValueError("noise level delta must satisfy 0 <= delta < 1")


def exponential_rule(amplitude: float, rate: float) -> BoundaryRule:
    """Boundary values of the exact solution ``amplitude * exp(rate t)``."""

    def rule(x, z, t):
        return np.full(np.broadcast(x, z).shape, amplitude * np.exp(rate * t))

    return rule


def solve_forward(
    c_grid,
    p_value: float,
    grid: ForwardGrid,
    boundary_rule: Optional[BoundaryRule] = None,
    *,
    time_stride: int = 1,
    z_rows: Optional[Sequence[int]] = None,
    observer: Optional[Callable[[int, np.ndarray], None]] = None,
) -> ForwardField:
    """March the explicit scheme from ``u(., 0) = p_value`` to ``t = T``.

    Parameters
    ----------
    c_grid : array_like, shape (n_x, n_x) or scalar
        Coefficient sampled at ``(x_i, z_j)``, first axis ``x``.
    p_value : float
        Constant initial value.
    boundary_rule : callable, optional
        ``rule(x, z, t)`` giving values on the edge of ``G``.  The default
        freezes the edge at ``p_value``.
    time_stride : int
        Keep every ``time_stride``-th level (the last level is always
        reachable when ``(n_time - 1) % time_stride == 0``).
    z_rows : sequence of int, optional
        Restrict storage to these ``z`` rows; the full field at 241 x 241 x
        4001 does not fit comfortably in memory.
    observer : callable, optional
        Called as ``observer(l, u)`` with every time level, stored or not.

    Raises
    ------
    StabilityViolation
        If ``dt / dx**2 > 0.25``.
    NonFiniteField
        If the march produces inf or nan.
    """
    if grid.ratio > STABILITY_LIMIT * (1 + 1e-12):
        raise StabilityViolation(
            f"stability ratio dt/dx^2 = {grid.ratio:.4g} exceeds {STABILITY_LIMIT}"
        )
    n = grid.n_x
    c = np.broadcast_to(np.asarray(c_grid, dtype=float), (n, n))
    x = grid.x
    X, Z = np.meshgrid(x, x, indexing="ij")
    edge = np.zeros((n, n), dtype=bool)
    edge[0, :] = edge[-1, :] = edge[:, 0] = edge[:, -1] = True

    rows = np.arange(n) if z_rows is None else np.asarray(z_rows, dtype=int)
    levels = np.arange(0, grid.n_time, time_stride)
    stored = np.empty((n, rows.size, levels.size))

    u = np.full((n, n), float(p_value))
    if boundary_rule is not None:
        u[edge] = boundary_rule(X[edge], Z[edge], 0.0)
    stored[:, :, 0] = u[:, rows]
    if observer is not None:
        observer(0, u)

    k = grid.dt / grid.dx**2
    dt = grid.dt
    c_in = c[1:-1, 1:-1]
    nxt = np.empty_like(u)
    slot = 1
    for level in range(1, grid.n_time):
        centre = u[1:-1, 1:-1]
        lap = u[2:, 1:-1] + u[:-2, 1:-1] + u[1:-1, 2:] + u[1:-1, :-2] - 4.0 * centre
        nxt[1:-1, 1:-1] = centre + k * lap + dt * c_in * centre
        if boundary_rule is None:
            nxt[edge] = u[edge]
        else:
            nxt[edge] = boundary_rule(X[edge], Z[edge], level * dt)
        u, nxt = nxt, u
        if not np.isfinite(u).all():
            raise NonFiniteField(f"non-finite value at time level {level}")
        if observer is not None:
            observer(level, u)
        if slot < levels.size and level == levels[slot]:
            stored[:, :, slot] = u[:, rows]
            slot += 1

    return ForwardField(stored, x, x[rows], levels * grid.dt, rows, levels)


def boundary_rows(grid: ForwardGrid, R: float) -> np.ndarray:
    """The six ``z`` rows needed by :func:`extract_boundary`."""
    top = grid.line_index(R)
    bottom = grid.line_index(-R)
    return np.array([bottom, bottom + 1, bottom + 2, top - 2, top - 1, top])


def extract_boundary(field: ForwardField, grid: ForwardGrid, R: float):
    """Cauchy data ``(top, bottom)`` on ``z = +R`` and ``z = -R``.

    ``g`` is the plain partial ``u_z`` (not the outward normal derivative),
    by second-order one-sided differences pointing into the domain.
    """
    if not 0 < R < grid.R1:
        raise GridMismatch(f"R = {R} must lie inside (0, R1 = {grid.R1})")
    top = grid.line_index(R)
    bottom = grid.line_index(-R)
    where = {int(j): k for k, j in enumerate(field.z_index)}
    needed = [bottom, bottom + 1, bottom + 2, top - 2, top - 1, top]
    missing = [j for j in needed if j not in where]
    if missing:
        raise GridMismatch(f"field does not store z rows {missing}")

    def row(j):
        return field.values[bottom:top + 1, where[j], :]

    h = grid.dx
    xs = field.x[bottom:top + 1]
    f_top = row(top).copy()
    g_top = (3.0 * row(top) - 4.0 * row(top - 1) + row(top - 2)) / (2.0 * h)
    f_bot = row(bottom).copy()
    g_bot = (-3.0 * row(bottom) + 4.0 * row(bottom + 1) - row(bottom + 2)) / (2.0 * h)
    t = field.t.copy()
    return (
        BoundaryRecord("top", R, xs.copy(), t, f_top, g_top),
        BoundaryRecord("bottom", -R, xs.copy(), t, f_bot, g_bot),
    )


def add_noise(record: BoundaryRecord, spec: NoiseSpec, rng=None) -> BoundaryRecord:
    """Multiply every sample of ``f`` then ``g`` by ``1 + eta``, ``eta ~ U[-delta, delta]``.

    ``rng`` defaults to a fresh generator seeded with ``spec.seed``; pass a
    shared generator to draw several records from one stream.
    """
    if spec.delta == 0.0:
        return record
    if rng is None:
        rng = np.random.default_rng(spec.seed)
    eta_f = rng.uniform(-spec.delta, spec.delta, size=record.f.shape)
    eta_g = rng.uniform(-spec.delta, spec.delta, size=record.g.shape)
    return BoundaryRecord(
        record.side, record.z, record.x, record.t,
        record.f * (1.0 + eta_f), record.g * (1.0 + eta_g),
    )


def add_noise_pair(top: BoundaryRecord, bottom: BoundaryRecord, spec: NoiseSpec):
    """Noise both sides from one seeded stream, top side first."""
    rng = np.random.default_rng(spec.seed)
    return add_noise(top, spec, rng), add_noise(bottom, spec, rng)


def write_boundary_csv(record: BoundaryRecord, path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["x", "t", "f", "g"])
        for i, xi in enumerate(record.x):
            for l, tl in enumerate(record.t):
                writer.writerow([repr(float(xi)), repr(float(tl)),
                                 repr(float(record.f[i, l])), repr(float(record.g[i, l]))])


def read_boundary_csv(path, side: str, z: float) -> BoundaryRecord:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    x = np.unique(data[:, 0])
    t = np.unique(data[:, 1])
    shape = (x.size, t.size)
    return BoundaryRecord(side, z, x, t, data[:, 2].reshape(shape), data[:, 3].reshape(shape))
