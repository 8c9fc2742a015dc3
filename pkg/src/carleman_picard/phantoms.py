"""True coefficients used to generate data and grade reconstructions."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Tuple

import numpy as np

KINDS = ("zero", "ellipse", "two_bars", "letter_t", "constant")

_ELLIPSE_RADIUS = 0.55
_ELLIPSE_CENTER_Z = 0.4
_ELLIPSE_X_SCALE = 0.35

# (x_lo, x_hi, z_lo, z_hi) rectangles; the T geometry is a free choice
DEFAULT_LETTER_T = ((-0.5, 0.5, 0.4, 0.7), (-0.15, 0.15, -0.6, 0.4))


@dataclass(frozen=True)
class PhantomSpec:
    """A known coefficient on ``Omega = (-1, 1)^2``.

    ``params`` carries kind-specific settings: ``c0`` for ``constant``,
    ``rectangles`` for ``letter_t``.
    """

    kind: str = "ellipse"
    params: Dict = field(default_factory=dict)

    def __post_init__(self):
        kind = self.kind.replace("-", "_")
        if kind not in KINDS:
            raise ValueError(f"unknown phantom kind {self.kind!r}; expected one of {KINDS}")
        object.__setattr__(self, "kind", kind)

    def __call__(self, x, z):
        return eval_phantom(self, x, z)

    def inclusions(self, x, z) -> List[np.ndarray]:
        """Masks of the true supports, one per inclusion, on the given points."""
        x, z = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(z, dtype=float))
        if self.kind == "ellipse":
            return [_ellipse_r2(x, z) < _ELLIPSE_RADIUS**2]
        if self.kind == "two_bars":
            return [_bar(x, z, 0.6), _bar(x, z, -0.6)]
        if self.kind == "letter_t":
            return [_letter_t(x, z, self.params.get("rectangles", DEFAULT_LETTER_T))]
        return []


def _ellipse_r2(x, z):
    return _ELLIPSE_X_SCALE * x**2 + (z - _ELLIPSE_CENTER_Z) ** 2


def _inside_omega(x, z):
    return (np.abs(x) < 1.0) & (np.abs(z) < 1.0)


def _bar(x, z, center):
    # the x-condition alone would reach |x| < 3.2, far outside Omega
    return (np.maximum(0.25 * np.abs(x), 4.0 * np.abs(z - center)) < 0.8) & _inside_omega(x, z)


def _letter_t(x, z, rectangles):
    mask = np.zeros(np.broadcast(x, z).shape, dtype=bool)
    for x_lo, x_hi, z_lo, z_hi in rectangles:
        mask |= (x >= x_lo) & (x <= x_hi) & (z >= z_lo) & (z <= z_hi)
    return mask & _inside_omega(x, z)


def eval_phantom(spec: PhantomSpec, x, z):
    """Value of the phantom at ``(x, z)``; broadcasts over arrays.

    Every kind except ``constant`` vanishes on and outside the square
    ``Omega = (-1, 1)^2``.

    The ellipse is the smooth bump ``exp(-r2 / (0.55**2 - r2))`` with
    ``r2 = 0.35 x**2 + (z - 0.4)**2``, so its maximum is 1 at ``(0, 0.4)``.
    """
    x, z = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(z, dtype=float))
    if spec.kind == "zero":
        out = np.zeros(x.shape)
    elif spec.kind == "constant":
        out = np.full(x.shape, float(spec.params.get("c0", 0.0)))
    elif spec.kind == "ellipse":
        r2 = _ellipse_r2(x, z)
        inside = r2 < _ELLIPSE_RADIUS**2
        out = np.zeros(x.shape)
        out[inside] = np.exp(-r2[inside] / (_ELLIPSE_RADIUS**2 - r2[inside]))
    elif spec.kind == "two_bars":
        out = (_bar(x, z, 0.6) | _bar(x, z, -0.6)).astype(float)
    else:
        rects = spec.params.get("rectangles", DEFAULT_LETTER_T)
        out = _letter_t(x, z, rects).astype(float)
    return out.item() if out.ndim == 0 else out


def sample_grid(spec: PhantomSpec, x, z) -> np.ndarray:
    """``values[i, j] = c(x[i], z[j])``."""
    X, Z = np.meshgrid(np.asarray(x, dtype=float), np.asarray(z, dtype=float), indexing="ij")
    return np.asarray(eval_phantom(spec, X, Z), dtype=float)


def write_grid_csv(x, z, values, path) -> None:
    """Rows ``x,z,value`` with ``z`` varying fastest."""
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["x", "z", "value"])
        for i, xi in enumerate(x):
            for j, zj in enumerate(z):
                writer.writerow([repr(float(xi)), repr(float(zj)), repr(float(values[i, j]))])


def read_grid_csv(path) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    x = np.unique(data[:, 0])
    z = np.unique(data[:, 1])
    return x, z, data[:, 2].reshape(x.size, z.size)
