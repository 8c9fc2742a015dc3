"""Run configuration: a flat ``key = value`` file with command-line overrides.

Every default reproduces the published numerical setup, so an empty config
file (or none at all) runs the reference experiment.  Lines starting with
``#`` are comments.  Values such as ``10^-6.5`` are accepted for
floating-point keys.
"""

from __future__ import annotations

import dataclasses
import re
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Dict, Tuple

from .basis import MAX_MODES
from .exceptions import ConfigError
from .forward import STABILITY_LIMIT, ForwardGrid
from .phantoms import KINDS

TEST_NAMES = ("zero", "ellipse", "two-bars", "letter-t")


@dataclass(frozen=True)
class RunConfig:
    test: str = "ellipse"
    noise: float = 0.05
    seed: int = 1
    # geometry and forward grid
    R: float = 1.0
    R1: float = 3.0
    T: float = 0.5
    nx: int = 241
    n_time: int = 4001
    p_value: float = 2.0
    reduce_time_stride: int = 10
    # reduction
    n1: int = 15
    nt: int = 10
    # Carleman-Picard solver
    nz: int = 81
    lam: float = 10.0
    z0: float = -10.0
    eps: float = 10.0**-6.5
    kappa0: float = 1e-3
    max_iters: int = 50
    M: float = 1e6
    # outputs
    out: str = "runs/out"
    dump_intermediates: bool = False
    sweep_n1: str = "5,10,15"
    sweep_nt: str = "5,8,10"

    @property
    def phantom_kind(self) -> str:
        return self.test.replace("-", "_")

    @property
    def grid(self) -> ForwardGrid:
        return ForwardGrid(self.R1, self.nx, self.T, self.n_time)

    @property
    def sweep_grid(self) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
        return _int_list(self.sweep_n1, "sweep_n1"), _int_list(self.sweep_nt, "sweep_nt")

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    def validate(self) -> "RunConfig":
        """Check every precondition of the pipeline; raise ConfigError naming the first violation."""
        if self.test not in TEST_NAMES and self.test not in KINDS:
            raise ConfigError(f"test must be one of {TEST_NAMES}, got {self.test!r}")
        if not 0.0 <= self.noise < 1.0:
            raise ConfigError(f"noise level must satisfy 0 <= noise < 1, got {self.noise}")
        if self.nx < 3 or self.n_time < 2:
            raise ConfigError("grid sizes need nx >= 3 and n_time >= 2")
        if not (self.R > 0 and self.R1 > self.R and self.T > 0):
            raise ConfigError(f"geometry needs 0 < R < R1 and T > 0 (R={self.R}, R1={self.R1}, T={self.T})")
        grid = ForwardGrid(self.R1, self.nx, self.T, self.n_time)
        if grid.ratio > STABILITY_LIMIT * (1 + 1e-12):
            raise ConfigError(
                f"stability ratio dt/dx^2 = {grid.ratio:.4g} exceeds {STABILITY_LIMIT}"
            )
        for value in (self.R, -self.R):
            pos = (value + self.R1) / grid.dx
            if abs(pos - round(pos)) > 1e-9 * max(1.0, abs(pos)):
                raise ConfigError(f"boundary line z = {value} is not a grid line (dx = {grid.dx})")
        if self.reduce_time_stride < 1 or (self.n_time - 1) % self.reduce_time_stride:
            raise ConfigError(
                f"reduce_time_stride = {self.reduce_time_stride} must divide n_time - 1 = {self.n_time - 1}"
            )
        if not self.p_value > 0:
            raise ConfigError(f"initial value p must be positive, got {self.p_value}")
        for name in ("n1", "nt"):
            value = getattr(self, name)
            if not 1 <= value <= MAX_MODES:
                raise ConfigError(f"cutoff {name} = {value} outside 1..{MAX_MODES}")
        if self.nz < 5:
            raise ConfigError(f"nz = {self.nz} must be at least 5")
        if not self.lam >= 1:
            raise ConfigError(f"Carleman parameter lambda must be >= 1, got {self.lam}")
        if not self.z0 < -self.R:
            raise ConfigError(f"z0 = {self.z0} must be strictly below -R = {-self.R}")
        if not self.eps > 0:
            raise ConfigError(f"regularization eps must be positive, got {self.eps}")
        if not self.kappa0 > 0:
            raise ConfigError(f"stopping threshold kappa0 must be positive, got {self.kappa0}")
        if self.max_iters < 1:
            raise ConfigError(f"max_iters must be a positive integer, got {self.max_iters}")
        if not self.M > 0:
            raise ConfigError(f"ball radius M must be positive, got {self.M}")
        for values, name in zip(self.sweep_grid, ("sweep_n1", "sweep_nt")):
            if not values or any(not 1 <= v <= MAX_MODES for v in values):
                raise ConfigError(f"{name} entries must lie in 1..{MAX_MODES}")
        return self


def _int_list(text: str, name: str) -> Tuple[int, ...]:
    try:
        return tuple(int(tok) for tok in str(text).replace(" ", "").split(",") if tok)
    except ValueError as exc:
        raise ConfigError(f"{name} must be a comma-separated list of integers, got {text!r}") from exc


_POWER = re.compile(r"^\s*([-+]?[\d.]+)\s*(?:\^|\*\*)\s*([-+]?[\d.]+)\s*$")


def _parse_float(text: str) -> float:
    match = _POWER.match(text)
    if match:
        return float(match.group(1)) ** float(match.group(2))
    return float(text)


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}
_ALIASES = {"lambda": "lam", "epsilon": "eps", "N1": "n1", "Nt": "nt", "Nz": "nz",
            "Nx1": "nx", "NtTime": "n_time", "p": "p_value", "delta": "noise"}


def coerce(key: str, raw) -> Tuple[str, object]:
    """Map a (possibly aliased) key and raw value to a typed RunConfig field."""
    name = _ALIASES.get(key, key).replace("-", "_")
    if name not in _FIELD_TYPES:
        raise ConfigError(f"unknown config key {key!r}")
    kind = _FIELD_TYPES[name]
    if not isinstance(raw, str):
        return name, raw
    try:
        if kind == "float":
            return name, _parse_float(raw)
        if kind == "int":
            return name, int(raw)
        if kind == "bool":
            return name, _parse_bool(raw)
    except ValueError as exc:
        raise ConfigError(f"config key {key!r}: cannot parse {raw!r} as {kind}") from exc
    return name, raw.strip()


def parse_config_text(text: str) -> Dict[str, object]:
    values: Dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        name, value = coerce(key, raw)
        values[name] = value
    return values


def load_config(path=None, **overrides) -> RunConfig:
    """Defaults, then the file at ``path`` (if any), then non-None ``overrides``."""
    values: Dict[str, object] = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file {path} does not exist")
        values.update(parse_config_text(path.read_text()))
    for key, value in overrides.items():
        if value is not None:
            name, typed = coerce(key, value)
            values[name] = typed
    return RunConfig(**values)


def write_config(config: RunConfig, path) -> None:
    lines = [f"{f.name} = {getattr(config, f.name)!r}".replace("'", "") for f in fields(config)]
    Path(path).write_text("\n".join(lines) + "\n")
