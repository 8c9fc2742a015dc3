"""End-to-end runs: simulate, add noise, reduce, solve, reconstruct, report."""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

from .carleman import CarlemanParams, IterationTrace, picard_solve
from .config import RunConfig
from .exceptions import MaxItersExceeded
from .forward import (BoundaryRecord, NoiseSpec, add_noise_pair, boundary_rows,
                      extract_boundary, solve_forward, write_boundary_csv)
from .galerkin import ModeProfile, assemble_operators, uniform_zgrid
from .phantoms import PhantomSpec, sample_grid
from .reconstruction import CoefficientField, ReconstructionReport, metrics, reconstruct_c
from .reduction import build_cauchy_data, sweep_mismatch, tensor_basis, write_sweep_csv

logger = logging.getLogger(__name__)

EXIT_CONVERGED = 0
EXIT_VALIDATION = 1
EXIT_NOT_CONVERGED = 2


@dataclass
class RunResult:
    config: RunConfig
    profile: ModeProfile
    trace: IterationTrace
    c_comp: CoefficientField
    c_true: CoefficientField
    report: ReconstructionReport
    converged: bool

    @property
    def exit_code(self) -> int:
        return EXIT_CONVERGED if self.converged else EXIT_NOT_CONVERGED


def simulate_boundary(config: RunConfig) -> Tuple[BoundaryRecord, BoundaryRecord]:
    """Noiseless Cauchy data on ``z = +R`` and ``z = -R`` for the configured phantom."""
    grid = config.grid
    phantom = PhantomSpec(config.phantom_kind)
    c_grid = sample_grid(phantom, grid.x, grid.x)
    field = solve_forward(c_grid, config.p_value, grid, time_stride=config.reduce_time_stride,
                          z_rows=boundary_rows(grid, config.R))
    return extract_boundary(field, grid, config.R)


def noisy_boundary(config: RunConfig, clean=None):
    top, bottom = clean if clean is not None else simulate_boundary(config)
    return add_noise_pair(top, bottom, NoiseSpec(config.noise, config.seed))


def carleman_params(config: RunConfig) -> CarlemanParams:
    return CarlemanParams(lam=config.lam, z0=config.z0, eps=config.eps, kappa0=config.kappa0,
                          max_iters=config.max_iters, M=config.M, R=config.R)


def solve(config: RunConfig, records=None) -> RunResult:
    """Run the inverse solver; ``records`` skips the forward simulation when given."""
    config.validate()
    start = time.perf_counter()
    top, bottom = records if records is not None else noisy_boundary(config)
    basis = tensor_basis(float(config.R), float(config.T), config.n1, config.nt)
    cauchy = build_cauchy_data(top, bottom, basis)
    ops = assemble_operators(basis, config.p_value)
    zgrid = uniform_zgrid(config.R, config.nz)
    try:
        profile, trace = picard_solve(ops, cauchy, carleman_params(config), zgrid)
        converged = True
    except MaxItersExceeded as exc:
        logger.warning("%s", exc)
        profile, trace, converged = exc.profile, exc.trace, False
    c_comp = reconstruct_c(profile, basis, config.p_value, top.x)
    phantom = PhantomSpec(config.phantom_kind)
    c_true = CoefficientField(c_comp.x, zgrid, sample_grid(phantom, c_comp.x, zgrid))
    masks = phantom.inclusions(*np.meshgrid(c_comp.x, zgrid, indexing="ij"))
    wall = time.perf_counter() - start
    report = metrics(c_comp.values, c_true.values, masks, iterations=trace.iterations,
                     wall_time=wall, true_max=[1.0] * len(masks))
    return RunResult(config, profile, trace, c_comp, c_true, report, converged)


def report_dict(result: RunResult) -> dict:
    cfg, rep = result.config, result.report
    return {
        "test": cfg.test,
        "noise": cfg.noise,
        "seed": cfg.seed,
        "iterations": rep.iterations,
        "wall_time_seconds": rep.wall_time_seconds,
        "max_in_inclusion": list(rep.max_in_inclusion),
        "relative_max_error": list(rep.relative_max_error),
        "l2_relative_error": rep.l2_relative_error,
        "converged": bool(result.converged),
    }


def write_artifacts(result: RunResult, out_dir, records=None, cauchy=None) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    result.c_true.to_csv(out / "c_true.csv")
    result.c_comp.to_csv(out / "c_comp.csv")
    result.trace.to_csv(out / "convergence.csv")
    if records is not None:
        top, bottom = records
        write_boundary_csv(top, out / "boundary_data_top.csv")
        write_boundary_csv(bottom, out / "boundary_data_bottom.csv")
    if cauchy is not None:
        with (out / "cauchy_data.csv").open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["mode", "P_plus", "P_minus", "Q_plus", "Q_minus"])
            for m in range(cauchy.P_plus.size):
                writer.writerow([m] + [repr(float(a[m])) for a in
                                       (cauchy.P_plus, cauchy.P_minus, cauchy.Q_plus, cauchy.Q_minus)])
    with (out / "report.json").open("w") as fh:
        json.dump(report_dict(result), fh, indent=2)
        fh.write("\n")
    return out


def run_pipeline(config: RunConfig, out_dir: Optional[str] = None) -> RunResult:
    """Full run with artifacts written to ``out_dir`` (default ``config.out``)."""
    config.validate()
    start = time.perf_counter()
    records = noisy_boundary(config)
    result = solve(config, records)
    # wall time covers the forward simulation too
    result.report = dataclasses.replace(result.report, wall_time_seconds=time.perf_counter() - start)
    dump = config.dump_intermediates
    cauchy = None
    if dump:
        basis = tensor_basis(float(config.R), float(config.T), config.n1, config.nt)
        cauchy = build_cauchy_data(*records, basis)
    write_artifacts(result, out_dir or config.out, records if dump else None, cauchy)
    return result


def sweep_cutoff(config: RunConfig, out_dir: Optional[str] = None, side: str = "bottom"):
    """Mismatch table over ``config.sweep_n1 x config.sweep_nt`` on one side's ``f``."""
    config.validate()
    top, bottom = noisy_boundary(config)
    record = bottom if side == "bottom" else top
    n1_values, nt_values = config.sweep_grid
    rows = sweep_mismatch(record.f, record.x, record.t, config.R, config.T, n1_values, nt_values)
    out = Path(out_dir or config.out)
    out.mkdir(parents=True, exist_ok=True)
    write_sweep_csv(rows, out / "cutoff_sweep.csv")
    return rows
