"""Command-line front end: ``carleman-picard solve`` and ``carleman-picard sweep``.

Exit status is 0 when the Picard loop met its stopping rule, 2 when it did
not (artifacts are still written) and 1 when the configuration is invalid.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from .config import TEST_NAMES, load_config
from .exceptions import CarlemanPicardError, ConfigError, MissingArtifact
from .pipeline import EXIT_VALIDATION, run_pipeline, sweep_cutoff

logger = logging.getLogger("carleman_picard")

_HEATMAP = """\
import numpy as np
import matplotlib.pyplot as plt

data = np.loadtxt("{name}.csv", delimiter=",", skiprows=1)
x = np.unique(data[:, 0])
z = np.unique(data[:, 1])
values = data[:, 2].reshape(x.size, z.size)
plt.pcolormesh(x, z, values.T, shading="auto")
plt.colorbar()
plt.xlabel("x")
plt.ylabel("z")
plt.title("{name}")
plt.savefig("{name}.png", dpi=150)
"""

_CONVERGENCE = """\
import numpy as np
import matplotlib.pyplot as plt

data = np.loadtxt("convergence.csv", delimiter=",", skiprows=1, ndmin=2)
plt.semilogy(data[:, 0], data[:, 2], "o-", label="relative Linf change")
plt.semilogy(data[:, 0], data[:, 1], "s--", label="L2 change")
plt.xlabel("iteration")
plt.legend()
plt.savefig("convergence.png", dpi=150)
"""


def emit_plots(run_dir) -> list:
    """Write three matplotlib scripts next to the CSV files of a finished run.

    Raises
    ------
    MissingArtifact
        If one of ``c_true.csv``, ``c_comp.csv`` or ``convergence.csv`` is absent.
    """
    run_dir = Path(run_dir)
    for name in ("c_true.csv", "c_comp.csv", "convergence.csv"):
        if not (run_dir / name).is_file():
            raise MissingArtifact(name)
    written = []
    for name in ("c_true", "c_comp"):
        path = run_dir / f"plot_{name}.py"
        path.write_text(_HEATMAP.format(name=name))
        written.append(path)
    path = run_dir / "plot_convergence.py"
    path.write_text(_CONVERGENCE)
    written.append(path)
    return written


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="carleman-picard",
        description="Reconstruct the zero-order coefficient of a parabolic equation "
                    "from Cauchy data on two opposite sides.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value config file")
    common.add_argument("--test", choices=TEST_NAMES, help="phantom to simulate")
    common.add_argument("--noise", type=float, help="relative noise level delta")
    common.add_argument("--seed", type=int, help="noise seed")
    common.add_argument("--out", help="output directory")
    common.add_argument("--lambda", dest="lam", type=float, help="Carleman parameter")
    common.add_argument("--eps", type=float, help="regularization weight")
    common.add_argument("--kappa0", type=float, help="stopping threshold on the L2 change")
    common.add_argument("--n1", type=int, help="modes in x")
    common.add_argument("--nt", type=int, help="modes in t")
    common.add_argument("--nz", type=int, help="z grid points")
    common.add_argument("--max-iters", dest="max_iters", type=int, help="Picard iteration cap")
    common.add_argument("--dump-intermediates", dest="dump_intermediates", action="store_true",
                        default=None, help="also write boundary data and Cauchy tensors")
    common.add_argument("-v", "--verbose", action="store_true", help="log every iteration")
    solve = sub.add_parser("solve", parents=[common], help="run the full reconstruction")
    solve.add_argument("--plots", action="store_true", help="write plotting scripts into --out")
    sweep = sub.add_parser("sweep", parents=[common], help="tabulate the cutoff mismatch")
    sweep.add_argument("--side", choices=("bottom", "top"), default="bottom")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = {key: getattr(args, key) for key in
                 ("test", "noise", "seed", "out", "lam", "eps", "kappa0", "n1", "nt", "nz",
                  "max_iters", "dump_intermediates")}
    try:
        config = load_config(args.config, **overrides).validate()
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        if args.command == "sweep":
            rows = sweep_cutoff(config, side=args.side)
            for n1, nt, value in rows:
                print(f"N1={n1:2d} Nt={nt:2d} sup mismatch {value:.3e}")
            return 0
        result = run_pipeline(config)
        if args.plots:
            emit_plots(config.out)
    except CarlemanPicardError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    rep = result.report
    status = "converged" if result.converged else "did not converge"
    peaks = ", ".join(f"{v:.4g}" for v in rep.max_in_inclusion)
    print(f"{config.test}: {status} after {rep.iterations} iterations, "
          f"max in inclusion [{peaks}], L2 relative error {rep.l2_relative_error:.4g}")
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
