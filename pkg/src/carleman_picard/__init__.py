"""Coefficient reconstruction for ``u_t = Lap u + c u`` by dimension reduction
and a Carleman-weighted Picard iteration.

The pipeline is split into small modules:

* :mod:`.basis` builds the polynomial-exponential bases,
* :mod:`.forward` simulates measurements,
* :mod:`.reduction` turns boundary records into Cauchy data,
* :mod:`.galerkin` assembles the reduced ODE system,
* :mod:`.carleman` solves it,
* :mod:`.reconstruction` recovers ``c`` and grades it.
"""

from .basis import OrthonormalBasis1D, TensorBasis, orthonormalize
from .carleman import CarlemanParams, IterationTrace, initial_guess, picard_solve
from .config import RunConfig, load_config
from .estimators import CarlemanPicardReconstructor, PolynomialExponentialProjector
from .exceptions import *  # noqa: F401,F403
from .forward import ForwardGrid, NoiseSpec, add_noise, extract_boundary, solve_forward
from .galerkin import GalerkinOperators, ModeProfile, assemble_operators
from .phantoms import PhantomSpec, eval_phantom
from .pipeline import run_pipeline, solve, sweep_cutoff
from .reconstruction import CoefficientField, ReconstructionReport, metrics, reconstruct_c
from .reduction import CauchyData, CutoffSpec, build_cauchy_data

__version__ = "0.1.0"
