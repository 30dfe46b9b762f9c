"""Bochner-Riesz means at the critical index on weighted Hardy spaces: kernels,
operators, Muckenhoupt weights, atoms and a verification harness on grids."""

from .config import ExperimentConfig
from .grid import Box, Cube, GridFunction, integrate, make_grid, moment
from .kernel import BRParams, critical_delta, phi, phi_radial
from .operators import br_apply_convolution, br_apply_spectral, br_maximal, hardy_littlewood
from .verify import VerificationReport, run_checks, theorem_1_1_experiment

__version__ = "0.1.0"

__all__ = [
    "BRParams",
    "Box",
    "Cube",
    "ExperimentConfig",
    "GridFunction",
    "VerificationReport",
    "br_apply_convolution",
    "br_apply_spectral",
    "br_maximal",
    "critical_delta",
    "hardy_littlewood",
    "integrate",
    "make_grid",
    "moment",
    "phi",
    "phi_radial",
    "run_checks",
    "theorem_1_1_experiment",
]
