"""Littlewood-Paley analysis, homogeneous Besov norms, explicit lifespans and a
Picard solver for non-resistive MHD on the periodic torus."""

from .besov import BesovIndex, NormTrace, besov_norm, chemin_lerner_norm, smallest_j0, tail_sum
from .dyadic import FilterBank, build_filter_bank, low_cutoff, lp_block
from .fields import Grid, SpectralField, leray_project, lp_norm, mode, sample_divergence_free
from .heat import duhamel_solve, free_evolution_AT, heat_propagate
from .lifespan import LifespanReport, derive_constants, lifespan_estimate
from .solver import SolverConfig, SolverState, solve_mhd

__version__ = "0.1.0"

__all__ = [
    "BesovIndex",
    "NormTrace",
    "besov_norm",
    "chemin_lerner_norm",
    "smallest_j0",
    "tail_sum",
    "FilterBank",
    "build_filter_bank",
    "low_cutoff",
    "lp_block",
    "Grid",
    "SpectralField",
    "leray_project",
    "lp_norm",
    "mode",
    "sample_divergence_free",
    "duhamel_solve",
    "free_evolution_AT",
    "heat_propagate",
    "LifespanReport",
    "derive_constants",
    "lifespan_estimate",
    "SolverConfig",
    "SolverState",
    "solve_mhd",
]
