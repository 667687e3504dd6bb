"""Deterministic acceptance-rejection driven by Sobol digital nets."""

from .densities import DensityModel, ProposalModel, SumDecomposition
from .discrepancy import star_discrepancy_1d_exact, star_discrepancy_delta_cover
from .nets import sobol_points
from .samplers import SampleSet, dar_cube, dar_real, drar_sample, plan_drar, rar

__version__ = "0.1.0"

__all__ = [
    "DensityModel", "ProposalModel", "SumDecomposition", "SampleSet",
    "sobol_points", "rar", "dar_cube", "dar_real", "plan_drar", "drar_sample",
    "star_discrepancy_1d_exact", "star_discrepancy_delta_cover",
]
