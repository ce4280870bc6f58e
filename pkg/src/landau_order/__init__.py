"""Angular-momentum ordering of ground states in a magnetic field.

Finite-difference sector Hamiltonians, a Lanczos eigensolver and checks of
the ordering inequalities between the per-sector ground energies E_m.
"""

__version__ = "0.1.0"

from .bloch_bands import BandSurface, compute_band, verify_band
from .eigensolve import SolveConfig, SolveResult, dense_reference, lowest_k, residual_check
from .errors import ChainConvergenceError, DomainError, ResourceError, UsageError
from .kernels import BACKEND
from .ordering import (
    EnergySequence,
    OrderingReport,
    SweepConfig,
    extend_negative_m,
    sweep_sectors,
    verify_sequence,
)
from .potentials import (
    AxisCharge,
    AxisSegment,
    HollowTube,
    PeriodicChainSpec,
    PotentialSpec,
    SeparableHarmonic,
    SmearedCharge,
    evaluate,
)
from .sector_operator import FieldConfig, Grid2D, assemble, assemble_bloch, build_grid

__all__ = [
    "BACKEND", "AxisCharge", "AxisSegment", "BandSurface", "ChainConvergenceError",
    "DomainError", "EnergySequence", "FieldConfig", "Grid2D", "HollowTube", "OrderingReport",
    "PeriodicChainSpec", "PotentialSpec", "ResourceError", "SeparableHarmonic", "SmearedCharge",
    "SolveConfig", "SolveResult", "SweepConfig", "UsageError", "assemble", "assemble_bloch",
    "build_grid", "compute_band", "dense_reference", "evaluate", "extend_negative_m",
    "lowest_k", "residual_check", "sweep_sectors", "verify_band", "verify_sequence",
]
