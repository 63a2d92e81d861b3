"""Alignment tolerance budgets for three-grating optical Talbot-Lau interferometers."""

from tlalign.alignment import (
    AlignmentBudget,
    Criterion,
    InterferometerGeometry,
    ReductionFactor,
    VibrationSpec,
    compose_budget,
)
from tlalign.beamphysics import ClusterBeam, GaussianBeamState, GratingLaser
from tlalign.oracle import OracleConfig, OracleResult

__all__ = [
    "AlignmentBudget",
    "ClusterBeam",
    "Criterion",
    "GaussianBeamState",
    "GratingLaser",
    "InterferometerGeometry",
    "OracleConfig",
    "OracleResult",
    "ReductionFactor",
    "VibrationSpec",
    "compose_budget",
]

__version__ = "0.1.0"
