"""Rare-event probabilities for switching diffusions.

Simulation of regime-switching SDEs, pathwise mode filtering, and
multilevel splitting estimators, backed by the C++ core in `_core`.
"""

from ._core import (
    CellStats,
    ComparisonReport,
    CrudeResult,
    HittingReport,
    JointTrajectory,
    Levels,
    MarginalTrajectory,
    Model,
    PathSegment,
    SplittingResult,
    crude_mc,
    derive_seed,
    detect_hits,
    filter_step,
    grid_steps,
    potential,
    project_simplex,
    replicate,
    replicate_seed,
    run_splitting,
    segment_filter_update,
    simulate_path_joint,
    simulate_path_marginal,
)

__version__ = "0.1.0"

__all__ = [
    "CellStats",
    "ComparisonReport",
    "CrudeResult",
    "HittingReport",
    "JointTrajectory",
    "Levels",
    "MarginalTrajectory",
    "Model",
    "PathSegment",
    "SplittingResult",
    "crude_mc",
    "derive_seed",
    "detect_hits",
    "filter_step",
    "grid_steps",
    "potential",
    "project_simplex",
    "replicate",
    "replicate_seed",
    "run_splitting",
    "segment_filter_update",
    "simulate_path_joint",
    "simulate_path_marginal",
]
