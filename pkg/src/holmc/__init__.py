"""Higher-order lifted multicut for motion segmentation of point trajectories."""

from __future__ import annotations

from .builder import BuilderConfig, Mode, build_graph
from .exact import solve_exact
from .hypergraph import HyperEdge, HypergraphBuilder, Kind, LiftedHypergraph
from .kl import SolveResult, SolverConfig, solve, solve_partition
from .model import is_feasible, labeling_from_partition, local_diagnostics, objective, partition_from_labeling
from .motion import CostParams, Trajectory, estimate_euclidean_transform, triplet_distance

__all__ = [
    "BuilderConfig",
    "CostParams",
    "HyperEdge",
    "HypergraphBuilder",
    "Kind",
    "LiftedHypergraph",
    "Mode",
    "SolveResult",
    "SolverConfig",
    "Trajectory",
    "build_graph",
    "estimate_euclidean_transform",
    "is_feasible",
    "labeling_from_partition",
    "local_diagnostics",
    "objective",
    "partition_from_labeling",
    "solve",
    "solve_exact",
    "solve_partition",
    "triplet_distance",
]
