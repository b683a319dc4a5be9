"""Explainable benchmarking of particle swarm optimisation.

Topology-configurable PSO on a seeded 24-function noiseless suite, AOCC
anytime scoring, landscape features, TreeSHAP attribution on surrogate
forests and landscape-aware configuration learning.
"""

from .configspace import HyperParams, TopologyKind, full_grid
from .metrics import IntegrityError, RunRecord, aocc
from .suite import ProblemInstance, evaluate, make_instance
from .swarm import RunSpec, run

__all__ = [
    "HyperParams", "IntegrityError", "ProblemInstance", "RunRecord", "RunSpec", "TopologyKind",
    "aocc", "evaluate", "full_grid", "make_instance", "run",
]
__version__ = "0.1.0"
