"""Hybrid quantum-classical laboratory for multicriteria combinatorial optimization."""

from .bench import GeneratorConfig, OracleResult, brute_force_pareto, generate
from .core import (
    CapabilityError,
    FrontPartition,
    ObjectivePoint,
    ObjectiveSpec,
    ProblemInstance,
    Solution,
    crowding_distance,
    evaluate,
    nondominated_filter,
    nondominated_sort,
    weakly_dominates,
)
from .drivers import RunConfig, RunRecord, Workspace, decode, prepare, run
from .indicators import Indicator, ReferenceContext, coverage_cost, hypervolume, reference_context
from .moea import GAConfig
from .qsim import AnsatzParams

__all__ = [
    "AnsatzParams",
    "CapabilityError",
    "FrontPartition",
    "GAConfig",
    "GeneratorConfig",
    "Indicator",
    "ObjectivePoint",
    "ObjectiveSpec",
    "OracleResult",
    "ProblemInstance",
    "ReferenceContext",
    "RunConfig",
    "RunRecord",
    "Solution",
    "Workspace",
    "brute_force_pareto",
    "coverage_cost",
    "crowding_distance",
    "decode",
    "evaluate",
    "generate",
    "hypervolume",
    "nondominated_filter",
    "nondominated_sort",
    "prepare",
    "reference_context",
    "run",
    "weakly_dominates",
]

__version__ = "0.1.0"
