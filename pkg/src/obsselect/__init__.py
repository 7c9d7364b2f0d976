"""Budgeted observation subset selection on tree-shaped Bayesian networks.

Pick which tests to run, all in advance, to maximize the expected reward of the
resulting posterior under a total time budget. Two variants are provided: a
boolean network with noisy binary tests and a best-hypothesis-posterior reward,
and a linear-Gaussian network with additive-noise readings and a
worst-hypothesis precision reward. Both are solved by compiling per-subtree
performance profiles on uniform quality grids, with an additive optimality-gap
guarantee, plus an independent exact oracle for validation.
"""
from . import boolean, gaussian, oracle
from .generate import generate_instance
from .grids import GridSpec, discretize, equivalent, lerp, logbar, precision_join
from .model import (
    BOOLEAN,
    GAUSSIAN,
    BooleanParams,
    GaussianParams,
    Instance,
    InstanceError,
    Node,
    bfs_order,
    parse_instance,
    serialize_instance,
    tree_stats,
    validate_instance,
)
from .oracle import (
    GuardError,
    SubsetEval,
    boolean_eval_exact,
    brute_force_optimum,
    eval_exact,
    gaussian_eval_exact,
    gaussian_posterior_precisions,
)
from .profiles import (
    CondPerf,
    InsertOutcome,
    Plan,
    ProfileTable,
    TableStats,
    merge_plans,
    plan_from_counts,
    plan_time,
)
from .solution import Solution, parse_solution

__all__ = [
    "BOOLEAN",
    "GAUSSIAN",
    "BooleanParams",
    "CondPerf",
    "GaussianParams",
    "GridSpec",
    "GuardError",
    "Instance",
    "InstanceError",
    "InsertOutcome",
    "Node",
    "Plan",
    "ProfileTable",
    "Solution",
    "SubsetEval",
    "TableStats",
    "bfs_order",
    "boolean",
    "boolean_eval_exact",
    "brute_force_optimum",
    "discretize",
    "equivalent",
    "eval_exact",
    "gaussian",
    "gaussian_eval_exact",
    "gaussian_posterior_precisions",
    "generate_instance",
    "lerp",
    "logbar",
    "merge_plans",
    "oracle",
    "parse_instance",
    "parse_solution",
    "plan_from_counts",
    "plan_time",
    "precision_join",
    "serialize_instance",
    "tree_stats",
    "validate_instance",
]
