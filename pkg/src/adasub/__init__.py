"""Adaptive submodular maximization with exact ratio oracles."""

from .core import (
    AdaptiveProblem,
    ExpectedGain,
    Objective,
    PolicyNode,
    Realization,
    TabularPrior,
    avg_value,
    check_adaptive_monotone,
    check_adaptive_submodular,
    concat,
    condition,
    gain_element,
    gain_policy,
    gain_set,
    run_policy,
)
from .exceptions import (
    AdasubError,
    BudgetExceeded,
    DimensionMismatch,
    DuplicateEdge,
    ElementReuse,
    InconsistentObservation,
    InvalidInput,
    InvalidParams,
    MissingBranch,
    NoConvergence,
    NotNormalized,
    NotSymmetric,
    ParseError,
    UnknownCase,
)
from .policies import adaptive_greedy, greedy_policy, non_adaptive_greedy, optimal_policy_exhaustive, random_policy

__version__ = "0.1.0"

__all__ = [
    "AdaptiveProblem",
    "AdasubError",
    "BudgetExceeded",
    "DimensionMismatch",
    "DuplicateEdge",
    "ElementReuse",
    "ExpectedGain",
    "InconsistentObservation",
    "InvalidInput",
    "InvalidParams",
    "MissingBranch",
    "NoConvergence",
    "NotNormalized",
    "NotSymmetric",
    "Objective",
    "ParseError",
    "PolicyNode",
    "Realization",
    "TabularPrior",
    "UnknownCase",
    "adaptive_greedy",
    "avg_value",
    "check_adaptive_monotone",
    "check_adaptive_submodular",
    "concat",
    "condition",
    "gain_element",
    "gain_policy",
    "gain_set",
    "greedy_policy",
    "non_adaptive_greedy",
    "optimal_policy_exhaustive",
    "random_policy",
    "run_policy",
]
