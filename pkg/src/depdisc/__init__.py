"""Dependency discovery (FDs, UCCs, ODs, DCs) on a metered multi-worker runtime."""

from .cluster import Cluster, ClusterConfig, CostLedger
from .model import (
    Dependency,
    InputError,
    Partition,
    Predicate,
    PredicateSpace,
    Relation,
    horizontal_split,
    load_csv,
    parse_dependency,
    project_pair,
)
from .oracle import OracleLimitError, OracleLimits, holds, precision
from .plans import (
    ConfigError,
    DiscoveryResult,
    PlanConfig,
    SwitchPolicy,
    discover,
    estimate_phase_costs,
    run_fastfds,
    run_hyfd,
    run_naive_intersection,
    run_tane,
)

__version__ = "0.1.0"

__all__ = [
    "Cluster",
    "ClusterConfig",
    "ConfigError",
    "CostLedger",
    "Dependency",
    "DiscoveryResult",
    "InputError",
    "OracleLimitError",
    "OracleLimits",
    "Partition",
    "PlanConfig",
    "Predicate",
    "PredicateSpace",
    "Relation",
    "SwitchPolicy",
    "discover",
    "estimate_phase_costs",
    "holds",
    "horizontal_split",
    "load_csv",
    "parse_dependency",
    "precision",
    "project_pair",
    "run_fastfds",
    "run_hyfd",
    "run_naive_intersection",
    "run_tane",
]
