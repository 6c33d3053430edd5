from ..model import Relation
from .base import (
    ALGORITHMS,
    DATADRIVEN,
    FASTFDS,
    HYFD,
    TANE,
    ConfigError,
    DiscoveryResult,
    PlanConfig,
    SwitchPolicy,
)
from .fastfds import run_fastfds
from .hyfd import PhaseState, estimate_phase_costs, run_hyfd
from .naive import NaiveResult, run_naive_intersection
from .tane import run_tane

_RUNNERS = {TANE: run_tane, FASTFDS: run_fastfds, DATADRIVEN: run_fastfds, HYFD: run_hyfd}


def discover(r: Relation, config: PlanConfig) -> DiscoveryResult:
    """Run the plan named by ``config.algorithm``."""
    config = config.validate()
    return _RUNNERS[config.algorithm](r, config)


__all__ = [
    "ALGORITHMS",
    "ConfigError",
    "DiscoveryResult",
    "NaiveResult",
    "PhaseState",
    "PlanConfig",
    "SwitchPolicy",
    "discover",
    "estimate_phase_costs",
    "run_fastfds",
    "run_hyfd",
    "run_naive_intersection",
    "run_tane",
]
