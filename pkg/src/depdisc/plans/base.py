"""Plan configuration, results, and stages shared by several plans."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from ..cluster import (
    Cluster,
    ClusterConfig,
    CostLedger,
    Task,
    column_nbytes,
    scatter_round_robin,
)
from ..model import DC, FD, OD, UCC, Dependency, Partition, Relation, canonical, render_all
from ..primitives import gen_eq_class

TANE = "tane"
FASTFDS = "fastfds"
HYFD = "hyfd"
DATADRIVEN = "datadriven"

ALGORITHMS = (TANE, FASTFDS, HYFD, DATADRIVEN)
_ALIASES = {"datadriven_dc": DATADRIVEN}

SUPPORTED = {
    TANE: (FD, UCC, OD),
    FASTFDS: (FD, DC),
    DATADRIVEN: (FD, DC),
    HYFD: (FD, UCC),
}


class ConfigError(ValueError):
    """Rejected flag or plan combination."""


@dataclass(frozen=True)
class SwitchPolicy:
    # LDP1: leave sampling once fewer than epsilon of the compared pairs changed the FDTree
    epsilon: float = 0.01
    # LDP1: go back to sampling once a level's failed validations exceed this fraction
    validation_budget: float = 0.01
    # LDP2: bytes charged per work unit when comparing phase costs
    cost_lambda: float = 1.0


@dataclass(frozen=True)
class PlanConfig:
    algorithm: str = TANE
    ldp: int = 2
    dep_kind: str = FD
    cluster: ClusterConfig = field(default_factory=ClusterConfig)
    sampling_seed: int = 0
    switch_policy: SwitchPolicy = field(default_factory=SwitchPolicy)
    keep_trivial: bool = False

    def __post_init__(self):
        object.__setattr__(self, "algorithm", _ALIASES.get(self.algorithm, self.algorithm))

    def validate(self) -> "PlanConfig":
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}")
        if self.ldp not in (1, 2):
            raise ConfigError(f"ldp must be 1 or 2, got {self.ldp}")
        if self.dep_kind not in SUPPORTED[self.algorithm]:
            raise ConfigError(f"{self.algorithm} cannot discover {self.dep_kind} dependencies")
        if self.dep_kind == DC and self.ldp != 2:
            raise ConfigError("dc discovery compares every ordered tuple pair; use ldp 2")
        return self

    def as_dict(self) -> dict:
        d = asdict(self)
        d["cluster"] = asdict(self.cluster)
        d["switch_policy"] = asdict(self.switch_policy)
        return d


@dataclass
class DiscoveryResult:
    dependencies: list[Dependency]
    ledger: CostLedger
    attribute_names: tuple[str, ...]
    phase_trace: list[tuple[str, int]] = field(default_factory=list)
    stats: dict = field(default_factory=dict)

    def rendered(self) -> list[str]:
        return render_all(self.dependencies, self.attribute_names)

    def to_dict(self, config: PlanConfig | None = None, metrics: bool = True) -> dict:
        deps = self.rendered()
        kinds: dict[str, int] = {}
        for d in self.dependencies:
            kinds[d.kind] = kinds.get(d.kind, 0) + 1
        out = {
            "config": config.as_dict() if config is not None else None,
            "dependencies": deps,
            "counts": {"total": len(deps), **kinds},
            "phase_trace": [list(p) for p in self.phase_trace],
        }
        if metrics:
            out["metrics"] = self.ledger.report()
        return out

    def dependencies_json(self) -> str:
        """Wall-clock-free, byte-stable rendering of the dependency list."""
        return json.dumps(self.rendered(), indent=None)


def finish(r: Relation, deps, ledger: CostLedger, trace=None, **stats) -> DiscoveryResult:
    return DiscoveryResult(canonical(deps), ledger, r.attribute_names, list(trace or []), stats)


# ---------------------------------------------------------------------------
# stages shared by the plans


def single_attribute_partitions(cluster: Cluster, r: Relation, name: str = "level1") -> dict[int, Partition]:
    """``pi_A`` for every attribute.

    Unlimited memory: columns go round-robin to workers, which hash them
    locally.  Under a budget: a distributed group-by per column.
    """
    m, n = r.m, r.n
    if cluster.config.small_memory:
        parts = cluster.group_by_many(r, [1 << a for a in range(m)], name + "/group_by")
        return {a: parts[1 << a] for a in range(m)}
    assign = scatter_round_robin(list(range(m)), cluster.k)

    def job(attrs):
        def run(meter):
            out = {}
            for a in attrs:
                meter.work(n)
                out[a] = gen_eq_class(1 << a, r)
            return out

        return run

    tasks = [Task(w, job(attrs), column_nbytes(n) * len(attrs)) for w, attrs in assign.items() if attrs]

    def merge(outs):
        merged = {}
        for o in outs:
            merged.update(o)
        return merged

    return cluster.run_stage(name, tasks, merge)


def round_robin(items: Sequence, k: int) -> list[list]:
    out: list[list] = [[] for _ in range(k)]
    for i, x in enumerate(items):
        out[i % k].append(x)
    return out


def shuffled(items: list, seed: int) -> list:
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(items))
    return [items[i] for i in order]
