"""Baseline: discover on each horizontal part alone, intersect the results."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from ..cluster import ClusterConfig
from ..model import FD, Dependency, Relation, canonical, horizontal_split
from ..oracle import holds
from .base import PlanConfig, TANE


@dataclass
class NaiveResult:
    naive_set: list[Dependency]
    global_set: list[Dependency]
    precision: float
    part_sizes: list[int] = field(default_factory=list)
    holding: list[Dependency] = field(default_factory=list)


def local_discovery(kind: str = FD) -> Callable[[Relation], list[Dependency]]:
    """Single-node discovery: TANE on one worker."""
    from .tane import run_tane

    config = PlanConfig(algorithm=TANE, ldp=2, dep_kind=kind, cluster=ClusterConfig(k=1))
    return lambda r: run_tane(r, config).dependencies


CLOSURE = "closure"
LITERAL = "literal"


def _minimize(sets) -> list[int]:
    out: list[int] = []
    for s in sorted(set(sets), key=lambda x: (bin(x).count("1"), x)):
        if not any(o & s == o for o in out):
            out.append(s)
    return out


def intersect_theories(local_sets: Sequence[Iterable[Dependency]]) -> list[Dependency]:
    """Minimal FDs valid on every part, from each part's minimal FDs.

    ``X -> A`` is valid on a part iff ``X`` contains an LHS the part reports
    for ``A``, so the common valid LHSs are the unions of one LHS per part.
    """
    per_target: dict[int, list[int]] | None = None
    for deps in local_sets:
        mine: dict[int, list[int]] = {}
        for d in deps:
            mine.setdefault(d.rhs, []).append(d.lhs)
        if per_target is None:
            per_target = {a: _minimize(v) for a, v in mine.items()}
            continue
        per_target = {
            a: _minimize(x | y for x in per_target[a] for y in mine[a])
            for a in per_target
            if a in mine
        }
    if per_target is None:
        return []
    return canonical(Dependency.fd(x, a) for a, xs in per_target.items() for x in xs)


def run_naive_intersection(
    r: Relation,
    p: int = 2,
    seed: int = 0,
    kind: str = FD,
    parts: Sequence[Relation] | None = None,
    discover: Callable[[Relation], list[Dependency]] | None = None,
    mode: str = CLOSURE,
) -> NaiveResult:
    """Intersect per-part discoveries and score the result on all of ``r``.

    ``closure`` keeps the minimal FDs that hold on every part; ``literal``
    intersects the per-part minimal sets as sets of strings.  Empty parts
    hold every dependency vacuously and are skipped.  Passing ``parts``
    overrides the seeded split (their union must be ``r``).
    """
    if mode not in (CLOSURE, LITERAL):
        raise ValueError(f"unknown intersection mode {mode!r}")
    if mode == CLOSURE and kind != FD:
        raise ValueError("closure intersection is defined for FDs")
    discover = discover or local_discovery(kind)
    if parts is None:
        if p < 1:
            raise ValueError("need at least one part")
        parts = horizontal_split(r, p, seed)
    local = [discover(part) for part in parts if part.n > 0]
    global_set = discover(r)
    if not local:
        naive_list = list(global_set)
    elif mode == CLOSURE:
        naive_list = intersect_theories(local)
    else:
        naive_list = canonical(set.intersection(*(set(x) for x in local)))
    holding = [d for d in naive_list if holds(d, r)]
    precision = len(holding) / len(naive_list) if naive_list else 1.0
    return NaiveResult(naive_list, global_set, precision, [part.n for part in parts], holding)
