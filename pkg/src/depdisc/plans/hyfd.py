"""Hybrid plans (HyFD, and its UCC variant).

The driver keeps an FDTree of candidate dependencies that no evidence seen so
far contradicts.  Data-driven rounds sample tuple pairs and specialize the
tree with their evidence; schema-driven rounds validate one tree level against
the data.  A failed validation contributes its witness pair as new evidence.
The plan ends when every candidate in the tree has been validated.

LDP1 samples inside equivalence classes (focused sampling with a growing
window per attribute) and switches phases on efficiency thresholds.  LDP2
samples pairs of random row groups and switches whenever the other phase's
estimated next step is cheaper.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..cluster import (
    Cluster,
    Task,
    column_nbytes,
    grouped_class_assignment,
    node_nbytes,
    relation_nbytes,
    rows_nbytes,
)
from ..lattice import FDTree
from ..model import FD_INEQUALITY, UCC, Dependency, Partition, PredicateSpace, Relation, attrs_of, cardinality, full_set
from ..primitives import evidence_for_pairs, gen_eq_class, gen_ev_set
from .base import DiscoveryResult, HYFD, PlanConfig, finish, round_robin, shuffled, single_attribute_partitions

R_PAYLOAD = "relation"
DATA = "data"
SCHEMA = "schema"


# ---------------------------------------------------------------------------
# cost model


@dataclass(frozen=True)
class PhaseState:
    n: int
    m: int
    k: int
    next_candidates: int
    broadcast_residual: int = 0
    cost_lambda: float = 1.0


def estimate_phase_costs(state: PhaseState) -> dict[str, float]:
    """Next-step cost of each phase in bytes plus ``lambda`` times work units.

    A data-driven round sends each worker two groups of ``n / k`` rows and
    compares them pairwise; a schema-driven level ships what is left of the
    relation broadcast and hashes ``n`` rows per candidate LHS.
    """
    n, m, k, lam = state.n, state.m, state.k, state.cost_lambda
    data = 2 * n * m / k + lam * m * (n / k) ** 2
    schema = state.broadcast_residual + lam * state.next_candidates * n
    return {"data_driven_cost": data, "schema_driven_cost": schema}


# ---------------------------------------------------------------------------
# samplers


def window_pair_arrays(cls, window: int) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(cls, dtype=np.int64)
    return a[:-window], a[window:]


class FocusedSampler:
    """Window join inside each attribute's equivalence classes.

    The first round runs every attribute at window 1; afterwards each round
    picks the attribute whose last round changed the tree most (ties to the
    lower index) and widens its window by one.
    """

    def __init__(self, plan: "HybridPlan"):
        self.plan = plan
        self.parts: dict[int, Partition] = single_attribute_partitions(plan.cluster, plan.r, "partitions")
        m = plan.r.m
        self.window = {a: 0 for a in range(m)}
        self.rank = {a: 0 for a in range(m)}
        self.longest = {a: max((len(c) for c in self.parts[a].classes), default=0) for a in range(m)}
        self.first = True
        self.rounds = 0

    def _open(self, a: int) -> bool:
        return self.window[a] + 1 < self.longest[a]

    @property
    def exhausted(self) -> bool:
        return not any(self._open(a) for a in self.window)

    def next_round(self):
        if self.first:
            self.first = False
            attrs = [a for a in sorted(self.window) if self._open(a)]
        else:
            live = [a for a in sorted(self.window) if self._open(a)]
            if not live:
                return None
            attrs = [max(live, key=lambda a: (self.rank[a], -a))]
        if not attrs:
            return None
        for a in attrs:
            self.window[a] += 1
        self.rounds += 1
        return self._sample(attrs)

    def note(self, a: int, changes: int) -> None:
        self.rank[a] = changes

    def _sample(self, attrs: list[int]):
        plan, k, r = self.plan, self.plan.cluster.k, self.plan.r
        work: dict[int, list[tuple[int, tuple]]] = {w: [] for w in range(k)}
        nbytes = [0] * k
        for a in attrs:
            w_len = self.window[a]
            classes = [c for c in self.parts[a].classes if len(c) > w_len]
            if not plan.config.cluster.small_memory:
                for w, mine in enumerate(grouped_class_assignment(classes, k)):
                    work[w].extend((a, window_pair_arrays(c, w_len)) for c in mine)
                    nbytes[w] += sum(rows_nbytes(len(c), r.m) for c in mine)
            else:
                # every class is spread over several workers, a slice of its pairs each
                for c in classes:
                    left, right = window_pair_arrays(c, w_len)
                    for w in range(min(k, len(left))):
                        sl = (left[w::k], right[w::k])
                        work[w].append((a, sl))
                        nbytes[w] += rows_nbytes(2 * len(sl[0]), r.m)

        def job(items):
            def run(meter):
                out: dict[int, tuple[set, int]] = {}
                for a, (left, right) in items:
                    meter.work(len(left))
                    ev, count = out.get(a, (set(), 0))
                    ev.update(evidence_for_pairs(r, plan.P, left, right))
                    out[a] = (ev, count + len(left))
                return out

            return run

        tasks = [Task(w, job(work[w]), nbytes[w]) for w in range(k) if work[w]]
        outs = plan.cluster.run_stage(f"sample/{self.rounds}", tasks)
        merged: dict[int, tuple[set, int]] = {}
        for o in outs:
            for a, (ev, count) in o.items():
                have, c0 = merged.get(a, (set(), 0))
                merged[a] = (have | ev, c0 + count)
        return [(a, sorted(merged[a][0]), merged[a][1]) for a in attrs if a in merged]


class GroupPairSampler:
    """Rows split at random into ``k`` groups; every round each worker takes
    one not yet processed pair of groups (a group paired with itself
    included) and compares all of its tuple pairs.  Under a memory budget
    the second group is streamed in budget-sized slices."""

    def __init__(self, plan: "HybridPlan"):
        self.plan = plan
        k, n = plan.cluster.k, plan.r.n
        self.g = k
        rng = np.random.default_rng(plan.config.sampling_seed)
        perm = rng.permutation(n)
        self.groups = [np.sort(part) for part in np.array_split(perm, self.g)]
        pairs = [(a, b) for a in range(self.g) for b in range(a, self.g)]
        self.pairs = shuffled(pairs, plan.config.sampling_seed + 1)
        self.cursor = 0
        self.rounds = 0

    @property
    def processed(self) -> int:
        return self.cursor

    @property
    def exhausted(self) -> bool:
        return self.cursor >= len(self.pairs)

    def note(self, a, changes):
        pass

    def next_round(self):
        if self.exhausted:
            return None
        plan, k, r = self.plan, self.plan.cluster.k, self.plan.r
        batch = self.pairs[self.cursor : self.cursor + k]
        self.cursor += len(batch)
        self.rounds += 1
        groups = self.groups

        def job(a, b):
            def run(meter):
                ga, gb = groups[a], groups[b]
                if a == b:
                    i, j = np.triu_indices(len(ga), k=1)
                    left, right = ga[i], ga[j]
                else:
                    left, right = np.repeat(ga, len(gb)), np.tile(gb, len(ga))
                meter.work(len(left))
                return set(evidence_for_pairs(r, plan.P, left, right)), len(left)

            return run

        budget = plan.config.cluster.memory_budget
        tasks = []
        for w, (a, b) in enumerate(batch):
            receive = rows_nbytes(len(groups[a]), r.m)
            if a != b:
                nb = len(groups[b])
                per = max(1, budget // rows_nbytes(1, r.m)) if budget else max(nb, 1)
                receive += sum(rows_nbytes(min(per, nb - s), r.m) for s in range(0, nb, per))
            tasks.append(Task(w, job(a, b), receive))
        outs = plan.cluster.run_stage(f"sample/{self.rounds}", tasks)
        ev = set().union(*(o[0] for o in outs)) if outs else set()
        return [(None, sorted(ev), sum(o[1] for o in outs))]


# ---------------------------------------------------------------------------
# plan


class HybridPlan:
    def __init__(self, r: Relation, config: PlanConfig):
        self.r = r
        self.config = config
        self.kind = config.dep_kind
        self.cluster = Cluster(config.cluster)
        self.P = PredicateSpace.build(r, FD_INEQUALITY)
        self.m, self.n = r.m, r.n
        self.full = full_set(r.m)
        self.ucc = self.kind == UCC
        # UCC candidates hang off a virtual right-hand side numbered m
        self.targets = [self.m] if self.ucc else list(range(self.m))
        self.tree = FDTree(self.m + 1 if self.ucc else self.m)
        for t in self.targets:
            self.tree.add(0, t)
        self.validated: dict[int, int] = {}
        self.pool: set[int] = set()
        self.r_bytes = relation_nbytes(r)
        self.stats = {"validations": {DATA: 0, SCHEMA: 0}, "failed_validations": 0, "pairs_compared": 0}

    # -- evidence ------------------------------------------------------------

    def apply(self, e: int) -> bool:
        """Specialize the tree with one evidence set; True if it changed."""
        if e in self.pool:
            return False
        self.pool.add(e)
        agree = self.full & ~e
        changed = False
        if self.ucc:
            removed, _ = self.tree.specialize(agree, self.m, e)
            return removed > 0
        for A in attrs_of(e):
            removed, _ = self.tree.specialize(agree, A, e, 1 << A)
            changed |= removed > 0
        return changed

    # -- validation ------------------------------------------------------------

    def pending(self) -> list[tuple[int, int]]:
        out = []
        for lhs, mask in self.tree.items():
            todo = mask & ~self.validated.get(lhs, 0)
            if todo:
                out.append((lhs, todo))
        return out

    def lowest_pending_level(self) -> int | None:
        levels = [cardinality(lhs) for lhs, _ in self.pending()]
        return min(levels) if levels else None

    def _partition(self, lhs: int) -> Partition:
        if lhs:
            return gen_eq_class(lhs, self.r)
        n = self.n
        return Partition(0, (tuple(range(n)),) if n >= 2 else (), 1 if n == 1 else 0)

    def validate_level(self, level: int) -> tuple[int, int]:
        """Check every pending candidate whose LHS has ``level`` attributes."""
        cands = [(lhs, todo) for lhs, todo in self.pending() if cardinality(lhs) == level]
        r, n, k, m = self.r, self.n, self.cluster.k, self.m
        codes = r.codes
        ucc = self.ucc
        name = f"validate/{level}"
        rec = self.cluster.stage(name)
        mine = round_robin(cands, k)
        busy = [w for w in range(k) if mine[w]]
        sm = self.config.cluster.small_memory
        if not sm:
            self.cluster.broadcast(R_PAYLOAD, self.r_bytes, rec, busy)

        def job(items):
            def run(meter):
                out = []
                for lhs, todo in items:
                    meter.work(n)
                    part = self._partition(lhs)
                    for A in attrs_of(todo):
                        meter.work(sum(len(c) for c in part.classes))
                        witness = None
                        if ucc:
                            if part.classes:
                                witness = part.classes[0][:2]
                        else:
                            col = codes[:, A]
                            for cls in part.classes:
                                vals = col[list(cls)]
                                bad = np.flatnonzero(vals != vals[0])
                                if len(bad):
                                    witness = (cls[0], cls[int(bad[0])])
                                    break
                        out.append((lhs, A, witness))
                return out

            return run

        tasks = []
        for w in busy:
            nbytes = node_nbytes(m + 1) * len(mine[w])
            if sm:
                # group-by shuffle of the LHS codes plus the RHS columns
                nbytes += sum(rows_nbytes(n // k + 1, cardinality(lhs)) + column_nbytes(n) * cardinality(todo)
                              for lhs, todo in mine[w])
            tasks.append(Task(w, job(mine[w]), nbytes))
        outs = self.cluster.run_stage(name, tasks, record=rec)
        total = failed = 0
        witnesses = []
        for o in outs:
            for lhs, A, witness in o:
                total += 1
                if witness is None:
                    self.validated[lhs] = self.validated.get(lhs, 0) | (1 << A)
                else:
                    failed += 1
                    witnesses.append(witness)
        for i, j in witnesses:
            self.apply(gen_ev_set(int(i), int(j), r, self.P))
        return total, failed

    # -- phases --------------------------------------------------------------

    def costs(self) -> dict[str, float]:
        level = self.lowest_pending_level()
        cands = 0 if level is None else len({lhs for lhs, _ in self.pending() if cardinality(lhs) == level})
        residual = 0 if self.config.cluster.small_memory else self.cluster.broadcast_residual(R_PAYLOAD, self.r_bytes)
        state = PhaseState(self.n, self.m, self.cluster.k, cands, residual, self.config.switch_policy.cost_lambda)
        return estimate_phase_costs(state)

    def data_phase(self, sampler) -> int:
        policy = self.config.switch_policy
        rounds = 0
        while True:
            batch = sampler.next_round()
            if batch is None:
                break
            rounds += 1
            changes = pairs = 0
            for a, evidence, count in batch:
                mine = sum(self.apply(e) for e in evidence)
                sampler.note(a, mine)
                changes += mine
                pairs += count
            self.stats["pairs_compared"] += pairs
            if sampler.exhausted:
                break
            if self.config.ldp == 1:
                if changes < policy.epsilon * max(pairs, 1):
                    break
            else:
                c = self.costs()
                if c["schema_driven_cost"] <= c["data_driven_cost"]:
                    break
        return rounds

    def schema_phase(self, sampler) -> tuple[int, bool]:
        """Validate levels bottom-up; returns (levels, switched back to sampling)."""
        policy = self.config.switch_policy
        levels = 0
        while True:
            level = self.lowest_pending_level()
            if level is None:
                return levels, False
            total, failed = self.validate_level(level)
            levels += 1
            self.stats["validations"][SCHEMA] += total
            self.stats["failed_validations"] += failed
            if sampler.exhausted or self.lowest_pending_level() is None:
                continue
            if self.config.ldp == 1:
                if failed > policy.validation_budget * total:
                    return levels, True
            else:
                c = self.costs()
                if c["data_driven_cost"] < c["schema_driven_cost"]:
                    return levels, True

    def run(self) -> DiscoveryResult:
        sampler = FocusedSampler(self) if self.config.ldp == 1 else GroupPairSampler(self)
        trace = []
        while True:
            trace.append((DATA, self.data_phase(sampler)))
            levels, back = self.schema_phase(sampler)
            trace.append((SCHEMA, levels))
            if not back:
                break
        if self.pending():
            raise RuntimeError("hybrid plan stopped with unvalidated candidates")
        if self.ucc:
            cols = [lhs for lhs, mask in self.tree.items() if mask >> self.m & 1]
            if 0 in cols:
                cols = [1 << a for a in range(self.m)]
            deps = [Dependency.ucc(c) for c in cols]
        else:
            deps = [Dependency.fd(lhs, A) for lhs, A in self.tree.fds()]
        stats = dict(self.stats)
        stats["fully_validated"] = not self.pending()
        stats["evidence_sets"] = len(self.pool)
        if isinstance(sampler, GroupPairSampler):
            stats["groups"] = sampler.g
            stats["group_pairs"] = sampler.processed
        else:
            stats["windows"] = dict(sampler.window)
        return finish(self.r, deps, self.cluster.ledger, trace, **stats)


def run_hyfd(r: Relation, config: PlanConfig | None = None) -> DiscoveryResult:
    config = (config or PlanConfig(algorithm=HYFD)).validate()
    return HybridPlan(r, config).run()
