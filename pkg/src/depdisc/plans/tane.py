"""Lattice-traversal plans (TANE, with UCC and OD modes).

LDP1 keeps every node's partition and builds the next level by intersecting
parent partitions on the workers.  LDP2 keeps only attribute sets and counts;
the relation is broadcast once and workers hash new partitions straight from
the data.
"""

from __future__ import annotations

import math
from dataclasses import replace
from itertools import combinations

from ..cluster import (
    Cluster,
    Task,
    TriangleLayout,
    column_nbytes,
    node_nbytes,
    partition_nbytes,
    relation_nbytes,
    split_chunks,
)
from ..lattice import (
    LatticeLevel,
    NodeInfo,
    empty_level,
    generate_next,
    init_candidates,
    join_candidate,
    minimal_only,
    node_dependencies,
    prune,
)
from ..model import ASC, FD, OD, Relation, attrs_of, cardinality
from ..primitives import (
    RefinementInput,
    check_refinement,
    class_count,
    intersect_partitions,
    prefix,
    refinement_masks,
)
from .base import DiscoveryResult, PlanConfig, TANE, finish, round_robin, single_attribute_partitions

R_PAYLOAD = "relation"


def _parents(z: int) -> tuple[int, int]:
    """The two prefix-sharing subsets whose join produced ``z``."""
    attrs = attrs_of(z)
    return z & ~(1 << attrs[-1]), z & ~(1 << attrs[-2])


def _prefix_pairs(a_items, b_items, same: bool):
    """Hash join on the shared prefix; ``same`` means a self-join of one chunk."""
    buckets: dict[int, list[int]] = {}
    for b in b_items:
        buckets.setdefault(prefix(b), []).append(b)
    if same:
        for members in buckets.values():
            yield from combinations(members, 2)
        return
    for a in a_items:
        for b in buckets.get(prefix(a), ()):
            yield a, b


def _stored_rows(p) -> int:
    return sum(len(c) for c in p.classes)


class TanePlan:
    def __init__(self, r: Relation, config: PlanConfig):
        self.r = r
        self.config = config
        self.kind = config.dep_kind
        self.cluster = Cluster(config.cluster)
        self.ldp1 = config.ldp == 1
        self.sm = config.cluster.small_memory
        self.n, self.m = r.n, r.m
        self.node_bytes = node_nbytes(r.m)
        self.r_bytes = relation_nbytes(r)
        self.singles: dict[int, object] = {}

    # -- level construction ------------------------------------------------

    def level_one(self) -> LatticeLevel:
        level = LatticeLevel(1)
        if self.ldp1:
            self.singles = single_attribute_partitions(self.cluster, self.r, "L1/partitions")
            for a, p in self.singles.items():
                level.nodes[1 << a] = NodeInfo(p.class_count, p)
            return level
        sets = [1 << a for a in range(self.m)]
        for X, c in self._counts_from_data(sets, "L1/partitions").items():
            level.nodes[X] = NodeInfo(c)
        return level

    def _counts_from_data(self, sets: list[int], name: str) -> dict[int, int]:
        """LDP2: ``|pi_X|`` hashed from the (broadcast) relation."""
        if not sets:
            return {}
        if self.sm:
            parts = self.cluster.group_by_many(self.r, sets, name + "/group_by")
            return {X: p.class_count for X, p in parts.items()}
        r, n, k = self.r, self.n, self.cluster.k
        rec = self.cluster.stage(name)
        mine = round_robin(sets, k)
        busy = [w for w in range(k) if mine[w]]
        self.cluster.broadcast(R_PAYLOAD, self.r_bytes, rec, busy)

        def job(xs):
            def run(meter):
                meter.work(n * len(xs))
                return {X: class_count(r, X) for X in xs}

            return run

        tasks = [Task(w, job(mine[w]), self.node_bytes * len(mine[w])) for w in busy]
        return self.cluster.run_stage(name, tasks, _merge_dicts, record=rec)

    def next_level(self, survivors: LatticeLevel) -> LatticeLevel:
        l = survivors.level + 1
        name = f"L{l}/generate"
        if self.ldp1 and not self.sm:
            made = self._triangle_generate(survivors, name, with_partitions=True)
        elif self.ldp1:
            made = self._streamed_intersections(survivors, name)
        elif not self.sm:
            made = self._triangle_generate(survivors, name, with_partitions=False)
        else:
            self.cluster.ledger.commit(self._driver_join_record(survivors, name + "/join"))
            cands = generate_next(survivors)
            made = {Z: NodeInfo(c) for Z, c in self._counts_from_data(cands, name).items()}
        level = LatticeLevel(l)
        for Z in sorted(made, key=attrs_of):
            level.nodes[Z] = made[Z]
        return level

    def _driver_join_record(self, survivors: LatticeLevel, name: str):
        rec = self.cluster.stage(name)
        s = len(survivors)
        rec.work(-1, s * (s - 1) // 2)
        return rec

    def _triangle_generate(self, survivors: LatticeLevel, name: str, with_partitions: bool) -> dict[int, NodeInfo]:
        """Self-join of the level's nodes with the triangle layout.

        Each worker gets two chunks of nodes (with partitions in LDP1) plus the
        set of surviving nodes for the subset check, joins the prefix-sharing
        pairs, and materializes each candidate.
        """
        r, n, k = self.r, self.n, self.cluster.k
        sets = survivors.sets()
        present = frozenset(sets)
        layout = TriangleLayout.for_workers(k)
        chunks = split_chunks(sets, layout.l)
        rec = self.cluster.stage(name)
        if not with_partitions:
            self.cluster.broadcast(R_PAYLOAD, self.r_bytes, rec, sorted(layout.assignment.values()))

        def payload(chunk) -> int:
            if with_partitions:
                return sum(self.node_bytes + partition_nbytes(survivors.nodes[X].partition, self.m) for X in chunk)
            return self.node_bytes * len(chunk)

        def job(p, q):
            def run(meter):
                a_items = chunks[p - 1]
                b_items = a_items if p == q else chunks[q - 1]
                meter.work(len(a_items) + (0 if p == q else len(b_items)))
                out = {}
                for a, b in _prefix_pairs(a_items, b_items, p == q):
                    meter.work(1)
                    z = join_candidate(a, b, present)
                    if z is None:
                        continue
                    if with_partitions:
                        pa, pb = survivors.nodes[a].partition, survivors.nodes[b].partition
                        meter.work(_stored_rows(pa) + _stored_rows(pb))
                        part = intersect_partitions(pa, pb, n)
                        out[z] = NodeInfo(part.class_count, part)
                    else:
                        meter.work(n)
                        out[z] = NodeInfo(class_count(r, z))
                return out

            return run

        tasks = []
        for (p, q), w in layout.assignment.items():
            nbytes = payload(chunks[p - 1]) + (0 if p == q else payload(chunks[q - 1]))
            nbytes += self.node_bytes * len(sets)
            tasks.append(Task(w, job(p, q), nbytes))
        return self.cluster.run_stage(name, tasks, _merge_dicts, record=rec)

    def _streamed_intersections(self, survivors: LatticeLevel, name: str) -> dict[int, NodeInfo]:
        """Budgeted LDP1: the driver pairs the nodes; a worker keeps one
        budget-sized chunk of the second parent resident and streams the
        first parent past it once per chunk."""
        self.cluster.ledger.commit(self._driver_join_record(survivors, name + "/join"))
        n, k, budget = self.n, self.cluster.k, self.config.cluster.memory_budget
        cands = generate_next(survivors)
        mine = round_robin(cands, k)

        def job(zs):
            def run(meter):
                out = {}
                for z in zs:
                    a, b = _parents(z)
                    pa, pb = survivors.nodes[a].partition, survivors.nodes[b].partition
                    passes = max(1, math.ceil(partition_nbytes(pb, self.m) / budget))
                    meter.work(passes * _stored_rows(pa) + _stored_rows(pb))
                    part = intersect_partitions(pa, pb, n)
                    out[z] = NodeInfo(part.class_count, part)
                return out

            return run

        tasks = []
        for w in range(k):
            if not mine[w]:
                continue
            nbytes = 0
            for z in mine[w]:
                a, b = _parents(z)
                size_a = partition_nbytes(survivors.nodes[a].partition, self.m)
                size_b = partition_nbytes(survivors.nodes[b].partition, self.m)
                nbytes += size_b + max(1, math.ceil(size_b / budget)) * size_a
            tasks.append(Task(w, job(mine[w]), nbytes))
        return self.cluster.run_stage(name, tasks, _merge_dicts)

    # -- dependency checks -------------------------------------------------

    def check_level(self, level: LatticeLevel, prev: LatticeLevel) -> list:
        """Distribute the level's nodes round-robin; counts of the previous
        level are broadcast (LDP1 OD checks ship partitions and columns)."""
        init_candidates(level, prev, self.kind)
        r, n, k, kind = self.r, self.n, self.cluster.k, self.kind
        name = f"L{level.level}/dependencies"
        rec = self.cluster.stage(name)
        mine = round_robin(level.sets(), k)
        busy = [w for w in range(k) if mine[w]]
        if kind == OD and not self.ldp1:
            self.cluster.broadcast(R_PAYLOAD, self.r_bytes, rec, busy)

        def od_checker():
            # per worker: one sort per left-hand side
            cache = {}

            def od_check(lhs, A, direction):
                if self.ldp1:
                    if lhs not in cache:
                        cache[lhs] = RefinementInput.ordered(r, lhs, A, left_partition=prev.nodes[lhs].partition)
                    inp = replace(cache[lhs], rhs_column=r.codes[:, A], direction=direction)
                    return check_refinement(lhs, A, inp)
                if lhs not in cache:
                    cache[lhs] = refinement_masks(r, lhs)
                asc, desc = cache[lhs]
                return bool((asc if direction == ASC else desc) >> A & 1)

            return od_check

        def job(xs):
            def run(meter):
                od_check = od_checker() if kind == OD else None
                found = []
                for X in xs:
                    deps, checks = node_dependencies(X, level.nodes[X], prev, kind, n, od_check)
                    meter.work(checks * (n if kind == OD else 1))
                    found.extend(deps)
                return found

            return run

        tasks = []
        for w in busy:
            nbytes = self.node_bytes * (len(mine[w]) + len(prev))
            if kind == OD and self.ldp1:
                for X in mine[w]:
                    nbytes += column_nbytes(n) * cardinality(X)
                    nbytes += sum(partition_nbytes(prev.nodes[X & ~(1 << a)].partition, self.m) for a in attrs_of(X))
            tasks.append(Task(w, job(mine[w]), nbytes))
        return self.cluster.run_stage(name, tasks, _concat, record=rec)

    def key_counts(self, prev: LatticeLevel, level_no: int):
        """Counts for the key rule's ``X \\ B + A`` sets that were never generated."""

        def count_of(sets: list[int]) -> dict[int, int]:
            name = f"L{level_no}/key_counts"
            if not self.ldp1:
                return self._counts_from_data(sets, name)
            n, k = self.n, self.cluster.k
            mine = round_robin(sets, k)

            def split(s):
                for a in attrs_of(s):
                    if s & ~(1 << a) in prev.nodes:
                        return s & ~(1 << a), a
                raise RuntimeError(f"no parent of {attrs_of(s)} survived")

            def job(ss):
                def run(meter):
                    out = {}
                    for s in ss:
                        lhs, a = split(s)
                        pl, pa = prev.nodes[lhs].partition, self.singles[a]
                        meter.work(_stored_rows(pl) + _stored_rows(pa))
                        out[s] = intersect_partitions(pl, pa, n).class_count
                    return out

                return run

            tasks = []
            for w in range(k):
                if not mine[w]:
                    continue
                nbytes = 0
                for s in mine[w]:
                    lhs, a = split(s)
                    nbytes += partition_nbytes(prev.nodes[lhs].partition, self.m)
                    nbytes += partition_nbytes(self.singles[a], self.m)
                tasks.append(Task(w, job(mine[w]), nbytes))
            return self.cluster.run_stage(name, tasks, _merge_dicts)

        return count_of

    # -- driver loop -------------------------------------------------------

    def run(self) -> DiscoveryResult:
        prev = empty_level(self.r, with_partition=self.ldp1, kind=self.kind)
        level = self.level_one()
        deps = []
        sizes = []
        while level.nodes:
            sizes.append(len(level))
            deps.extend(self.check_level(level, prev))
            count_of = self.key_counts(prev, level.level) if self.kind == FD else None
            survivors, extra = prune(level, prev, self.kind, self.n, count_of)
            deps.extend(extra)
            if level.level >= self.m or not survivors.nodes:
                break
            nxt = self.next_level(survivors)
            prev, level = survivors, nxt
        return finish(self.r, minimal_only(deps), self.cluster.ledger, level_sizes=sizes)


def run_tane(r: Relation, config: PlanConfig | None = None) -> DiscoveryResult:
    config = (config or PlanConfig(algorithm=TANE)).validate()
    return TanePlan(r, config).run()


def _merge_dicts(outs):
    merged = {}
    for o in outs:
        merged.update(o)
    return merged


def _concat(outs):
    return [x for o in outs for x in o]
