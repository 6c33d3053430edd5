"""Evidence-set plans (FastFDs for FDs, FastDC-style for DCs).

LDP1 compares only tuples sharing an equivalence class on some attribute;
overlapping classes make it compare some pairs more than once.  LDP2 compares
every pair exactly once by self-joining the whole relation.  Either way the
deduplicated evidence goes to the driver, which computes minimal covers.
"""

from __future__ import annotations

import numpy as np

from ..cluster import (
    DRIVER,
    Cluster,
    Task,
    TriangleLayout,
    block_distribute,
    block_task_pairs,
    block_task_rows,
    evidence_nbytes,
    rows_nbytes,
    split_chunks,
    task_pair_arrays,
    PairTask,
)
from ..model import DC, DC_FULL, FD_INEQUALITY, PredicateSpace, Relation, full_set
from ..primitives import dcs_from_evidence, evidence_for_pairs, fds_from_evidence
from .base import DiscoveryResult, FASTFDS, PlanConfig, finish, single_attribute_partitions


def cartesian_pairs(rows: np.ndarray, w: int, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Pairs owned by worker ``w`` when a block is streamed against every
    ``k``-th row of itself: slice row first, partner later in the block."""
    rows = np.asarray(rows, dtype=np.int64)
    pos = np.arange(w, len(rows), k)
    counts = len(rows) - 1 - pos
    left = np.repeat(pos, counts)
    starts = np.repeat(pos + 1 - np.cumsum(np.concatenate([[0], counts[:-1]])), counts)
    right = np.arange(len(left)) + starts
    return rows[left], rows[right]


class EvidencePlan:
    def __init__(self, r: Relation, config: PlanConfig, cluster: Cluster | None = None):
        self.r = r
        self.config = config
        self.cluster = cluster or Cluster(config.cluster)
        self.dc = config.dep_kind == DC
        self.P = PredicateSpace.build(r, DC_FULL if self.dc else FD_INEQUALITY)
        self.row_bytes = rows_nbytes(1, r.m) - rows_nbytes(0, r.m)
        self.ev_bytes = evidence_nbytes(len(self.P))

    def _evidence_job(self, pair_source):
        r, P, dc = self.r, self.P, self.dc

        def run(meter):
            found: set[int] = set()
            for left, right in pair_source():
                meter.work(len(left) * (2 if dc else 1))
                found.update(evidence_for_pairs(r, P, left, right, both_orders=dc))
            return found

        return run

    def _collect(self, name: str, tasks: list[Task]) -> set[int]:
        rec = self.cluster.stage(name)
        outs = self.cluster.run_stage(name, tasks, record=rec)
        evidence: set[int] = set()
        for t, found in zip(tasks, outs):
            rec.send(DRIVER, self.ev_bytes * len(found), t.worker)
            evidence |= found
        return evidence

    # -- LDP1 --------------------------------------------------------------

    def class_pair_evidence(self, name: str = "evidence") -> tuple[set[int], bool]:
        """Evidence of every pair sharing a class on some attribute.

        Returns the evidence and whether any column is constant.
        """
        parts = single_attribute_partitions(self.cluster, self.r, "partitions")
        blocks = [c for a in range(self.r.m) for c in parts[a].classes]
        constant = self.r.n >= 1 and any(parts[a].class_count == 1 for a in range(self.r.m))
        k = self.cluster.k
        tasks = []
        if not self.config.cluster.small_memory:
            plan = block_distribute(blocks, k)
            for w, btasks in plan.items():
                if not btasks:
                    continue
                nbytes = sum(rows_nbytes(len(block_task_rows(t, blocks)), self.r.m) for t in btasks)
                tasks.append(Task(w, self._evidence_job(lambda bt=btasks: (block_task_pairs(t, blocks) for t in bt)), nbytes))
        else:
            # one streamed cartesian product per class; each worker keeps a slice
            per_worker: dict[int, list] = {w: [] for w in range(k)}
            for b in blocks:
                for w in range(min(k, len(b))):
                    per_worker[w].append(b)
            for w, bs in per_worker.items():
                if not bs:
                    continue
                nbytes = sum(rows_nbytes(len(range(w, len(b), k)), self.r.m) + rows_nbytes(len(b), self.r.m) for b in bs)
                tasks.append(Task(w, self._evidence_job(lambda bs=bs, w=w: (cartesian_pairs(b, w, k) for b in bs)), nbytes))
        return self._collect(name, tasks), constant

    # -- LDP2 --------------------------------------------------------------

    def all_pair_evidence(self, name: str = "evidence") -> set[int]:
        """Evidence of all ``n (n - 1) / 2`` unordered pairs (both orders for DCs)."""
        rows = list(range(self.r.n))
        k = self.cluster.k
        tasks = []
        if not self.config.cluster.small_memory:
            layout = TriangleLayout.for_workers(k)
            chunks = split_chunks(rows, layout.l)
            for (p, q), w in layout.assignment.items():
                nrows = len(chunks[p - 1]) + (0 if p == q else len(chunks[q - 1]))
                job = self._evidence_job(lambda p=p, q=q, w=w: [task_pair_arrays(PairTask(w, p, q), chunks)])
                tasks.append(Task(w, job, rows_nbytes(nrows, self.r.m)))
        else:
            for w in range(min(k, len(rows))):
                nbytes = rows_nbytes(len(range(w, len(rows), k)), self.r.m) + rows_nbytes(len(rows), self.r.m)
                tasks.append(Task(w, self._evidence_job(lambda w=w: [cartesian_pairs(rows, w, k)]), nbytes))
        return self._collect(name, tasks)

    # -- driver --------------------------------------------------------------

    def run(self) -> DiscoveryResult:
        r = self.r
        if self.config.ldp == 1:
            evidence, constant = self.class_pair_evidence()
            # pairs sharing no class differ everywhere; present whenever no column is constant
            if r.n >= 2 and not constant:
                evidence.add(full_set(r.m))
        else:
            evidence = self.all_pair_evidence()
        rec = self.cluster.stage("covers")
        ordered = sorted(evidence, key=lambda e: (bin(e).count("1"), e))
        rec.work(DRIVER, len(ordered))
        if self.dc:
            deps = dcs_from_evidence(ordered, self.P, self.config.keep_trivial)
        else:
            deps = fds_from_evidence(ordered, r.m)
        self.cluster.ledger.commit(rec)
        stage = self.cluster.ledger.select("evidence")
        comparisons = sum(s.total_units for s in stage)
        if self.dc:
            comparisons //= 2
        return finish(r, deps, self.cluster.ledger, evidence_sets=len(evidence), comparisons=comparisons)


def run_fastfds(r: Relation, config: PlanConfig | None = None) -> DiscoveryResult:
    config = (config or PlanConfig(algorithm=FASTFDS)).validate()
    return EvidencePlan(r, config).run()
