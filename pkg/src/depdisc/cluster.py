"""Deterministic in-process multi-worker runtime with metered data movement.

Nothing here performs RPC.  A *stage* is a list of per-worker tasks; before a
task runs, the bytes it would have received over the network are charged to
its worker, and while it runs it reports work units (tuple comparisons, rows
hashed, class members scanned).  The ledger keeps, per stage, the maximum
bytes received by any worker (``X``) and the maximum work done by any worker
(``Y``).  Results are merged in task order, so they never depend on thread
scheduling.
"""

from __future__ import annotations

import math
import os
import struct
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations, product
from typing import Any, Callable, Sequence

import numpy as np

from .model import Partition, Relation, attrs_of, attrset_nbytes, make_partition

DRIVER = -1
CODE_BYTES = 4
ID_BYTES = 4
LEN_BYTES = 4


def physical_threads() -> int:
    """Thread cap from ``DEPDISC_THREADS``; affects timing only."""
    try:
        return max(1, int(os.environ.get("DEPDISC_THREADS", "1")))
    except ValueError:
        return 1


# ---------------------------------------------------------------------------
# canonical serialization sizes


def rows_nbytes(count: int, width: int) -> int:
    """Row payload: length prefix, then per row its id and ``width`` codes."""
    return LEN_BYTES + count * (ID_BYTES + CODE_BYTES * width)


def serialize_rows(row_ids: Sequence[int], codes: np.ndarray) -> bytes:
    row_ids = np.asarray(row_ids, dtype="<u4").reshape(-1, 1)
    body = np.concatenate([row_ids, np.asarray(codes, dtype="<u4").reshape(len(row_ids), -1)], axis=1)
    return struct.pack("<I", len(row_ids)) + body.astype("<u4").tobytes()


def column_nbytes(n: int) -> int:
    return LEN_BYTES + CODE_BYTES * n


def partition_nbytes(p: Partition, m: int) -> int:
    stored = sum(len(c) for c in p.classes)
    return attrset_nbytes(m) + LEN_BYTES + LEN_BYTES * len(p.classes) + ID_BYTES * stored + LEN_BYTES


def serialize_partition(p: Partition, m: int) -> bytes:
    words = attrset_nbytes(m) // 4
    head = b"".join(struct.pack("<I", (p.attribute_set >> (32 * w)) & 0xFFFFFFFF) for w in range(words))
    body = [struct.pack("<I", len(p.classes))]
    for c in p.classes:
        body.append(struct.pack("<I", len(c)))
        body.append(np.asarray(c, dtype="<u4").tobytes())
    body.append(struct.pack("<I", p.stripped_singletons))
    return head + b"".join(body)


def node_nbytes(m: int) -> int:
    """Lattice node shipped without its classes: attribute set plus class count."""
    return attrset_nbytes(m) + CODE_BYTES


def evidence_nbytes(universe: int) -> int:
    return 4 * max(1, math.ceil(universe / 32))


def relation_nbytes(r: Relation) -> int:
    return rows_nbytes(r.n, r.m)


@dataclass(frozen=True)
class Chunk:
    id: int
    items: tuple
    byte_size: int


# ---------------------------------------------------------------------------
# ledger


@dataclass
class StageRecord:
    name: str
    k: int
    bytes_received: list[int]
    work_units: list[int]
    bytes_sent: dict[int, int] = field(default_factory=dict)
    driver_received: int = 0
    driver_units: int = 0
    wall_ms: float = 0.0

    @classmethod
    def empty(cls, name: str, k: int) -> "StageRecord":
        return cls(name, k, [0] * k, [0] * k)

    def send(self, dst: int, nbytes: int, src: int = DRIVER) -> None:
        if nbytes <= 0:
            return
        if dst == DRIVER:
            self.driver_received += nbytes
        else:
            self.bytes_received[dst] += nbytes
        self.bytes_sent[src] = self.bytes_sent.get(src, 0) + nbytes

    def work(self, worker: int, units: int) -> None:
        if worker == DRIVER:
            self.driver_units += units
        else:
            self.work_units[worker] += units

    @property
    def X(self) -> int:
        return max(self.bytes_received, default=0)

    @property
    def Y(self) -> int:
        return max(self.work_units, default=0)

    @property
    def total_bytes(self) -> int:
        return sum(self.bytes_received) + self.driver_received

    @property
    def total_sent(self) -> int:
        return sum(self.bytes_sent.values())

    @property
    def total_units(self) -> int:
        return sum(self.work_units) + self.driver_units

    def as_dict(self) -> dict:
        return {
            "stage_name": self.name,
            "k": self.k,
            "X_bytes": self.X,
            "Y_units": self.Y,
            "total_bytes": self.total_bytes,
            "total_units": self.total_units,
            "wall_ms": round(self.wall_ms, 3),
        }


class CostLedger:
    def __init__(self):
        self.stages: list[StageRecord] = []
        self._lock = threading.Lock()

    def commit(self, stage: StageRecord) -> None:
        with self._lock:
            self.stages.append(stage)

    def report(self) -> list[dict]:
        return [s.as_dict() for s in self.stages]

    def select(self, prefix: str = "") -> list[StageRecord]:
        return [s for s in self.stages if s.name.startswith(prefix)]

    def total_bytes(self, prefix: str = "") -> int:
        return sum(s.total_bytes for s in self.select(prefix))

    def total_units(self, prefix: str = "") -> int:
        return sum(s.total_units for s in self.select(prefix))

    def X(self, prefix: str = "") -> int:
        """Sum over stages of the per-stage maximum bytes received."""
        return sum(s.X for s in self.select(prefix))

    def Y(self, prefix: str = "") -> int:
        return sum(s.Y for s in self.select(prefix))

    def wall_ms(self) -> float:
        return sum(s.wall_ms for s in self.stages)

    def summary(self) -> dict:
        return {
            "stages": len(self.stages),
            "total_bytes": self.total_bytes(),
            "total_units": self.total_units(),
            "X_bytes": self.X(),
            "Y_units": self.Y(),
            "wall_ms": round(self.wall_ms(), 3),
        }


# ---------------------------------------------------------------------------
# runtime


@dataclass(frozen=True)
class ClusterConfig:
    k: int = 4
    memory_budget: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("worker count k must be >= 1")
        if self.memory_budget < 0:
            raise ValueError("memory budget must be >= 0")

    @property
    def small_memory(self) -> bool:
        return self.memory_budget > 0


class StageError(RuntimeError):
    def __init__(self, stage: str, worker: int, cause: BaseException):
        self.stage = stage
        self.worker = worker
        super().__init__(f"stage {stage!r} failed on worker {worker}: {cause!r}")


class Meter:
    __slots__ = ("units",)

    def __init__(self):
        self.units = 0

    def work(self, units: int) -> None:
        self.units += int(units)


@dataclass
class Task:
    """One unit of worker-side execution.

    ``receive`` lists ``(source, nbytes)`` transfers into the worker; an int is
    shorthand for a single transfer from the driver.
    """

    worker: int
    fn: Callable[[Meter], Any]
    receive: int | list[tuple[int, int]] = 0


@dataclass
class BroadcastHandle:
    payload_id: str
    nbytes: int
    cached_at: set[int] = field(default_factory=set)
    spilled: bool = False


class Cluster:
    def __init__(self, config: ClusterConfig | None = None, ledger: CostLedger | None = None, threads: int | None = None):
        self.config = config or ClusterConfig()
        self.ledger = ledger or CostLedger()
        self.threads = threads or physical_threads()
        self._broadcasts: dict[str, BroadcastHandle] = {}

    @property
    def k(self) -> int:
        return self.config.k

    def stage(self, name: str) -> StageRecord:
        return StageRecord.empty(name, self.k)

    def run_stage(
        self,
        name: str,
        tasks: Sequence[Task],
        merge: Callable[[list], Any] | None = None,
        record: StageRecord | None = None,
    ):
        """Charge, execute and merge ``tasks``; one ledger stage per call."""
        rec = record or self.stage(name)
        start = time.perf_counter()
        for t in tasks:
            if isinstance(t.receive, int):
                rec.send(t.worker, t.receive)
            else:
                for src, nbytes in t.receive:
                    rec.send(t.worker, nbytes, src)
        meters = [Meter() for _ in tasks]

        def call(i: int):
            try:
                return tasks[i].fn(meters[i])
            except Exception as exc:  # surfaced with the worker id
                raise StageError(name, tasks[i].worker, exc) from exc

        if self.threads > 1 and len(tasks) > 1:
            with ThreadPoolExecutor(max_workers=min(self.threads, len(tasks))) as pool:
                outputs = list(pool.map(call, range(len(tasks))))
        else:
            outputs = [call(i) for i in range(len(tasks))]
        for t, meter in zip(tasks, meters):
            rec.work(t.worker, meter.units)
        rec.wall_ms += (time.perf_counter() - start) * 1000.0
        self.ledger.commit(rec)
        if merge is None:
            return outputs
        return merge(outputs)

    def broadcast(self, payload_id: str, nbytes: int, rec: StageRecord, workers: Sequence[int] | None = None) -> BroadcastHandle:
        """Ship a payload to workers once per job; spills are re-streamed per use.

        A payload larger than a positive memory budget cannot be cached and
        is charged again on every use.
        """
        handle = self._broadcasts.get(payload_id)
        if handle is None:
            handle = BroadcastHandle(payload_id, nbytes)
            handle.spilled = self.config.small_memory and nbytes > self.config.memory_budget
            self._broadcasts[payload_id] = handle
        for w in range(self.k) if workers is None else workers:
            if handle.spilled:
                rec.send(w, nbytes)
            elif w not in handle.cached_at:
                rec.send(w, nbytes)
                handle.cached_at.add(w)
        return handle

    def broadcast_residual(self, payload_id: str, nbytes: int, workers: Sequence[int] | None = None) -> int:
        """Bytes a broadcast to ``workers`` would still cost right now."""
        handle = self._broadcasts.get(payload_id)
        targets = list(range(self.k)) if workers is None else list(workers)
        if handle is None or handle.spilled:
            return nbytes * len(targets)
        return nbytes * sum(1 for w in targets if w not in handle.cached_at)

    def group_by(self, r: Relation, X: int, name: str = "group_by") -> Partition:
        """Hash-exchange group-by: rows live on worker ``row % k`` and are
        shuffled to reducer ``hash(X-codes) % k``."""
        return self.group_by_many(r, [X], name)[X]

    def group_by_many(self, r: Relation, sets: Sequence[int], name: str = "group_by") -> dict[int, Partition]:
        """One shuffle per attribute set, all inside a single ledger stage."""
        k = self.k
        rec = self.stage(name)
        owner = np.arange(r.n) % k
        tasks, spans = [], []
        for X in sets:
            attrs = attrs_of(X)
            keys = r.codes[:, attrs]
            reducer = (_hash_rows(keys) % np.uint64(k)).astype(np.int64)
            record_bytes = ID_BYTES + CODE_BYTES * len(attrs)
            for w in range(k):
                rec.work(w, int(np.count_nonzero(owner == w)))
            flows = np.zeros((k, k), dtype=np.int64)
            np.add.at(flows, (owner, reducer), 1)
            start = len(tasks)
            for dst in range(k):
                rows = np.flatnonzero(reducer == dst)
                receive = [(src, int(flows[src, dst]) * record_bytes) for src in range(k) if flows[src, dst]]
                tasks.append(Task(dst, _reduce_groups(rows, keys[rows]), receive))
            spans.append((X, start, len(tasks)))

        def merge(outs):
            return {X: make_partition(X, [g for out in outs[a:b] for g in out]) for X, a, b in spans}

        return self.run_stage(name, tasks, merge, record=rec)


def _hash_rows(keys: np.ndarray) -> np.ndarray:
    h = np.zeros(keys.shape[0], dtype=np.uint64)
    mult = np.uint64(0x9E3779B97F4A7C15)
    with np.errstate(over="ignore"):
        for j in range(keys.shape[1]):
            h = (h ^ keys[:, j].astype(np.uint64)) * mult
            h ^= h >> np.uint64(29)
    return h


def _reduce_groups(rows: np.ndarray, keys: np.ndarray):
    def run(meter: Meter):
        meter.work(len(rows))
        groups: dict[tuple, list[int]] = {}
        for row, key in zip(rows.tolist(), map(tuple, keys.tolist())):
            groups.setdefault(key, []).append(row)
        return list(groups.values())

    return run


# ---------------------------------------------------------------------------
# placement strategies


def scatter_round_robin(items: Sequence, k: int) -> dict[int, list[int]]:
    """Item ``i`` goes to worker ``i mod k``; returns worker -> item indices."""
    if k < 1:
        raise ValueError("k must be >= 1")
    out: dict[int, list[int]] = {w: [] for w in range(k)}
    for i in range(len(items)):
        out[i % k].append(i)
    return out


def triangle_side(k: int) -> int:
    """Largest ``l`` with ``l (l + 1) / 2 <= k``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    l = int((math.isqrt(8 * k + 1) - 1) // 2)
    while (l + 1) * (l + 2) // 2 <= k:
        l += 1
    while l * (l + 1) // 2 > k:
        l -= 1
    return l


@dataclass(frozen=True)
class TriangleLayout:
    """Chunk pairs ``(p, q)``, ``1 <= p <= q <= l``, one per worker; extra workers idle."""

    k: int
    l: int
    assignment: dict[tuple[int, int], int]

    @classmethod
    def for_workers(cls, k: int, workers: Sequence[int] | None = None) -> "TriangleLayout":
        l = triangle_side(k)
        ids = list(range(k)) if workers is None else list(workers)
        pairs = [(p, q) for p in range(1, l + 1) for q in range(p, l + 1)]
        return cls(k, l, {pq: ids[i] for i, pq in enumerate(pairs)})

    def chunks_of(self, worker: int) -> tuple[int, ...]:
        for (p, q), w in self.assignment.items():
            if w == worker:
                return (p,) if p == q else (p, q)
        return ()


@dataclass(frozen=True)
class PairTask:
    worker: int
    p: int
    q: int


def split_chunks(items: Sequence, l: int) -> list[list]:
    """``l`` contiguous chunks whose sizes differ by at most one."""
    n = len(items)
    base, extra = divmod(n, l)
    out, start = [], 0
    for i in range(l):
        size = base + (1 if i < extra else 0)
        out.append(list(items[start : start + size]))
        start += size
    return out


def make_chunks(items: Sequence, l: int, item_nbytes: Callable[[Any], int]) -> list[Chunk]:
    return [
        Chunk(i + 1, tuple(c), LEN_BYTES + sum(item_nbytes(x) for x in c))
        for i, c in enumerate(split_chunks(items, l))
    ]


def triangle_self_join(chunks: Sequence, k: int) -> tuple[list[PairTask], TriangleLayout]:
    layout = TriangleLayout.for_workers(k)
    if len(chunks) != layout.l:
        raise ValueError(f"triangle join over {k} workers needs {layout.l} chunks, got {len(chunks)}")
    tasks = [PairTask(w, p, q) for (p, q), w in layout.assignment.items()]
    return tasks, layout


def _chunk_items(c):
    return c.items if isinstance(c, Chunk) else c


def task_pairs(task: PairTask, chunks: Sequence) -> list[tuple]:
    """Pairs a triangle worker generates: cross-chunk off the diagonal, intra-chunk on it."""
    a = _chunk_items(chunks[task.p - 1])
    if task.p == task.q:
        return list(combinations(a, 2))
    return list(product(a, _chunk_items(chunks[task.q - 1])))


def task_pair_arrays(task: PairTask, chunks: Sequence) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized :func:`task_pairs` for integer chunks."""
    a = np.asarray(_chunk_items(chunks[task.p - 1]), dtype=np.int64)
    if task.p == task.q:
        i, j = np.triu_indices(len(a), k=1)
        return a[i], a[j]
    b = np.asarray(_chunk_items(chunks[task.q - 1]), dtype=np.int64)
    return np.repeat(a, len(b)), np.tile(b, len(a))


@dataclass(frozen=True)
class BlockTask:
    """Pair generation for one block: the whole block, or one triangle chunk pair of it."""

    worker: int
    block: int
    p: int = 1
    q: int = 1
    l: int = 1


def block_weight(size: int) -> int:
    return size * (size - 1) // 2


def block_distribute(blocks: Sequence[Sequence[int]], k: int) -> dict[int, list[BlockTask]]:
    """Balance intra-block pair generation over ``k`` workers.

    Blocks heavier than ``W / k`` get a proportional share of the least
    loaded workers and are split with the triangle layout; lighter blocks are
    packed whole, heaviest first, onto the least loaded worker.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    out: dict[int, list[BlockTask]] = {w: [] for w in range(k)}
    weights = [block_weight(len(b)) for b in blocks]
    total = sum(weights)
    if total == 0:
        return out
    threshold = total / k
    load = [0] * k
    by_weight = sorted((j for j in range(len(blocks)) if weights[j] > 0), key=lambda j: (-weights[j], j))
    for j in by_weight:
        if weights[j] <= threshold:
            continue
        share = max(1, min(k, round(k * weights[j] / total)))
        workers = sorted(range(k), key=lambda w: (load[w], w))[:share]
        layout = TriangleLayout.for_workers(share, workers)
        sizes = [len(c) for c in split_chunks(blocks[j], layout.l)]
        for (p, q), w in layout.assignment.items():
            out[w].append(BlockTask(w, j, p, q, layout.l))
            load[w] += block_weight(sizes[p - 1]) if p == q else sizes[p - 1] * sizes[q - 1]
    for j in by_weight:
        if weights[j] > threshold:
            continue
        w = min(range(k), key=lambda w: (load[w], w))
        out[w].append(BlockTask(w, j))
        load[w] += weights[j]
    return out


def block_task_rows(task: BlockTask, blocks: Sequence[Sequence[int]]) -> list[int]:
    """Rows a worker must receive for ``task``."""
    if task.l == 1:
        return list(blocks[task.block])
    chunks = split_chunks(blocks[task.block], task.l)
    return chunks[task.p - 1] if task.p == task.q else chunks[task.p - 1] + chunks[task.q - 1]


def block_task_pairs(task: BlockTask, blocks: Sequence[Sequence[int]]) -> tuple[np.ndarray, np.ndarray]:
    if task.l == 1:
        return task_pair_arrays(PairTask(task.worker, 1, 1), [blocks[task.block]])
    chunks = split_chunks(blocks[task.block], task.l)
    return task_pair_arrays(PairTask(task.worker, task.p, task.q), chunks)


def grouped_class_assignment(classes: Sequence[Sequence[int]], k: int) -> list[list]:
    """Sort classes by size, cut into groups of ``k``, deal one per worker per group."""
    order = sorted(range(len(classes)), key=lambda i: (len(classes[i]), i))
    out: list[list] = [[] for _ in range(k)]
    for pos, i in enumerate(order):
        out[pos % k].append(classes[i])
    return out


def cartesian_slices(rows: Sequence[int], k: int) -> list[tuple[list[int], list[int]]]:
    """Spill-friendly self-join: worker ``w`` keeps every ``k``-th row as its
    slice and streams the whole input against it, keeping only pairs whose
    slice row comes first."""
    rows = list(rows)
    return [(rows[w::k], rows) for w in range(k)]
