"""Single-address-space kernels for the six discovery primitives.

The distributed strategies in :mod:`depdisc.cluster` and the plans in
:mod:`depdisc.plans` only decide *where* these kernels run and what gets
shipped; every partition, evidence set and cover is computed here.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, product
from typing import Callable, Iterable, Sequence

import numpy as np

from .model import (
    ASC,
    DC_FULL,
    EQ,
    FD_INEQUALITY,
    GE,
    GT,
    LE,
    LT,
    NE,
    NUMERIC,
    Dependency,
    Partition,
    Predicate,
    PredicateSpace,
    Relation,
    attrs_of,
    cardinality,
)

COUNT_BASED = "count_based"
ORDER_BASED = "order_based"


# ---------------------------------------------------------------------------
# equivalence classes


def group_labels(codes: np.ndarray) -> tuple[np.ndarray, int]:
    """Dense group label per row of an ``n x w`` code matrix, plus the group count."""
    n = codes.shape[0]
    if n == 0:
        return np.zeros(0, dtype=np.int64), 0
    if codes.shape[1] == 0:
        return np.zeros(n, dtype=np.int64), 1
    _, labels = np.unique(codes[:, 0], return_inverse=True)
    for j in range(1, codes.shape[1]):
        col = codes[:, j]
        key = labels * (int(col.max()) + 1) + col
        _, labels = np.unique(key, return_inverse=True)
    labels = labels.reshape(-1)
    return labels, int(labels.max()) + 1


def class_count(r: Relation, X: int) -> int:
    """``|pi_X|`` by hashing the data, without materializing classes."""
    return group_labels(r.codes[:, attrs_of(X)])[1]


def gen_eq_class(X: int, r: Relation) -> Partition:
    labels, count = group_labels(r.codes[:, attrs_of(X)])
    if count == 0:
        return Partition(X, (), 0)
    order = np.argsort(labels, kind="stable")
    sizes = np.bincount(labels, minlength=count)
    bounds = np.cumsum(sizes)[:-1]
    groups = np.split(order, bounds)
    classes = [tuple(g.tolist()) for g in groups if len(g) >= 2]
    classes.sort(key=lambda c: c[0])
    return Partition(X, tuple(classes), int(np.count_nonzero(sizes == 1)))


def intersect_partitions(pX: Partition, pY: Partition, n: int) -> Partition:
    """Probe-table product of two stripped partitions over the same ``n`` rows."""
    probe = [-1] * n
    for label, cls in enumerate(pX.classes):
        for t in cls:
            probe[t] = label
    out = []
    for cls in pY.classes:
        buckets: dict[int, list[int]] = {}
        for t in cls:
            label = probe[t]
            if label >= 0:
                buckets.setdefault(label, []).append(t)
        out.extend(tuple(b) for b in buckets.values() if len(b) >= 2)
    out.sort(key=lambda c: c[0])
    stored = sum(len(c) for c in out)
    return Partition(pX.attribute_set | pY.attribute_set, tuple(out), n - stored)


def lex_order(r: Relation, X: int) -> np.ndarray:
    """Row ids sorted lexicographically by X's codes (ascending column index), ties by row id."""
    attrs = attrs_of(X)
    if not attrs:
        return np.arange(r.n)
    return np.lexsort([r.codes[:, a] for a in reversed(attrs)])


# ---------------------------------------------------------------------------
# refinement


@dataclass(frozen=True)
class RefinementInput:
    mode: str
    left_count: int = 0
    combined_count: int = 0
    left_partition: Partition | None = None
    rhs_column: np.ndarray | None = None
    left_order: np.ndarray | None = None
    direction: str = ASC
    # left_ties[i]: rows left_order[i] and left_order[i + 1] agree on X
    left_ties: np.ndarray | None = None

    @classmethod
    def counts(cls, left_count: int, combined_count: int) -> "RefinementInput":
        return cls(COUNT_BASED, left_count, combined_count)

    @classmethod
    def ordered(cls, r: Relation, X: int, A: int, direction: str = ASC, left_partition: Partition | None = None):
        """Order-mode input; without a shipped partition the classes are
        read off as runs of equal X in the sort order."""
        order = lex_order(r, X)
        ties = None
        if left_partition is None:
            keys = r.codes[order][:, attrs_of(X)]
            ties = np.all(keys[1:] == keys[:-1], axis=1)
        return cls(
            ORDER_BASED,
            left_partition=left_partition,
            rhs_column=r.codes[:, A],
            left_order=order,
            direction=direction,
            left_ties=ties,
        )


def check_refinement(X: int, A: int, inp: RefinementInput) -> bool:
    """Does ``X -> A`` hold (count mode) or ``X ~> A`` hold (order mode)?

    Order mode requires both halves: every class of ``pi_X`` is constant on A,
    and walking the rows in X's lexicographic order visits A's codes in
    non-decreasing (asc) or non-increasing (desc) order.  Null codes sort first.
    """
    if inp.mode == COUNT_BASED:
        return inp.left_count == inp.combined_count
    col = inp.rhs_column
    seq = col[inp.left_order]
    step = np.diff(seq)
    if inp.left_partition is not None:
        for cls in inp.left_partition.classes:
            first = col[cls[0]]
            if any(col[t] != first for t in cls[1:]):
                return False
    elif np.any(step[inp.left_ties] != 0):
        return False
    if len(seq) < 2:
        return True
    return bool(np.all(step >= 0)) if inp.direction == ASC else bool(np.all(step <= 0))


def refinement_masks(r: Relation, X: int) -> tuple[int, int]:
    """Order-mode refinement of ``X`` against every attribute at once.

    Returns bitmasks of the attributes ``A`` with ``X ~> A`` ascending and
    descending; same criterion as :func:`check_refinement`.
    """
    if r.n < 2:
        full = (1 << r.m) - 1
        return full, full
    order = lex_order(r, X)
    sorted_codes = r.codes[order]
    steps = np.diff(sorted_codes, axis=0)
    keys = sorted_codes[:, attrs_of(X)]
    ties = np.all(keys[1:] == keys[:-1], axis=1)
    constant = ~np.any(steps[ties] != 0, axis=0)
    asc = constant & np.all(steps >= 0, axis=0)
    desc = constant & np.all(steps <= 0, axis=0)
    weights = 1 << np.arange(r.m, dtype=object)
    return int(np.sum(weights[asc])), int(np.sum(weights[desc]))


def is_ucc(X: int, class_count: int, n: int) -> bool:
    return class_count == n


# ---------------------------------------------------------------------------
# evidence


def _predicate_column(ca: np.ndarray, cb: np.ndarray, op: str, null_count: int) -> np.ndarray:
    if op == EQ:
        return ca == cb
    if op == NE:
        return ca != cb
    both = (ca >= null_count) & (cb >= null_count)
    if op == LT:
        return both & (ca < cb)
    if op == LE:
        return both & (ca <= cb)
    if op == GT:
        return both & (ca > cb)
    if op == GE:
        return both & (ca >= cb)
    raise ValueError(op)


def _bit_matrix(r: Relation, P: PredicateSpace, left: np.ndarray, right: np.ndarray) -> np.ndarray:
    a = r.codes[left]
    b = r.codes[right]
    if P.mode == FD_INEQUALITY:
        return a != b
    cols = []
    for p in P.predicates:
        cols.append(_predicate_column(a[:, p.attribute], b[:, p.attribute], p.op, r.columns[p.attribute].null_count))
    if not cols:
        return np.zeros((len(left), 0), dtype=bool)
    return np.stack(cols, axis=1)


def _pack(bits: np.ndarray, unique: bool) -> list[int]:
    if bits.shape[0] == 0:
        return []
    packed = np.packbits(bits, axis=1, bitorder="little")
    if unique:
        packed = np.unique(packed, axis=0)
    return [int.from_bytes(row.tobytes(), "little") for row in packed]


def evidence_for_pairs(
    r: Relation,
    P: PredicateSpace,
    left: Sequence[int] | np.ndarray,
    right: Sequence[int] | np.ndarray,
    both_orders: bool = False,
    unique: bool = True,
) -> list[int]:
    """Evidence bitmasks for the pairs ``(left[i], right[i])``.

    With ``both_orders`` the mirrored pair ``(right[i], left[i])`` is added too,
    which only matters for the order-aware DC space.  ``unique`` collapses
    duplicates (order of the returned list is then by packed bytes).
    """
    left = np.asarray(left, dtype=np.int64)
    right = np.asarray(right, dtype=np.int64)
    bits = _bit_matrix(r, P, left, right)
    if both_orders and P.mode == DC_FULL:
        bits = np.concatenate([bits, _bit_matrix(r, P, right, left)], axis=0)
    return _pack(bits, unique)


def gen_ev_set(i: int, j: int, r: Relation, P: PredicateSpace) -> int:
    if i == j:
        raise ValueError("evidence needs two distinct tuples")
    return evidence_for_pairs(r, P, [i], [j], unique=False)[0]


def pairs_to_arrays(pairs: Iterable[tuple[int, int]]) -> tuple[np.ndarray, np.ndarray]:
    arr = np.fromiter((x for pr in pairs for x in pr), dtype=np.int64)
    arr = arr.reshape(-1, 2)
    return arr[:, 0], arr[:, 1]


# ---------------------------------------------------------------------------
# join


def local_join(S1: Sequence, S2: Sequence, p: Callable | None = None, ordered: bool = False) -> list[tuple]:
    """All pairs ``(a, b)`` from S1 x S2 satisfying ``p``.

    Passing the same object twice is a self-join: unordered pairs ``a`` before
    ``b`` by position, or every ordered pair of distinct positions with
    ``ordered=True``.
    """
    if S1 is S2:
        if ordered:
            gen = ((a, b) for i, a in enumerate(S1) for j, b in enumerate(S1) if i != j)
        else:
            gen = combinations(S1, 2)
    else:
        gen = product(S1, S2)
    if p is None:
        return list(gen)
    return [(a, b) for a, b in gen if p(a, b)]


def window_pairs(cls: Sequence[int], window: int) -> list[tuple[int, int]]:
    """Pairs at positions ``(i, i + window)`` within one equivalence class."""
    if window < 1:
        return []
    return list(zip(cls, cls[window:]))


def prefix(mask: int) -> int:
    return mask & ~(1 << (mask.bit_length() - 1)) if mask else 0


def prefix_rule(a: int, b: int) -> bool:
    """Two same-size attribute sets sharing all but their last attribute."""
    return a != b and prefix(a) == prefix(b)


# ---------------------------------------------------------------------------
# covers


def _minimize_family(sets: list[int]) -> list[int]:
    """Drop supersets: hitting the subset already hits them."""
    kept: list[int] = []
    for s in sorted(set(sets), key=lambda s: (cardinality(s), s)):
        if not any(k & s == k for k in kept):
            kept.append(s)
    return kept


def minimal_covers(sets: Iterable[int], universe: int | None = None) -> list[int]:
    """Every inclusion-minimal hitting set of ``sets``.

    Depth-first search in the FastFDs style: input sets sorted by ascending
    cardinality, at each node the candidate elements ordered by how many of
    the still-uncovered sets they hit (ties by index), and each branch only
    allowed to use elements that come later in its parent's order.  An empty
    input set makes covering impossible and yields ``[]``; an empty family
    has the single cover ``0``.
    """
    sets = list(sets)
    if any(s == 0 for s in sets):
        return []
    family = _minimize_family(sets)
    if not family:
        return [0]
    if universe is None:
        universe = max(s.bit_length() for s in family)
    elements = [e for e in range(universe) if any(s >> e & 1 for s in family)]
    found: list[int] = []

    def minimal(chosen: int) -> bool:
        for e in attrs_of(chosen):
            bit = 1 << e
            if not any(s & chosen == bit for s in family):
                return False
        return True

    def search(chosen: int, remaining: list[int], candidates: list[int]) -> None:
        if not remaining:
            if minimal(chosen):
                found.append(chosen)
            return
        freq = {e: 0 for e in candidates}
        reach = 0
        for s in remaining:
            for e in candidates:
                if s >> e & 1:
                    freq[e] += 1
        order = sorted((e for e in candidates if freq[e]), key=lambda e: (-freq[e], e))
        for e in order:
            reach |= 1 << e
        if any(s & reach == 0 for s in remaining):
            return
        for i, e in enumerate(order):
            bit = 1 << e
            search(chosen | bit, [s for s in remaining if not s & bit], order[i + 1 :])

    search(0, family, elements)
    return sorted(set(found), key=lambda c: (cardinality(c), attrs_of(c)))


def fds_from_evidence(evidence: Iterable[int], m: int) -> list[Dependency]:
    """Minimal FDs implied by fd-inequality evidence (covers per right-hand side).

    Only evidence sets that contain the RHS constrain it; a RHS that never
    differs gets the empty left-hand side.
    """
    evidence = list(set(evidence))
    out = []
    for A in range(m):
        bit = 1 << A
        family = [e & ~bit for e in evidence if e & bit]
        for cover in minimal_covers(family, m):
            out.append(Dependency.fd(cover, A))
    return out


def is_trivial_dc(preds: Iterable[Predicate]) -> bool:
    """True when some attribute's predicates can never hold together."""
    outcomes = ({EQ, LE, GE}, {NE, LT, LE}, {NE, GT, GE})
    by_attr: dict[int, set[str]] = {}
    for p in preds:
        by_attr.setdefault(p.attribute, set()).add(p.op)
    return any(not any(ops <= o for o in outcomes) for ops in by_attr.values())


def dcs_from_evidence(
    evidence: Iterable[int], P: PredicateSpace, keep_trivial: bool = False
) -> list[Dependency]:
    """Minimal DCs from ordered-pair evidence: covers of the complements.

    With no tuple pairs at all every single predicate is a (vacuous) minimal DC.
    """
    evidence = list(set(evidence))
    full = (1 << len(P)) - 1
    if not evidence:
        covers = [1 << i for i in range(len(P))]
    else:
        covers = minimal_covers([full & ~e for e in evidence], len(P))
    out = []
    for c in covers:
        preds = P.predicates_of(c)
        if keep_trivial or not is_trivial_dc(preds):
            out.append(Dependency.dc(preds))
    return out


def numeric_attrs(r: Relation) -> list[int]:
    return [a for a, c in enumerate(r.columns) if c.kind == NUMERIC]
