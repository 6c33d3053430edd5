"""Brute-force ground truth.

Everything here works from the definitions over explicit tuple pairs and
deliberately shares no code with the partition or evidence kernels, so that
the plans can be checked against it.  Candidates are enumerated by size and
then lexicographically; a candidate is minimal when no smaller valid one is
contained in it.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable

import numpy as np

from .model import (
    ASC,
    DC,
    DESC,
    EQ,
    FD,
    GE,
    GT,
    LE,
    LT,
    NE,
    NUMERIC,
    OD,
    OPERATORS,
    UCC,
    Dependency,
    Predicate,
    Relation,
    attrs_of,
    canonical,
)


@dataclass(frozen=True)
class OracleLimits:
    max_rows: int = 500
    max_cols: int = 8
    max_dc_predicates: int = 3


class OracleLimitError(ValueError):
    pass


def _check(r: Relation, limits: OracleLimits) -> None:
    if r.n > limits.max_rows:
        raise OracleLimitError(f"{r.n} rows exceed the oracle limit of {limits.max_rows}")
    if r.m > limits.max_cols:
        raise OracleLimitError(f"{r.m} columns exceed the oracle limit of {limits.max_cols}")


def _order_keys(r: Relation, a: int) -> np.ndarray:
    """Rank of each raw value in its domain order; nulls rank -1."""
    col = r.columns[a]
    raw = [col.dictionary[c] for c in col.codes.tolist()]
    present = {v for v in raw if v is not None}
    if col.kind == NUMERIC:
        domain = sorted(present)
    else:
        domain = sorted(present, key=lambda s: str(s).encode("utf-8"))
    rank = {v: i for i, v in enumerate(domain)}
    return np.array([-1 if v is None else rank[v] for v in raw], dtype=np.int64)


class _Pairs:
    """Per-attribute comparisons over every unordered pair ``i < j``."""

    def __init__(self, r: Relation):
        self.r = r
        i, j = np.triu_indices(r.n, k=1)
        self.i, self.j = i, j
        self.eq = [r.codes[i, a] == r.codes[j, a] for a in range(r.m)]
        keys = [_order_keys(r, a) for a in range(r.m)]
        self.sign = [np.sign(keys[a][i] - keys[a][j]) for a in range(r.m)]
        self._agree: dict[int, np.ndarray] = {0: np.ones(len(i), dtype=bool)}

    def agree(self, X: int) -> np.ndarray:
        got = self._agree.get(X)
        if got is None:
            attrs = attrs_of(X)
            got = self.agree(X & ~(1 << attrs[-1])) & self.eq[attrs[-1]]
            self._agree[X] = got
        return got

    def lex_sign(self, X: int) -> np.ndarray:
        out = np.zeros(len(self.i), dtype=np.int64)
        for a in reversed(attrs_of(X)):
            out = np.where(self.eq[a], out, self.sign[a])
        return out


# ---------------------------------------------------------------------------
# holds


def _fd_holds(r: Relation, lhs: int, rhs: int) -> bool:
    seen: dict[tuple, int] = {}
    cols = attrs_of(lhs)
    for row in r.codes.tolist():
        key = tuple(row[a] for a in cols)
        if seen.setdefault(key, row[rhs]) != row[rhs]:
            return False
    return True


def _ucc_holds(r: Relation, cols: int) -> bool:
    attrs = attrs_of(cols)
    keys = {tuple(row[a] for a in attrs) for row in r.codes.tolist()}
    return len(keys) == r.n


def _od_holds(r: Relation, lhs: int, rhs: int, direction: str, pairs: _Pairs | None = None) -> bool:
    pairs = pairs or _Pairs(r)
    x = pairs.lex_sign(lhs)
    a = pairs.sign[rhs]
    if np.any((x == 0) & (a != 0)):
        return False
    bad = x * a < 0 if direction == ASC else x * a > 0
    return not bool(np.any(bad))


def _dc_satisfied(r: Relation, p: Predicate, i: np.ndarray, j: np.ndarray, keys) -> np.ndarray:
    """Truth of ``t_i.A op t_j.A`` per ordered pair; order ops are false on nulls."""
    a = p.attribute
    if p.op == EQ:
        return r.codes[i, a] == r.codes[j, a]
    if p.op == NE:
        return r.codes[i, a] != r.codes[j, a]
    ki, kj = keys[a][i], keys[a][j]
    valid = (ki >= 0) & (kj >= 0)
    cmp = {LT: ki < kj, LE: ki <= kj, GT: ki > kj, GE: ki >= kj}[p.op]
    return valid & cmp


def _ordered_pairs(n: int) -> tuple[np.ndarray, np.ndarray]:
    i, j = np.nonzero(~np.eye(n, dtype=bool))
    return i, j


def _dc_holds(r: Relation, preds: Iterable[Predicate]) -> bool:
    i, j = _ordered_pairs(r.n)
    keys = {p.attribute: _order_keys(r, p.attribute) for p in preds}
    hit = np.ones(len(i), dtype=bool)
    for p in preds:
        hit &= _dc_satisfied(r, p, i, j, keys)
    return not bool(np.any(hit))


def holds(dep: Dependency, r: Relation) -> bool:
    if dep.kind == FD:
        return _fd_holds(r, dep.lhs, dep.rhs)
    if dep.kind == UCC:
        return _ucc_holds(r, dep.lhs)
    if dep.kind == OD:
        return _od_holds(r, dep.lhs, dep.rhs, dep.direction)
    if dep.kind == DC:
        return _dc_holds(r, dep.predicates)
    raise ValueError(f"unknown dependency kind {dep.kind!r}")


def precision(found: Iterable[Dependency], r: Relation) -> float:
    found = list(found)
    if not found:
        return 1.0
    return sum(holds(d, r) for d in found) / len(found)


# ---------------------------------------------------------------------------
# brute-force discovery


def _subsets(universe: list[int], min_size: int = 0):
    for size in range(min_size, len(universe) + 1):
        for combo in combinations(universe, size):
            yield sum(1 << a for a in combo)


def _is_minimal(X: int, kept: list[int]) -> bool:
    return not any(Y & X == Y for Y in kept)


def brute_fds(r: Relation, limits: OracleLimits = OracleLimits()) -> list[Dependency]:
    _check(r, limits)
    pairs = _Pairs(r)
    out = []
    for A in range(r.m):
        kept: list[int] = []
        others = [a for a in range(r.m) if a != A]
        for X in _subsets(others):
            if not _is_minimal(X, kept):
                continue
            if not np.any(pairs.agree(X) & ~pairs.eq[A]):
                kept.append(X)
                out.append(Dependency.fd(X, A))
    return canonical(out)


def brute_uccs(r: Relation, limits: OracleLimits = OracleLimits()) -> list[Dependency]:
    _check(r, limits)
    pairs = _Pairs(r)
    kept: list[int] = []
    for X in _subsets(list(range(r.m)), 1):
        if _is_minimal(X, kept) and not np.any(pairs.agree(X)):
            kept.append(X)
    return canonical(Dependency.ucc(X) for X in kept)


def brute_ods(r: Relation, limits: OracleLimits = OracleLimits()) -> list[Dependency]:
    _check(r, limits)
    pairs = _Pairs(r)
    out = []
    for A in range(r.m):
        others = [a for a in range(r.m) if a != A]
        for direction in (ASC, DESC):
            kept: list[int] = []
            for X in _subsets(others):
                if _is_minimal(X, kept) and _od_holds(r, X, A, direction, pairs):
                    kept.append(X)
                    out.append(Dependency.od(X, A, direction))
    return canonical(out)


# outcomes a single attribute can show for an ordered pair
_OUTCOMES = (
    {EQ, LE, GE},  # equal values
    {NE, LT, LE},  # smaller
    {NE, GT, GE},  # larger
    {EQ},  # two nulls sharing a code
    {NE},  # a null against anything else
)


def trivially_unsatisfiable(preds: Iterable[Predicate]) -> bool:
    ops: dict[int, set[str]] = {}
    for p in preds:
        ops.setdefault(p.attribute, set()).add(p.op)
    return any(not any(o <= outcome for outcome in _OUTCOMES) for o in ops.values())


def dc_space(r: Relation) -> list[Predicate]:
    out = []
    for a, col in enumerate(r.columns):
        ops = OPERATORS if col.kind == NUMERIC else (EQ, NE)
        out.extend(Predicate(a, op) for op in ops)
    return out


def brute_dcs(r: Relation, limits: OracleLimits = OracleLimits(), keep_trivial: bool = False) -> list[Dependency]:
    """Minimal DCs with at most ``limits.max_dc_predicates`` predicates."""
    _check(r, limits)
    space = dc_space(r)
    i, j = _ordered_pairs(r.n)
    keys = {a: _order_keys(r, a) for a in range(r.m)}
    sat = [_dc_satisfied(r, p, i, j, keys) for p in space]
    kept: list[int] = []
    out = []
    for size in range(1, limits.max_dc_predicates + 1):
        for combo in combinations(range(len(space)), size):
            S = sum(1 << x for x in combo)
            if not _is_minimal(S, kept):
                continue
            hit = np.ones(len(i), dtype=bool)
            for x in combo:
                hit &= sat[x]
            if np.any(hit):
                continue
            kept.append(S)
            preds = [space[x] for x in combo]
            if keep_trivial or not trivially_unsatisfiable(preds):
                out.append(Dependency.dc(preds))
    return canonical(out)


BRUTE = {FD: brute_fds, UCC: brute_uccs, OD: brute_ods, DC: brute_dcs}


def brute(kind: str, r: Relation, limits: OracleLimits = OracleLimits()) -> list[Dependency]:
    return BRUTE[kind](r, limits)
