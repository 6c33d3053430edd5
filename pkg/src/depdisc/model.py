"""Relational data model shared by every discovery plan.

Relations are dictionary-encoded column stores.  Every column keeps a sorted
dictionary of raw values and an order-preserving integer code per row, so
equality, order and hashing all run on small integers.  Attribute sets are
plain Python ``int`` bitmasks (bit ``a`` set means attribute ``a`` is in the
set); evidence sets are bitmasks over a predicate space.
"""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

CATEGORICAL = "categorical"
NUMERIC = "numeric"

_DECIMAL = re.compile(r"^\s*[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?\s*$")


class InputError(ValueError):
    """Raised when an input file cannot be turned into a relation."""

    def __init__(self, message: str, row: int | None = None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


# ---------------------------------------------------------------------------
# attribute sets


def attrset(attrs: Iterable[int]) -> int:
    mask = 0
    for a in attrs:
        mask |= 1 << a
    return mask


def attrs_of(mask: int) -> list[int]:
    """Attribute indices of ``mask`` in ascending order."""
    out = []
    a = 0
    while mask:
        if mask & 1:
            out.append(a)
        mask >>= 1
        a += 1
    return out


def cardinality(mask: int) -> int:
    return bin(mask).count("1")


def full_set(m: int) -> int:
    return (1 << m) - 1


def attrset_nbytes(m: int) -> int:
    """Serialized width of an attribute set over ``m`` attributes (4-byte words)."""
    return 4 * max(1, math.ceil(m / 32))


# ---------------------------------------------------------------------------
# columns and relations


@dataclass(frozen=True)
class Column:
    """One dictionary-encoded column.

    ``dictionary`` is sorted by raw value; the first ``null_count`` entries are
    nulls (``None``).  With null-equals-null semantics there is at most one
    null entry, otherwise every empty cell gets a distinct null code.
    """

    kind: str
    codes: np.ndarray
    dictionary: tuple
    null_count: int = 0

    def decode(self, code: int):
        return self.dictionary[code]

    def is_null(self, code: int) -> bool:
        return code < self.null_count


@dataclass(frozen=True)
class Relation:
    name: str
    attribute_names: tuple[str, ...]
    columns: tuple[Column, ...]
    row_count: int
    codes: np.ndarray = field(repr=False, compare=False)

    @property
    def n(self) -> int:
        return self.row_count

    @property
    def m(self) -> int:
        return len(self.columns)

    def index(self, name: str) -> int:
        try:
            return self.attribute_names.index(name)
        except ValueError:
            raise KeyError(f"unknown attribute {name!r}") from None

    def cell(self, row: int, attr: int):
        return self.columns[attr].decode(int(self.codes[row, attr]))

    def row(self, i: int) -> tuple:
        return tuple(self.cell(i, a) for a in range(self.m))

    def take(self, rows: Sequence[int] | np.ndarray, name: str | None = None) -> "Relation":
        """Sub-relation over ``rows`` that keeps this relation's dictionaries."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = tuple(
            Column(c.kind, c.codes[rows], c.dictionary, c.null_count) for c in self.columns
        )
        return _assemble(name or self.name, self.attribute_names, cols)

    @classmethod
    def from_rows(
        cls,
        attribute_names: Sequence[str],
        rows: Iterable[Sequence],
        name: str = "relation",
        type_hints: Mapping[str, str] | None = None,
        null_equal: bool = True,
    ) -> "Relation":
        """Encode raw cells; ``None`` or ``""`` is null, strings that parse as
        decimals make a numeric column unless a hint says otherwise."""
        rows = [list(r) for r in rows]
        m = len(attribute_names)
        for i, r in enumerate(rows):
            if len(r) != m:
                raise InputError(f"expected {m} cells, found {len(r)}", row=i + 2)
        hints = dict(type_hints or {})
        cols = []
        for a, attr_name in enumerate(attribute_names):
            cells = [r[a] for r in rows]
            cols.append(_encode_column(cells, hints.get(attr_name), null_equal, attr_name))
        return _assemble(name, tuple(attribute_names), tuple(cols))


def _assemble(name: str, names: tuple[str, ...], cols: tuple[Column, ...]) -> Relation:
    if not names:
        raise InputError("relation needs at least one attribute")
    n = len(cols[0].codes)
    for c in cols:
        if len(c.codes) != n:
            raise ValueError("columns differ in length")
    if n:
        matrix = np.ascontiguousarray(np.stack([c.codes for c in cols], axis=1), dtype=np.int64)
    else:
        matrix = np.zeros((0, len(cols)), dtype=np.int64)
    return Relation(name, names, cols, n, matrix)


def _is_null(v) -> bool:
    return v is None or (isinstance(v, str) and v.strip() == "")


def _parse_number(v):
    if isinstance(v, bool):
        raise ValueError(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        if not math.isfinite(v):
            raise ValueError(v)
        return int(v) if float(v).is_integer() else float(v)
    s = str(v)
    if not _DECIMAL.match(s):
        raise ValueError(s)
    x = float(s)
    if not math.isfinite(x):
        raise ValueError(s)
    return int(x) if x.is_integer() and abs(x) < 2**53 else x


def _encode_column(cells: list, hint: str | None, null_equal: bool, attr_name: str) -> Column:
    present = [v for v in cells if not _is_null(v)]
    if hint not in (None, CATEGORICAL, NUMERIC):
        raise InputError(f"unknown type hint {hint!r} for {attr_name}")
    if hint is None:
        kind = CATEGORICAL
        if present:
            try:
                [_parse_number(v) for v in present]
                kind = NUMERIC
            except ValueError:
                kind = CATEGORICAL
    else:
        kind = hint

    if kind == NUMERIC:
        values = []
        for i, v in enumerate(cells):
            if _is_null(v):
                values.append(None)
                continue
            try:
                values.append(_parse_number(v))
            except ValueError:
                raise InputError(f"{attr_name}: {v!r} is not numeric", row=i + 2) from None
        distinct = sorted(set(x for x in values if x is not None))
    else:
        values = [None if _is_null(v) else str(v) for v in cells]
        distinct = sorted(set(x for x in values if x is not None), key=lambda s: s.encode("utf-8"))

    nulls = sum(1 for x in values if x is None)
    null_count = (1 if nulls else 0) if null_equal else nulls
    lookup = {v: null_count + i for i, v in enumerate(distinct)}
    codes = np.empty(len(values), dtype=np.int64)
    next_null = 0
    for i, x in enumerate(values):
        if x is None:
            codes[i] = 0 if null_equal else next_null
            next_null += 1
        else:
            codes[i] = lookup[x]
    dictionary = (None,) * null_count + tuple(distinct)
    return Column(kind, codes, dictionary, null_count)


def load_csv(
    path: str | Path,
    type_hints: Mapping[str, str] | None = None,
    null_equal: bool = True,
    name: str | None = None,
) -> Relation:
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise InputError("missing header row", row=1) from None
            header = [h.strip() for h in header]
            rows = []
            for line_no, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != len(header):
                    raise InputError(f"expected {len(header)} cells, found {len(row)}", row=line_no)
                rows.append(row)
    except (OSError, UnicodeDecodeError, csv.Error) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    return Relation.from_rows(header, rows, name=name or path.stem, type_hints=type_hints, null_equal=null_equal)


def project_pair(r: Relation, i: int, j: int) -> tuple[np.ndarray, np.ndarray]:
    """Code vectors of rows ``i`` and ``j`` (views, no copy)."""
    if i == j:
        raise ValueError("a tuple pair needs two distinct rows")
    if not (0 <= i < r.n and 0 <= j < r.n):
        raise IndexError(f"row ids {i}, {j} out of range for {r.n} rows")
    return r.codes[i], r.codes[j]


def horizontal_split(r: Relation, p: int, seed: int = 0) -> list[Relation]:
    """Seeded random permutation cut into ``p`` near-equal contiguous blocks."""
    if p < 1:
        raise ValueError("part count must be >= 1")
    perm = np.random.default_rng(seed).permutation(r.n)
    return [
        r.take(np.sort(block), name=f"{r.name}[{i}]")
        for i, block in enumerate(np.array_split(perm, p))
    ]


# ---------------------------------------------------------------------------
# predicates and evidence

EQ, NE, LT, LE, GT, GE = "==", "!=", "<", "<=", ">", ">="
OPERATORS = (EQ, NE, LT, LE, GT, GE)
MIRROR = {EQ: EQ, NE: NE, LT: GT, LE: GE, GT: LT, GE: LE}

FD_INEQUALITY = "fd_inequality"
DC_FULL = "dc_full"


@dataclass(frozen=True, order=True)
class Predicate:
    """``t0.attr op t1.attr``."""

    attribute: int
    op: str

    @property
    def op_rank(self) -> int:
        return OPERATORS.index(self.op)


@dataclass(frozen=True)
class PredicateSpace:
    mode: str
    predicates: tuple[Predicate, ...]
    index: Mapping[Predicate, int] = field(compare=False, repr=False)

    def __len__(self):
        return len(self.predicates)

    @property
    def universe(self) -> int:
        return len(self.predicates)

    @classmethod
    def build(cls, r: Relation, mode: str = FD_INEQUALITY) -> "PredicateSpace":
        preds: list[Predicate] = []
        if mode == FD_INEQUALITY:
            preds = [Predicate(a, NE) for a in range(r.m)]
        elif mode == DC_FULL:
            for a, col in enumerate(r.columns):
                ops = OPERATORS if col.kind == NUMERIC else (EQ, NE)
                preds.extend(Predicate(a, op) for op in ops)
        else:
            raise ValueError(f"unknown predicate space {mode!r}")
        return cls(mode, tuple(preds), {p: i for i, p in enumerate(preds)})

    def mask(self, preds: Iterable[Predicate]) -> int:
        return attrset(self.index[p] for p in preds)

    def predicates_of(self, mask: int) -> list[Predicate]:
        return [self.predicates[i] for i in attrs_of(mask)]

    def mirror(self, evidence: int) -> int:
        """Evidence of the swapped pair (t1, t0)."""
        if self.mode == FD_INEQUALITY:
            return evidence
        out = 0
        for i in attrs_of(evidence):
            p = self.predicates[i]
            out |= 1 << self.index[Predicate(p.attribute, MIRROR[p.op])]
        return out


# ---------------------------------------------------------------------------
# partitions


@dataclass(frozen=True)
class Partition:
    """Stripped partition: classes of size >= 2, singletons only counted."""

    attribute_set: int
    classes: tuple[tuple[int, ...], ...]
    stripped_singletons: int

    @property
    def class_count(self) -> int:
        return len(self.classes) + self.stripped_singletons

    @property
    def row_total(self) -> int:
        return sum(len(c) for c in self.classes) + self.stripped_singletons

    def error(self) -> int:
        """Stored rows minus stored classes; equal errors mean equal counts."""
        return sum(len(c) for c in self.classes) - len(self.classes)

    def as_sets(self, with_singletons: int | None = None) -> set[frozenset[int]]:
        """Classes as a set of frozensets; pass ``n`` to add the singletons back."""
        out = {frozenset(c) for c in self.classes}
        if with_singletons is not None:
            covered = set().union(*self.classes) if self.classes else set()
            out |= {frozenset([i]) for i in range(with_singletons) if i not in covered}
        return out


def make_partition(attribute_set: int, groups: Iterable[Sequence[int]]) -> Partition:
    """Canonical Partition from arbitrary (possibly unsorted) groups."""
    classes = []
    singles = 0
    for g in groups:
        if len(g) >= 2:
            classes.append(tuple(sorted(int(x) for x in g)))
        elif len(g) == 1:
            singles += 1
    classes.sort(key=lambda c: c[0])
    return Partition(attribute_set, tuple(classes), singles)


# ---------------------------------------------------------------------------
# dependencies

FD, UCC, OD, DC = "fd", "ucc", "od", "dc"
ASC, DESC = "asc", "desc"
_KIND_ORDER = {FD: 0, UCC: 1, OD: 2, DC: 3}


@dataclass(frozen=True)
class Dependency:
    kind: str
    lhs: int = 0
    rhs: int | None = None
    direction: str | None = None
    predicates: tuple[Predicate, ...] = ()

    @classmethod
    def fd(cls, lhs: int, rhs: int) -> "Dependency":
        return cls(FD, lhs, rhs)

    @classmethod
    def ucc(cls, columns: int) -> "Dependency":
        return cls(UCC, columns)

    @classmethod
    def od(cls, lhs: int, rhs: int, direction: str = ASC) -> "Dependency":
        if direction not in (ASC, DESC):
            raise ValueError(direction)
        return cls(OD, lhs, rhs, direction)

    @classmethod
    def dc(cls, predicates: Iterable[Predicate]) -> "Dependency":
        return cls(DC, predicates=tuple(sorted(set(predicates), key=lambda p: (p.attribute, p.op_rank))))

    @property
    def columns(self) -> int:
        return self.lhs

    def sort_key(self):
        return (
            _KIND_ORDER[self.kind],
            -1 if self.rhs is None else self.rhs,
            cardinality(self.lhs),
            attrs_of(self.lhs),
            self.direction or "",
            [(p.attribute, p.op_rank) for p in self.predicates],
        )

    def render(self, names: Sequence[str]) -> str:
        def attr_list(mask: int, sep: str) -> str:
            return sep.join(names[a] for a in attrs_of(mask))

        if self.kind == FD:
            lhs = attr_list(self.lhs, ",") if self.lhs else "TRUE"
            return f"{lhs} -> {names[self.rhs]}"
        if self.kind == UCC:
            return f"UNIQUE({attr_list(self.lhs, ',')})"
        if self.kind == OD:
            lhs = attr_list(self.lhs, ",") if self.lhs else "TRUE"
            return f"{lhs} ~> {names[self.rhs]} [{self.direction}]"
        body = " & ".join(f"t0.{names[p.attribute]} {p.op} t1.{names[p.attribute]}" for p in self.predicates)
        return f"!( {body} )"


_FD_RE = re.compile(r"^\s*(.*?)\s*->\s*(\S+)\s*$")
_OD_RE = re.compile(r"^\s*(.*?)\s*~>\s*(\S+)\s*\[(asc|desc)\]\s*$")
_UCC_RE = re.compile(r"^\s*UNIQUE\((.*)\)\s*$")
_DC_RE = re.compile(r"^\s*!\(\s*(.*?)\s*\)\s*$")
_PRED_RE = re.compile(r"^t0\.(\S+)\s+(==|!=|<=|>=|<|>)\s+t1\.(\S+)$")


def parse_dependency(text: str, names: Sequence[str]) -> Dependency:
    """Inverse of :meth:`Dependency.render`."""
    idx = {n: i for i, n in enumerate(names)}

    def lhs_mask(s: str) -> int:
        s = s.strip()
        if s in ("", "TRUE"):
            return 0
        return attrset(idx[a.strip()] for a in s.split(","))

    if m := _OD_RE.match(text):
        return Dependency.od(lhs_mask(m.group(1)), idx[m.group(2)], m.group(3))
    if m := _UCC_RE.match(text):
        return Dependency.ucc(lhs_mask(m.group(1)))
    if m := _DC_RE.match(text):
        preds = []
        for part in m.group(1).split("&"):
            pm = _PRED_RE.match(part.strip())
            if not pm or pm.group(1) != pm.group(3):
                raise ValueError(f"cannot parse predicate {part!r}")
            preds.append(Predicate(idx[pm.group(1)], pm.group(2)))
        return Dependency.dc(preds)
    if m := _FD_RE.match(text):
        return Dependency.fd(lhs_mask(m.group(1)), idx[m.group(2)])
    raise ValueError(f"cannot parse dependency {text!r}")


def canonical(deps: Iterable[Dependency]) -> list[Dependency]:
    return sorted(set(deps), key=Dependency.sort_key)


def render_all(deps: Iterable[Dependency], names: Sequence[str]) -> list[str]:
    return [d.render(names) for d in canonical(deps)]
