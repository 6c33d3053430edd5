"""Schema-driven search state: attribute-lattice levels and the FDTree.

Lattice bookkeeping follows TANE's right-hand-side candidates: ``C(X)`` holds
the attributes that may still be the RHS of a minimal dependency whose
attributes all lie in ``X``.  Order dependencies keep one candidate set per
direction and skip key pruning: a key still constrains the order of the RHS.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator

from .model import ASC, DESC, FD, OD, UCC, Dependency, Partition, Relation, attrs_of, cardinality, full_set
from .primitives import gen_eq_class, is_ucc, prefix


@dataclass
class NodeInfo:
    class_count: int
    partition: Partition | None = None
    rhs_candidates: int = 0
    rhs_desc: int = 0
    is_key: bool = False


@dataclass
class LatticeLevel:
    level: int
    nodes: dict[int, NodeInfo] = field(default_factory=dict)

    def __len__(self):
        return len(self.nodes)

    def sets(self) -> list[int]:
        return sorted(self.nodes, key=attrs_of)


@dataclass
class PruneState:
    """Driver-side record of what has been found so far."""

    dependencies: list[Dependency] = field(default_factory=list)
    keys: list[int] = field(default_factory=list)
    # every node ever generated at the current level, pruned or not
    level_counts: dict[int, int] = field(default_factory=dict)


def empty_level(r: Relation, with_partition: bool = True, kind: str = FD) -> LatticeLevel:
    n = r.n
    part = None
    if with_partition:
        part = Partition(0, (tuple(range(n)),) if n >= 2 else (), 1 if n == 1 else 0)
    full = full_set(r.m)
    info = NodeInfo(min(n, 1), part, full, full if kind == OD else 0)
    return LatticeLevel(0, {0: info})


def first_level(r: Relation, with_partitions: bool = True) -> LatticeLevel:
    level = LatticeLevel(1)
    for a in range(r.m):
        p = gen_eq_class(1 << a, r)
        level.nodes[1 << a] = NodeInfo(p.class_count, p if with_partitions else None)
    return level


def join_candidate(a: int, b: int, present: set[int] | dict) -> int | None:
    """Prefix-join two level-``l`` sets; keep the result only if every
    ``l``-subset survived pruning."""
    if a == b or prefix(a) != prefix(b):
        return None
    z = a | b
    for attr in attrs_of(z):
        if z & ~(1 << attr) not in present:
            return None
    return z


def generate_next(level: LatticeLevel | Iterable[int], prune: PruneState | None = None) -> list[int]:
    sets = level.sets() if isinstance(level, LatticeLevel) else sorted(set(level), key=attrs_of)
    present = set(sets)
    groups: dict[int, list[int]] = {}
    for s in sets:
        groups.setdefault(prefix(s), []).append(s)
    out = []
    for members in groups.values():
        for i, a in enumerate(members):
            for b in members[i + 1 :]:
                z = join_candidate(a, b, present)
                if z is not None:
                    out.append(z)
    return sorted(out, key=attrs_of)


def init_candidates(level: LatticeLevel, prev: LatticeLevel, kind: str) -> None:
    """``C(X) = intersection of C(X \\ B)`` over ``B`` in ``X``."""
    for X, node in level.nodes.items():
        asc = desc = -1
        for b in attrs_of(X):
            sub = prev.nodes.get(X & ~(1 << b))
            if sub is None:
                raise RuntimeError(f"level {level.level} node {attrs_of(X)} is missing a parent")
            asc &= sub.rhs_candidates
            desc &= sub.rhs_desc
        node.rhs_candidates = asc
        node.rhs_desc = desc if kind == OD else 0


OdCheck = Callable[[int, int, str], bool]


def node_dependencies(
    X: int,
    node: NodeInfo,
    prev: LatticeLevel,
    kind: str,
    n: int,
    od_check: OdCheck | None = None,
) -> tuple[list[Dependency], int]:
    """Test ``X \\ A -> A`` for the node's candidates; returns found and checks made.

    Mutates only ``node``.
    """
    found: list[Dependency] = []
    checks = 0
    if kind == UCC:
        node.is_key = is_ucc(X, node.class_count, n)
        if node.is_key:
            found.append(Dependency.ucc(X))
        return found, 1
    if kind == FD:
        node.is_key = is_ucc(X, node.class_count, n)
        for A in attrs_of(X & node.rhs_candidates):
            checks += 1
            lhs = X & ~(1 << A)
            if prev.nodes[lhs].class_count == node.class_count:
                found.append(Dependency.fd(lhs, A))
                node.rhs_candidates &= ~(1 << A)
                node.rhs_candidates &= X
        return found, checks
    if kind == OD:
        for A in attrs_of(X):
            lhs = X & ~(1 << A)
            for direction in (ASC, DESC):
                cand = node.rhs_candidates if direction == ASC else node.rhs_desc
                if not cand >> A & 1:
                    continue
                checks += 1
                if od_check(lhs, A, direction):
                    found.append(Dependency.od(lhs, A, direction))
                    if direction == ASC:
                        node.rhs_candidates &= ~(1 << A)
                    else:
                        node.rhs_desc &= ~(1 << A)
        return found, checks
    raise ValueError(f"lattice search does not handle {kind!r}")


def compute_dependencies(
    level: LatticeLevel,
    prev: LatticeLevel,
    kind: str,
    r: Relation | None = None,
    od_check: OdCheck | None = None,
) -> list[Dependency]:
    """Local, single-worker pass over a whole level."""
    n = r.n if r is not None else None
    if kind == OD and od_check is None:
        from .primitives import RefinementInput, check_refinement

        def od_check(lhs, A, direction):
            return check_refinement(lhs, A, RefinementInput.ordered(r, lhs, A, direction))

    init_candidates(level, prev, kind)
    out = []
    for X in level.sets():
        found, _ = node_dependencies(X, level.nodes[X], prev, kind, n, od_check)
        out.extend(found)
    return out


def prune(
    level: LatticeLevel,
    prev: LatticeLevel,
    kind: str,
    n: int,
    count_of: Callable[[list[int]], dict[int, int]] | None = None,
) -> tuple[LatticeLevel, list[Dependency]]:
    """Drop exhausted nodes and keys; emit minimal FDs whose LHS is a key.

    For a key ``X`` and candidate ``A``, ``X -> A`` is minimal iff no
    ``X \\ B -> A`` holds; the needed ``|pi_{X \\ B + A}|`` counts come from this
    level when generated here, otherwise from ``count_of``.
    """
    found: list[Dependency] = []
    survivors = LatticeLevel(level.level)
    if kind == UCC:
        for X in level.sets():
            if not level.nodes[X].is_key:
                survivors.nodes[X] = level.nodes[X]
        return survivors, found
    if kind == OD:
        for X in level.sets():
            node = level.nodes[X]
            if node.rhs_candidates or node.rhs_desc:
                survivors.nodes[X] = node
        return survivors, found

    wanted: list[tuple[int, int, list[int]]] = []
    missing: set[int] = set()
    for X in level.sets():
        node = level.nodes[X]
        if not node.is_key or node.rhs_candidates == 0:
            continue
        for A in attrs_of(node.rhs_candidates & ~X):
            subsets = [(X & ~(1 << B)) | (1 << A) for B in attrs_of(X)]
            missing.update(s for s in subsets if s not in level.nodes)
            wanted.append((X, A, subsets))
    counts = {s: info.class_count for s, info in level.nodes.items()}
    if missing:
        counts.update(count_of(sorted(missing, key=attrs_of)))
    for X, A, subsets in wanted:
        ok = True
        for s in subsets:
            lhs = s & ~(1 << A)
            if prev.nodes[lhs].class_count == counts[s]:
                ok = False
                break
        if ok:
            found.append(Dependency.fd(X, A))
    for X in level.sets():
        node = level.nodes[X]
        if node.rhs_candidates and not node.is_key:
            survivors.nodes[X] = node
    return survivors, found


def minimal_only(deps: Iterable[Dependency]) -> list[Dependency]:
    """Drop any FD/OD whose LHS strictly contains another's with the same RHS
    (and direction)."""
    deps = list(set(deps))
    by_target: dict[tuple, list[int]] = {}
    for d in deps:
        by_target.setdefault((d.kind, d.rhs, d.direction), []).append(d.lhs)
    out = []
    for d in deps:
        if d.kind not in (FD, OD, UCC):
            out.append(d)
            continue
        others = by_target[(d.kind, d.rhs, d.direction)]
        if not any(o != d.lhs and o & d.lhs == o for o in others):
            out.append(d)
    return out


# ---------------------------------------------------------------------------
# FDTree


class _Node:
    __slots__ = ("children", "rhs")

    def __init__(self):
        self.children: dict[int, _Node] = {}
        self.rhs = 0


class FDTree:
    """Prefix tree of candidate LHS sets; each node's ``rhs`` bitmask marks the
    right-hand sides for which the root-to-node path is a candidate LHS."""

    def __init__(self, m: int):
        self.m = m
        self.root = _Node()
        self._size = 0

    def __len__(self):
        return self._size

    def _walk(self, lhs: int, create: bool) -> _Node | None:
        node = self.root
        for a in attrs_of(lhs):
            nxt = node.children.get(a)
            if nxt is None:
                if not create:
                    return None
                nxt = node.children[a] = _Node()
            node = nxt
        return node

    def add(self, lhs: int, rhs: int) -> bool:
        node = self._walk(lhs, True)
        if node.rhs >> rhs & 1:
            return False
        node.rhs |= 1 << rhs
        self._size += 1
        return True

    def contains(self, lhs: int, rhs: int) -> bool:
        node = self._walk(lhs, False)
        return node is not None and bool(node.rhs >> rhs & 1)

    def remove(self, lhs: int, rhs: int) -> bool:
        node = self._walk(lhs, False)
        if node is None or not node.rhs >> rhs & 1:
            return False
        node.rhs &= ~(1 << rhs)
        self._size -= 1
        return True

    def insert(self, lhs: int, rhs: int) -> bool:
        """Add ``lhs -> rhs`` and drop its stored specializations."""
        for longer in self.specializations(lhs, rhs):
            self.remove(longer, rhs)
        return self.add(lhs, rhs)

    def generalizations(self, lhs: int, rhs: int) -> list[int]:
        """Stored ``Z`` with ``Z`` a subset of ``lhs`` (including ``lhs``) and rhs bit set."""
        out = []
        attrs = attrs_of(lhs)

        def visit(node: _Node, path: int, start: int):
            if node.rhs >> rhs & 1:
                out.append(path)
            for i in range(start, len(attrs)):
                child = node.children.get(attrs[i])
                if child is not None:
                    visit(child, path | (1 << attrs[i]), i + 1)

        visit(self.root, 0, 0)
        return out

    def contains_generalization(self, lhs: int, rhs: int) -> bool:
        attrs = attrs_of(lhs)

        def visit(node: _Node, start: int) -> bool:
            if node.rhs >> rhs & 1:
                return True
            for i in range(start, len(attrs)):
                child = node.children.get(attrs[i])
                if child is not None and visit(child, i + 1):
                    return True
            return False

        return visit(self.root, 0)

    def specializations(self, lhs: int, rhs: int) -> list[int]:
        """Stored proper supersets of ``lhs`` with rhs bit set."""
        out = []
        need = attrs_of(lhs)

        def visit(node: _Node, path: int, i: int):
            if i == len(need) and path != lhs and node.rhs >> rhs & 1:
                out.append(path)
            bound = need[i] if i < len(need) else None
            for a, child in node.children.items():
                if bound is None or a < bound:
                    visit(child, path | (1 << a), i)
                elif a == bound:
                    visit(child, path | (1 << a), i + 1)

        visit(self.root, 0, 0)
        return out

    def items(self) -> Iterator[tuple[int, int]]:
        """``(lhs, rhs_mask)`` for every node carrying at least one RHS."""

        def visit(node: _Node, path: int):
            if node.rhs:
                yield path, node.rhs
            for a in sorted(node.children):
                yield from visit(node.children[a], path | (1 << a))

        yield from visit(self.root, 0)

    def get_level(self, l: int) -> list[tuple[int, int]]:
        out = []

        def visit(node: _Node, path: int, depth: int):
            if depth == l:
                if node.rhs:
                    out.append((path, node.rhs))
                return
            for a in sorted(node.children):
                visit(node.children[a], path | (1 << a), depth + 1)

        visit(self.root, 0, 0)
        return out

    def fds(self) -> list[tuple[int, int]]:
        return [(lhs, a) for lhs, mask in self.items() for a in attrs_of(mask)]

    def depth(self) -> int:
        return max((cardinality(lhs) for lhs, _ in self.items()), default=-1)

    def specialize(self, agree: int, rhs: int, extend: int, exclude: int = 0) -> tuple[int, list[int]]:
        """Apply one violating evidence to target ``rhs``.

        Every candidate LHS inside the agree set is violated: remove it and
        add each extension by one attribute of ``extend`` that has no stored
        generalization.  Returns (removed count, added LHS list).
        """
        violated = sorted(self.generalizations(agree, rhs), key=lambda s: (cardinality(s), attrs_of(s)))
        for lhs in violated:
            self.remove(lhs, rhs)
        added = []
        for lhs in violated:
            for b in attrs_of(extend & ~exclude & ~lhs):
                new = lhs | (1 << b)
                if not self.contains_generalization(new, rhs):
                    self.add(new, rhs)
                    added.append(new)
        return len(violated), added
