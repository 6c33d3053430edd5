from itertools import combinations, permutations

import pytest
from hypothesis import given, strategies as st

from depdisc import oracle
from depdisc.model import Dependency, Predicate, Relation, attrs_of, parse_dependency
from depdisc.oracle import OracleLimitError, OracleLimits

from conftest import small_relations


def values(r, t, X):
    return tuple(r.columns[a].decode(r.codes[t, a]) for a in attrs_of(X))


def fd_by_loops(r, X, A):
    return all(values(r, s, X) != values(r, t, X) or values(r, s, 1 << A) == values(r, t, 1 << A)
               for s, t in combinations(range(r.n), 2))


def od_by_loops(r, X, A, direction):
    for s, t in permutations(range(r.n), 2):
        xs, xt = values(r, s, X), values(r, t, X)
        (a_s,), (a_t,) = values(r, s, 1 << A), values(r, t, 1 << A)
        if xs == xt and a_s != a_t:
            return False
        if xs < xt and (a_s > a_t if direction == "asc" else a_s < a_t):
            return False
    return True


OPS = {"==": lambda a, b: a == b, "!=": lambda a, b: a != b, "<": lambda a, b: a < b,
       "<=": lambda a, b: a <= b, ">": lambda a, b: a > b, ">=": lambda a, b: a >= b}


def dc_by_loops(r, preds):
    return not any(
        all(OPS[p.op](values(r, s, 1 << p.attribute), values(r, t, 1 << p.attribute)) for p in preds)
        for s, t in permutations(range(r.n), 2)
    )


@given(small_relations(max_n=15, max_m=4), st.data())
def test_fd_and_ucc_holds_against_loops(r, data):
    A = data.draw(st.integers(0, r.m - 1))
    X = data.draw(st.integers(0, (1 << r.m) - 1)) & ~(1 << A)
    assert oracle.holds(Dependency.fd(X, A), r) == fd_by_loops(r, X, A)
    Y = X or 1
    unique = len({values(r, t, Y) for t in range(r.n)}) == r.n
    assert oracle.holds(Dependency.ucc(Y), r) == unique


@given(st.integers(0, 400), st.data(), st.sampled_from(["asc", "desc"]))
def test_od_holds_against_loops_on_numbers(seed, data, direction):
    from depdisc.datasets import random_relation

    r = random_relation(seed, max_n=12, max_m=4, numeric=True)
    A = data.draw(st.integers(0, r.m - 1))
    X = data.draw(st.integers(0, (1 << r.m) - 1)) & ~(1 << A)
    assert oracle.holds(Dependency.od(X, A, direction), r) == od_by_loops(r, X, A, direction)


@given(st.integers(0, 400), st.lists(st.tuples(st.integers(0, 3), st.sampled_from(list(OPS))), min_size=1, max_size=3))
def test_dc_holds_against_loops(seed, raw):
    from depdisc.datasets import random_relation

    r = random_relation(seed, max_n=10, max_m=4, numeric=True)
    preds = [Predicate(a % r.m, op) for a, op in raw]
    assert oracle.holds(Dependency.dc(preds), r) == dc_by_loops(r, preds)


def test_tax_dependencies(tax):
    # [PUBLISHED] the running example's dependencies hold on the tax records
    names = tax.attribute_names
    for text in ["ZIP -> ST", "UNIQUE(AC,PH)", "SAL ~> STX [desc]",
                 "!( t0.ST == t1.ST & t0.SAL < t1.SAL & t0.TR > t1.TR )"]:
        assert oracle.holds(parse_dependency(text, names), tax), text
    assert not oracle.holds(parse_dependency("ST -> ZIP", names), tax)


def test_fig2a_minimal_fds(fig2a):
    got = oracle.brute_fds(fig2a)
    assert all(oracle.holds(d, fig2a) for d in got)
    # [PUBLISHED] D -> C holds while C -> D does not
    assert "D -> C" in [d.render(fig2a.attribute_names) for d in got]
    assert not oracle.holds(Dependency.fd(1 << 2, 3), fig2a)


@given(small_relations(max_n=15, max_m=4))
def test_brute_fds_are_valid_minimal_and_complete(r):
    found = {(d.lhs, d.rhs) for d in oracle.brute_fds(r)}
    for A in range(r.m):
        others = ((1 << r.m) - 1) & ~(1 << A)
        for X in range(1 << r.m):
            if X & ~others:
                continue
            valid = fd_by_loops(r, X, A)
            minimal = valid and all(not fd_by_loops(r, X & ~(1 << b), A) for b in attrs_of(X))
            assert ((X, A) in found) == minimal


@given(small_relations(max_n=15, max_m=4))
def test_brute_uccs_minimal(r):
    got = [d.lhs for d in oracle.brute_uccs(r)]
    for X in got:
        assert oracle.holds(Dependency.ucc(X), r)
        assert not any(o != X and o & X == o for o in got)


def test_brute_dcs_contain_only_valid_minimal(tax):
    cols = [tax.index(c) for c in ("ST", "SAL", "TR")]
    small = Relation.from_rows(["ST", "SAL", "TR"], [[str(tax.columns[a].decode(tax.codes[t, a])) for a in cols] for t in range(tax.n)])
    got = oracle.brute_dcs(small)
    assert got and all(oracle.holds(d, small) for d in got)
    sets = [frozenset(d.predicates) for d in got]
    assert not any(a < b for a in sets for b in sets)


def test_limits_raise():
    r = Relation.from_rows([f"c{i}" for i in range(9)], [["x"] * 9])
    with pytest.raises(OracleLimitError):
        oracle.brute_fds(r)
    with pytest.raises(OracleLimitError):
        oracle.brute_uccs(r, OracleLimits(max_cols=3))


def test_precision():
    r = Relation.from_rows(["A", "B"], [["1", "x"], ["1", "y"]])
    assert oracle.precision([Dependency.fd(2, 0), Dependency.fd(1, 1)], r) == 0.5
    assert oracle.precision([], r) == 1.0
