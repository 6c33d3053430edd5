"""One test per acceptance criterion; each prints a PASS/FAIL line.

Tolerances and time limits are pinned below.
"""

import math
import time
from itertools import combinations

import pytest

from depdisc import datasets, oracle
from depdisc.cluster import (
    ClusterConfig,
    PairTask,
    TriangleLayout,
    relation_nbytes,
    rows_nbytes,
    split_chunks,
    task_pair_arrays,
)
from depdisc.model import DC, FD, FD_INEQUALITY, OD, UCC, PredicateSpace, parse_dependency
from depdisc.plans import PlanConfig, discover, run_naive_intersection
from depdisc.primitives import gen_ev_set, window_pairs

from conftest import ACCEPTANCE_LINES

WORKED_EXAMPLE_SECONDS = 1.0
CORPUS_SECONDS = 300.0
PRECISION_SECONDS = 120.0
PRECISION_TREND_SLACK = 0.05
CORPUS_SIZE = 100
BUDGET = 200  # bytes; small enough that every relation spills


def report(number, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def names(result_or_deps, r):
    if hasattr(result_or_deps, "rendered"):
        return set(result_or_deps.rendered())
    return {d.render(r.attribute_names) for d in result_or_deps}


def fd_configs():
    for algo in ("tane", "fastfds", "hyfd"):
        for ldp in (1, 2):
            for budget in (0, BUDGET):
                yield algo, ldp, budget


# -- 1 ------------------------------------------------------------------------


def test_criterion_1_worked_examples(fig2a, tax):
    failures, slowest = [], 0.0

    def timed(fn):
        nonlocal slowest
        start = time.perf_counter()
        out = fn()
        slowest = max(slowest, time.perf_counter() - start)
        return out

    for algo, ldp, budget in fd_configs():
        cfg = PlanConfig(algorithm=algo, ldp=ldp, cluster=ClusterConfig(k=3, memory_budget=budget))
        got = names(timed(lambda: discover(fig2a, cfg)), fig2a)
        # [PUBLISHED] D -> C, BC -> A, BD -> A hold; C -> D does not
        if not {"D -> C", "B,C -> A", "B,D -> A"} <= got or "C -> D" in got:
            failures.append(f"{algo}/ldp{ldp}/budget{budget}")

    # [PUBLISHED] the six pairwise evidence sets, as differing attributes (1-based tuples)
    expected = {(1, 2): "AB", (2, 3): "ABD", (1, 4): "ABCD", (1, 3): "BD", (2, 4): "BCD", (3, 4): "ACD"}
    P = PredicateSpace.build(fig2a, FD_INEQUALITY)
    for (i, j), attrs in expected.items():
        e = gen_ev_set(i - 1, j - 1, fig2a, P)
        if "".join(fig2a.attribute_names[a] for a in range(4) if e >> a & 1) != attrs:
            failures.append(f"EV(t{i},t{j})")

    # [PUBLISHED] keys AB, AD, BC, BD
    for algo in ("tane", "hyfd"):
        for ldp in (1, 2):
            cfg = PlanConfig(algorithm=algo, ldp=ldp, dep_kind=UCC)
            got = names(timed(lambda: discover(fig2a, cfg)), fig2a)
            if got != {"UNIQUE(A,B)", "UNIQUE(A,D)", "UNIQUE(B,C)", "UNIQUE(B,D)"}:
                failures.append(f"keys {algo}/ldp{ldp}")

    # [PUBLISHED] the tax records
    checks = [
        (UCC, "tane", "UNIQUE(AC,PH)"),
        (FD, "tane", "ZIP -> ST"),
        (OD, "tane", "SAL ~> STX [desc]"),
        (DC, "datadriven", "!( t0.ST == t1.ST & t0.SAL < t1.SAL & t0.TR > t1.TR )"),
    ]
    for kind, algo, text in checks:
        got = names(timed(lambda: discover(tax, PlanConfig(algorithm=algo, dep_kind=kind))), tax)
        if text not in got or not oracle.holds(parse_dependency(text, tax.attribute_names), tax):
            failures.append(text)

    ok = not failures and slowest < WORKED_EXAMPLE_SECONDS
    report(1, ok, f"slowest run {slowest:.3f}s (< {WORKED_EXAMPLE_SECONDS}s), failures={failures}")
    assert ok


# -- 2 ------------------------------------------------------------------------


def fd_corpus():
    return [datasets.random_relation(s) for s in range(CORPUS_SIZE)]


def od_corpus():
    return [datasets.random_relation(s, max_n=80, max_m=5) for s in range(CORPUS_SIZE)]


def dc_corpus():
    return [datasets.random_relation(s, max_n=40, max_m=3, numeric=True) for s in range(CORPUS_SIZE)]


def corpus_runs():
    """(relation, config) for every plan the oracle comparison covers."""
    for r in fd_corpus():
        for algo, ldp, budget in fd_configs():
            yield r, FD, PlanConfig(algorithm=algo, ldp=ldp, cluster=ClusterConfig(k=3, memory_budget=budget))
            if algo != "fastfds":
                yield r, UCC, PlanConfig(algorithm=algo, ldp=ldp, dep_kind=UCC,
                                         cluster=ClusterConfig(k=3, memory_budget=budget))
    for r in od_corpus():
        for ldp in (1, 2):
            for budget in (0, BUDGET):
                yield r, OD, PlanConfig(algorithm="tane", ldp=ldp, dep_kind=OD,
                                        cluster=ClusterConfig(k=3, memory_budget=budget))
    for r in dc_corpus():
        for budget in (0, BUDGET):
            yield r, DC, PlanConfig(algorithm="datadriven", dep_kind=DC, cluster=ClusterConfig(k=3, memory_budget=budget))


@pytest.mark.slow
def test_criterion_2_oracle_equivalence():
    start = time.perf_counter()
    truth: dict = {}
    mismatches, runs = [], 0
    for r, kind, cfg in corpus_runs():
        key = (id(r), kind)
        if key not in truth:
            truth[key] = names(oracle.brute(kind, r), r)
        got = names(discover(r, cfg), r)
        if kind == DC:
            got = {d for d in got if d.count("t0.") <= oracle.OracleLimits().max_dc_predicates}
        runs += 1
        if got != truth[key]:
            mismatches.append((r.name, kind, cfg.algorithm, cfg.ldp, cfg.cluster.memory_budget))
    elapsed = time.perf_counter() - start
    ok = not mismatches and elapsed < CORPUS_SECONDS
    report(2, ok, f"{runs} plan runs, {len(mismatches)} mismatches, {elapsed:.1f}s (< {CORPUS_SECONDS:.0f}s)")
    assert ok, mismatches[:5]


# -- 3 ------------------------------------------------------------------------


def test_criterion_3_communication_ordering():
    lowcard = datasets.low_cardinality_synthetic(5000, 8, seed=0)
    t1 = discover(lowcard, PlanConfig(algorithm="tane", ldp=1))
    t2 = discover(lowcard, PlanConfig(algorithm="tane", ldp=2))
    levels = len(t2.stats["level_sizes"])
    b1, b2 = t1.ledger.total_bytes(), t2.ledger.total_bytes()

    wide = datasets.wide_synthetic(500, 20, seed=0)
    f1 = discover(wide, PlanConfig(algorithm="fastfds", ldp=1))
    f2 = discover(wide, PlanConfig(algorithm="fastfds", ldp=2))
    c1, c2 = f1.stats["comparisons"], f2.stats["comparisons"]

    ok = levels >= 3 and b2 < 0.5 * b1 and c1 > c2 and c2 == 500 * 499 // 2 and f1.rendered() == f2.rendered()
    report(3, ok, f"TANE bytes ldp1={b1} ldp2={b2} ({levels} levels); FastFDs comparisons ldp1={c1} ldp2={c2}")
    assert ok


# -- 4 ------------------------------------------------------------------------


def test_criterion_4_triangle_audit():
    worst, failures = 0.0, []
    for n in (50, 100, 500):
        r = datasets.random_relation(n, n=n, m=4)
        total = relation_nbytes(r)
        for k in (1, 3, 6, 10):
            layout = TriangleLayout.for_workers(k)
            chunks = split_chunks(list(range(n)), layout.l)
            seen = []
            for (p, q), w in layout.assignment.items():
                a, b = task_pair_arrays(PairTask(w, p, q), chunks)
                seen.extend(zip(a.tolist(), b.tolist()))
            if sorted(tuple(sorted(x)) for x in seen) != list(combinations(range(n), 2)):
                failures.append(("pairs", n, k))
            res = discover(r, PlanConfig(algorithm="fastfds", ldp=2, cluster=ClusterConfig(k=k)))
            (stage,) = res.ledger.select("evidence")
            slack = 2 * rows_nbytes(math.ceil(n / layout.l), r.m)
            bound = math.sqrt(2 / k) * total + slack
            worst = max(worst, stage.X / bound)
            if stage.X > bound or stage.total_units != n * (n - 1) // 2:
                failures.append(("bytes", n, k, stage.X, round(bound)))
    ok = not failures
    report(4, ok, f"max X / bound = {worst:.3f}, failures={failures}")
    assert ok


# -- 5 ------------------------------------------------------------------------


TWO_NODE_REASON = (
    "the minimal form of A -> B on each part is TRUE -> B, and the intersection also keeps "
    "TRUE -> A, which holds on the whole relation; precision is 0.5, not 0"
)


@pytest.mark.xfail(strict=True, reason=TWO_NODE_REASON)
def test_criterion_5a_two_node_precision():
    r, parts = datasets.two_node_example()
    res = run_naive_intersection(r, parts=parts)
    ok = res.precision == 0.0
    report("5a", ok, f"two-node precision {res.precision:.3f} (target 0.000); naive set {sorted(names(res.naive_set, r))}")
    assert ok


@pytest.mark.slow
def test_criterion_5b_lineitem_precision_trend():
    start = time.perf_counter()
    r = datasets.lineitem(50_000, seed=0)
    p2 = run_naive_intersection(r, p=2, seed=0).precision
    p10 = run_naive_intersection(r, p=10, seed=0).precision
    elapsed = time.perf_counter() - start
    ok = p10 < 1.0 and (p10 <= p2 or abs(p10 - p2) <= PRECISION_TREND_SLACK) and elapsed < PRECISION_SECONDS
    report("5b", ok, f"lineitem 50k precision p=2 {p2:.3f}, p=10 {p10:.3f}, {elapsed:.1f}s (< {PRECISION_SECONDS:.0f}s)")
    assert ok


# -- 6 ------------------------------------------------------------------------


@pytest.mark.slow
def test_criterion_6_determinism(monkeypatch):
    from dataclasses import replace

    differing, runs = [], 0
    for r, kind, cfg in corpus_runs():
        outputs = set()
        for k in (1, 7, 55):
            for threads in ("1", "8"):
                monkeypatch.setenv("DEPDISC_THREADS", threads)
                c = replace(cfg, cluster=replace(cfg.cluster, k=k))
                outputs.add(discover(r, c).dependencies_json())
                runs += 1
        if len(outputs) != 1:
            differing.append((r.name, kind, cfg.algorithm, cfg.ldp, cfg.cluster.memory_budget))
    ok = not differing
    report(6, ok, f"{runs} runs over k in (1, 7, 55) x threads in (1, 8), {len(differing)} differing outputs")
    assert ok, differing[:5]


# -- 7 ------------------------------------------------------------------------


@pytest.mark.slow
def test_criterion_7_hyfd_mechanics():
    failures = []
    cls = list(range(100, 110))
    for w in range(1, 12):
        want = [(cls[i], cls[j]) for i in range(len(cls)) for j in range(len(cls)) if j - i == w]
        if window_pairs(cls, w) != want:
            failures.append(("window", w))
    checked = 0
    for r in fd_corpus():
        for ldp in (1, 2):
            for budget in (0, BUDGET):
                for kind in (FD, UCC):
                    k = 4
                    res = discover(r, PlanConfig(algorithm="hyfd", ldp=ldp, dep_kind=kind,
                                                 cluster=ClusterConfig(k=k, memory_budget=budget)))
                    checked += 1
                    if not res.phase_trace or not res.stats["fully_validated"]:
                        failures.append(("trace", r.name, ldp, budget))
                    if ldp == 2 and res.stats["group_pairs"] > k * (k + 1) // 2:
                        failures.append(("group pairs", r.name, budget, res.stats["group_pairs"]))
    ok = not failures
    report(7, ok, f"window rule on 11 windows, {checked} HyFD runs, failures={failures[:5]}")
    assert ok
