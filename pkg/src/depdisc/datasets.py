"""Bundled example relations and seeded synthetic generators."""

from __future__ import annotations

import datetime as dt
from importlib import resources

import numpy as np

from .model import CATEGORICAL, NUMERIC, Relation, load_csv


def data_path(name: str) -> str:
    return str(resources.files("depdisc").joinpath("data", name))


def fig2a() -> Relation:
    """Four tuples over A, B, C, D used for the worked lattice example."""
    return load_csv(data_path("fig2a.csv"), name="fig2a")


def tax() -> Relation:
    """Eight tax records; ``tid`` is the tuple label column."""
    return load_csv(data_path("tax.csv"), name="tax")


def two_node_example() -> tuple[Relation, list[Relation]]:
    """Relation over (A, B) stored as two parts: two (a1, b1) rows and two (a1, b2) rows."""
    rows = [["a1", "b1"], ["a1", "b1"], ["a1", "b2"], ["a1", "b2"]]
    r = Relation.from_rows(["A", "B"], rows, name="two_node")
    return r, [r.take([0, 1]), r.take([2, 3])]


def _skewed(rng: np.random.Generator, n: int, card: int, skew: float) -> np.ndarray:
    weights = 1.0 / np.arange(1, card + 1) ** skew
    return rng.choice(card, size=n, p=weights / weights.sum())


def random_relation(seed: int, n: int | None = None, m: int | None = None, card: int | None = None,
                    skew: float | None = None, max_n: int = 150, max_m: int = 6,
                    numeric: bool = False) -> Relation:
    """Small random relation; unspecified shape parameters are drawn from ``seed``.

    Some columns are copies or functions of others so that non-trivial
    dependencies appear.  ``numeric`` keeps integer values (otherwise
    values are strings).
    """
    rng = np.random.default_rng(seed)
    n = int(rng.integers(0, max_n + 1)) if n is None else n
    m = int(rng.integers(1, max_m + 1)) if m is None else m
    skew = float(rng.choice([0.0, 0.5, 1.0, 2.0])) if skew is None else skew
    cols = []
    for a in range(m):
        c = int(rng.integers(1, 7)) if card is None else card
        if a >= 2 and rng.random() < 0.3:
            i, j = rng.choice(a, size=2, replace=True)
            cols.append((cols[i] * 3 + cols[j]) % max(c, 1))
        else:
            cols.append(_skewed(rng, n, c, skew))
    data = np.stack(cols, axis=1) if n else np.zeros((0, m), dtype=np.int64)
    rows = data.tolist() if numeric else [[f"v{x}" for x in row] for row in data.tolist()]
    return Relation.from_rows([f"c{a}" for a in range(m)], rows, name=f"random{seed}")


def low_cardinality_synthetic(n: int = 5000, m: int = 8, seed: int = 0) -> Relation:
    """Columns of 2 to 9 distinct values plus a few derived ones: keys only
    show up deep in the lattice, so many levels are materialized."""
    rng = np.random.default_rng(seed)
    cols = []
    for a in range(m):
        if a >= 4 and a % 2 == 0:
            cols.append((cols[a - 4] + 2 * cols[a - 3]) % 5)
        else:
            cols.append(rng.integers(0, 2 + a, size=n))
    rows = np.stack(cols, axis=1).tolist()
    return Relation.from_rows([f"a{a}" for a in range(m)], rows, name="lowcard")


def wide_synthetic(n: int = 500, m: int = 20, seed: int = 0) -> Relation:
    """Many low-cardinality columns, half of them derived from the others, so
    equivalence classes overlap heavily."""
    rng = np.random.default_rng(seed)
    base = m - m // 2
    cols = [rng.integers(0, 2 + a % 5, size=n) for a in range(base)]
    for a in range(base, m):
        i, j = rng.choice(base, size=2, replace=False)
        cols.append((cols[i] * 7 + cols[j]) % (2 + a % 4))
    rows = np.stack(cols, axis=1).tolist()
    return Relation.from_rows([f"w{a}" for a in range(m)], rows, name="wide")


# ---------------------------------------------------------------------------
# TPC-H style lineitem

LINEITEM_COLUMNS = (
    "L_ORDERKEY", "L_PARTKEY", "L_SUPPKEY", "L_LINENUMBER", "L_QUANTITY",
    "L_EXTENDEDPRICE", "L_DISCOUNT", "L_TAX", "L_RETURNFLAG", "L_LINESTATUS",
    "L_SHIPDATE", "L_COMMITDATE", "L_RECEIPTDATE", "L_SHIPINSTRUCT", "L_SHIPMODE",
)
DEFAULT_LINEITEM_COLUMNS = (
    "L_ORDERKEY", "L_PARTKEY", "L_SUPPKEY", "L_LINENUMBER", "L_QUANTITY",
    "L_DISCOUNT", "L_TAX", "L_RETURNFLAG", "L_LINESTATUS", "L_SHIPMODE",
)
_INSTRUCT = ("DELIVER IN PERSON", "COLLECT COD", "NONE", "TAKE BACK RETURN")
_MODES = ("REG AIR", "AIR", "RAIL", "SHIP", "TRUCK", "MAIL", "FOB")
_START = dt.date(1992, 1, 1)
_END = dt.date(1998, 12, 31)
_CURRENT = dt.date(1995, 6, 17)


def lineitem(n: int = 50_000, seed: int = 0, columns=DEFAULT_LINEITEM_COLUMNS) -> Relation:
    """Synthetic lineitem rows following the TPC-H generator's value rules.

    Orders get 1 to 7 lines; the scale factor is set so that about ``n``
    lines are produced, then the table is cut to exactly ``n`` rows.
    Supplier keys follow the part-supplier mapping, prices follow the part
    retail price formula, dates and flags follow the ship/commit/receipt
    rules relative to the 1995-06-17 current date.
    """
    rng = np.random.default_rng(seed)
    sf = max(n / 6_000_000, 1e-4)
    parts = max(10, int(200_000 * sf))
    supps = max(4, int(10_000 * sf))
    orders = n // 4 + 8
    lines = rng.integers(1, 8, size=orders)
    # sparse order keys: 8 of every 32
    okeys = np.arange(orders)
    okeys = (okeys // 8) * 32 + okeys % 8 + 1
    order_of = np.repeat(np.arange(orders), lines)[:n]
    if len(order_of) < n:
        raise ValueError("order generation fell short; raise the order count")
    linenumber = np.concatenate([np.arange(1, c + 1) for c in lines])[:n]
    span = (_END - _START).days - 151
    orderdate = rng.integers(0, span + 1, size=orders)[order_of]
    partkey = rng.integers(1, parts + 1, size=n)
    i = rng.integers(0, 4, size=n)
    suppkey = (partkey + i * (supps // 4 + (partkey - 1) // supps)) % supps + 1
    quantity = rng.integers(1, 51, size=n)
    retail = (90000 + (partkey // 10) % 20001 + 100 * (partkey % 1000)) / 100.0
    extended = np.round(quantity * retail, 2)
    discount = rng.integers(0, 11, size=n) / 100.0
    tax_ = rng.integers(0, 9, size=n) / 100.0
    ship = orderdate + rng.integers(1, 122, size=n)
    commit = orderdate + rng.integers(30, 91, size=n)
    receipt = ship + rng.integers(1, 31, size=n)
    current = (_CURRENT - _START).days
    returnflag = np.where(receipt <= current, np.where(rng.random(n) < 0.5, "R", "A"), "N")
    linestatus = np.where(ship > current, "O", "F")
    instruct = rng.integers(0, len(_INSTRUCT), size=n)
    mode = rng.integers(0, len(_MODES), size=n)

    def date(days):
        return [(_START + dt.timedelta(days=int(d))).isoformat() for d in days]

    values = {
        "L_ORDERKEY": okeys[order_of].tolist(),
        "L_PARTKEY": partkey.tolist(),
        "L_SUPPKEY": suppkey.tolist(),
        "L_LINENUMBER": linenumber.tolist(),
        "L_QUANTITY": quantity.tolist(),
        "L_EXTENDEDPRICE": extended.tolist(),
        "L_DISCOUNT": discount.tolist(),
        "L_TAX": tax_.tolist(),
        "L_RETURNFLAG": returnflag.tolist(),
        "L_LINESTATUS": linestatus.tolist(),
        "L_SHIPDATE": date(ship),
        "L_COMMITDATE": date(commit),
        "L_RECEIPTDATE": date(receipt),
        "L_SHIPINSTRUCT": [_INSTRUCT[x] for x in instruct],
        "L_SHIPMODE": [_MODES[x] for x in mode],
    }
    columns = list(columns)
    rows = list(zip(*(values[c] for c in columns)))
    hints = {c: CATEGORICAL for c in columns if c.endswith("DATE")}
    return Relation.from_rows(columns, rows, name="lineitem", type_hints=hints)


__all__ = [
    "CATEGORICAL",
    "NUMERIC",
    "data_path",
    "fig2a",
    "lineitem",
    "low_cardinality_synthetic",
    "random_relation",
    "tax",
    "two_node_example",
    "wide_synthetic",
]
