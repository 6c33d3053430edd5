"""Why discovering on each node and intersecting the results fails.

First the two-node toy relation, then a synthetic lineitem table split into
more and more parts.  Precision is the share of intersected FDs that hold
on the whole table.  Pass a row count to change the table size.
"""

import sys

from depdisc import datasets, run_naive_intersection

r, parts = datasets.two_node_example()
res = run_naive_intersection(r, parts=parts)
print("two nodes:", [d.render(r.attribute_names) for d in res.naive_set], f"precision {res.precision:.2f}")
print("  each node sees B constant; TRUE -> B fails once the nodes are combined\n")

n = int(sys.argv[1]) if len(sys.argv) > 1 else 20_000
li = datasets.lineitem(n, seed=0)
print(f"lineitem, {n} rows, {li.m} columns")
print(f"{'parts':>5} {'naive FDs':>10} {'hold':>6} {'precision':>10}")
for p in (1, 2, 5, 10):
    res = run_naive_intersection(li, p=p, seed=0)
    print(f"{p:>5} {len(res.naive_set):>10} {len(res.holding):>6} {res.precision:>10.3f}")
