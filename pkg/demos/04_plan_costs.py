"""What the two logical plans cost on the metered runtime.

Lattice search: the first plan ships stripped partitions between levels,
the second ships only attribute sets and recomputes counts from the data.
Pair comparison: the first plan compares tuples that share a class, the
second compares every pair once.
"""

from depdisc import ClusterConfig, PlanConfig, datasets, discover


def table(title, r, algo, k=4):
    print(f"{title} ({r.n} x {r.m}, k={k})")
    print(f"  {'plan':<6}{'bytes':>12}{'X bytes':>12}{'Y units':>12}{'deps':>7}")
    for ldp in (1, 2):
        res = discover(r, PlanConfig(algorithm=algo, ldp=ldp, cluster=ClusterConfig(k=k)))
        led = res.ledger
        print(f"  LDP{ldp:<3}{led.total_bytes():>12}{led.X():>12}{led.Y():>12}{len(res.dependencies):>7}")
        if "comparisons" in res.stats:
            print(f"        tuple pairs compared: {res.stats['comparisons']}")
    print()


table("TANE, low-cardinality columns", datasets.low_cardinality_synthetic(5000, 8), "tane")
table("FastFDs, wide table", datasets.wide_synthetic(500, 20), "fastfds")

r = datasets.low_cardinality_synthetic(2000, 8)
print("Memory budget and worker count on TANE LDP2:")
for k in (2, 8):
    for budget in (0, 4096):
        res = discover(r, PlanConfig(algorithm="tane", cluster=ClusterConfig(k=k, memory_budget=budget)))
        print(f"  k={k} budget={budget or 'none':>5}: {res.ledger.total_bytes():>9} bytes, "
              f"{len(res.ledger.stages)} stages")
