"""The eight tax records, one dependency kind at a time.

Each kind uses the plan that supports it: the lattice search for UCCs and
ODs, and the data-driven plan over the full predicate space for DCs.
"""

from depdisc import PlanConfig, datasets, discover, holds, parse_dependency

r = datasets.tax()
print(f"tax: {r.n} rows, columns {', '.join(r.attribute_names)}\n")

uccs = discover(r, PlanConfig(algorithm="tane", dep_kind="ucc")).rendered()
print(f"{len(uccs)} minimal UCCs, among them:", [u for u in uccs if "tid" not in u and "ID" not in u][:6])

fds = discover(r, PlanConfig(algorithm="hyfd", dep_kind="fd")).rendered()
print(f"{len(fds)} minimal FDs; ZIP -> ST present: {'ZIP -> ST' in fds}")

ods = discover(r, PlanConfig(algorithm="tane", dep_kind="od")).rendered()
print(f"{len(ods)} minimal ODs:", ods)

dcs = discover(r, PlanConfig(algorithm="datadriven", dep_kind="dc")).rendered()
target = "!( t0.ST == t1.ST & t0.SAL < t1.SAL & t0.TR > t1.TR )"
print(f"{len(dcs)} minimal DCs; the same-state salary/tax-rate constraint present: {target in dcs}")

# the constraint reads: within a state, a higher salary never has a lower tax rate
print("check on the data:", holds(parse_dependency(target, r.attribute_names), r))
