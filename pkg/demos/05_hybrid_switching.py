"""Watching the hybrid plan move between sampling and validation.

The trace lists (phase, rounds or levels) in order.  The second logical
plan decides with the cost model; the first with the switch thresholds.
"""

from depdisc import ClusterConfig, PlanConfig, SwitchPolicy, datasets, discover, estimate_phase_costs
from depdisc.plans import PhaseState

r = datasets.random_relation(21, n=400, m=6)

for ldp in (1, 2):
    res = discover(r, PlanConfig(algorithm="hyfd", ldp=ldp, cluster=ClusterConfig(k=4)))
    print(f"LDP{ldp}: trace {res.phase_trace}")
    print(f"       {len(res.dependencies)} FDs, {res.stats['pairs_compared']} pairs sampled, "
          f"{res.stats['failed_validations']} failed validations")

patient = PlanConfig(algorithm="hyfd", ldp=1, switch_policy=SwitchPolicy(epsilon=0.0001))
print("\nwith a tiny epsilon sampling runs longer:", discover(r, patient).phase_trace)

print("\nCost model at n=400, m=6, k=4:")
for cands in (10, 100, 1000):
    costs = estimate_phase_costs(PhaseState(400, 6, 4, cands))
    pick = "sample" if costs["data_driven_cost"] < costs["schema_driven_cost"] else "validate"
    print(f"  {cands:>4} candidates -> data {costs['data_driven_cost']:.0f}, "
          f"schema {costs['schema_driven_cost']:.0f}: {pick}")
