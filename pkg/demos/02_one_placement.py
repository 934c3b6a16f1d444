"""
Placing one three-tier AE
=========================

Samples one AE, places it with each algorithm on an empty N=144 data center
and compares the resulting network cost. The NDAP decision trace shows which
case handled each virtual link.
"""

# %%
import numpy as np

from ndap import DemandParams, PlacementState, build_topology, get_placer
from ndap.workload import sample_ae, three_tier_template

dc = build_topology(144, df=2.0)
ae = sample_ae(three_tier_template(), DemandParams(), np.random.default_rng(7), "demo")
for vl in sorted(ae.vls, key=lambda v: -v.bw):
    print(f"{vl.kind.value} {vl.a:>6} - {vl.b:<4} bw={vl.bw:.3f}")

# %%
for name in ("ndap", "nva", "ffd"):
    state = PlacementState(dc)
    out = get_placer(name)(state, ae, np.random.default_rng(1))
    print(f"{name:5s} {out.status:10s} cost={out.total_cost}")

# %%
state = PlacementState(dc)
steps = []
get_placer("ndap")(state, ae, trace=steps)
for s in steps:
    print(s["step"], s["vl"], "case", s["case"], s["chosen"], "step cost", s["step_cost"])
