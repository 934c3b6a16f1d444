"""
Group and individual scenarios
==============================

Short runs of both scenarios at N=144. Costs are averaged over the common
set of deployments in the group scenario; deploy counts come from the
individual scenario where each algorithm runs until its own first failure.
"""

# %%
from ndap import sim
from ndap.workload import DemandParams

group = sim.run(sim.ScenarioConfig(scenario="group", n=144, reps=20, seed=1))
for a, s in group.algorithms.items():
    util = " ".join(f"{k}={v['mean']:.3f}" for k, v in s.utilization.items())
    print(f"{a:5s} cost={s.avg_cost['mean']:7.3f}  {util}")

# %%
ind = sim.run(sim.ScenarioConfig(scenario="individual", n=144, reps=20, seed=1))
for a, s in ind.algorithms.items():
    d = s.deploy_count
    print(f"{a:5s} deploys mean={d['mean']:.1f} min={d['min']:.0f} max={d['max']:.0f}")

# %%
# Low compute and storage demand with heavy links: the setting used for
# switch utilization.
p = DemandParams(mean_com=.05, mean_str=.05, sd_com_str=.1, mean_vlbw=.4, sd_vlbw=.3)
util = sim.run(sim.ScenarioConfig(scenario="group", n=144, reps=20, seed=1, params=p))
for a, s in util.algorithms.items():
    print(a, {k: round(v["mean"], 4) for k, v in s.utilization.items()})
