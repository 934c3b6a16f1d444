"""
Parameter sweeps
================

The distance factor only rescales costs, so NDAP picks the same facets at
every DF. Raising the mean demand makes every AE more expensive.
"""

# %%
from ndap import sim

base = sim.ScenarioConfig(scenario="individual", n=144, reps=20, seed=3)
rows = []
for value, summary in sim.sweep(base, "df", [2, 4, 8, 16]):
    rows += sim.csv_rows(summary, "df", value)
    print(f"DF={value:<3} ndap cost={summary['ndap'].avg_cost['mean']:8.3f} "
          f"deploys={summary['ndap'].deploy_count['mean']:.2f}")

# %%
for value, summary in sim.sweep(base, "mean", [.1, .3, .5, .7]):
    rows += sim.csv_rows(summary, "mean", value)
    print(f"mean={value}", {a: round(s.avg_cost["mean"], 2) for a, s in summary.algorithms.items()})

# %%
print(sim.to_csv(rows, seed=base.seed)[:400])
