"""SHIELD and the three comparison optimizers racing on one hour of the bundled fleet.

Every optimizer gets the same number of objective evaluations. PHV is
computed in one shared normalized space (the union of the four final
fronts), so the numbers below are directly comparable.
"""

# %%
from gddc import Budget, bundled_scenario
from gddc.experiment import Overrides, compare

scenario = bundled_scenario()
print(scenario.label, f"{scenario.size} sites, {scenario.workload_count} workload types")

# ITER_EARLY=5 lets the forest start steering local search after a few generations
res = compare(scenario, epochs=[12], budget=Budget(evaluations=30_000), seed=0,
              overrides=Overrides.parse(["iter_early=5"]))
doc = res["epochs"][0]

# %%
print(f"{'algorithm':10s}{'final PHV':>10s}{'front':>7s}{'seconds':>9s}")
for name, d in doc["algorithms"].items():
    size = len(res["runs"][(name, 12)].front)
    print(f"{name:10s}{d['final_phv']:10.4f}{size:7d}{d['elapsed_s']:9.1f}")

# %% [markdown]
# How early does SHIELD match what the best baseline ends with?

# %%
t = doc["time_to_best_baseline"]
print(f"best baseline: {t['best_baseline']} (final PHV {t['target_phv']:.4f})")
if t["shield_evaluations"] is not None:
    print(f"SHIELD gets there after {t['shield_evaluations']} evaluations, "
          f"{t['speedup_evaluations']:.1f}x fewer than {t['best_baseline']} needed")

# %% [markdown]
# A coarse text rendering of the PHV-over-evaluations curves.

# %%
for name in doc["algorithms"]:
    trace = res["traces"][(name, 12)]
    marks = "".join(" .:-=+*#%@"[min(9, int(s.phv / 1.21 * 10))] for s in trace[::10])
    print(f"{name:7s}|{marks}|")
