"""A full day: one SHIELD run per hour and three ways to read the results.

For each hour the front is searched independently. Picking the cheapest,
the lowest-carbon or the lowest-water plan every hour gives three daily
operating policies; their 24-hour totals show what each priority costs in
the other two currencies.
"""

# %%
import numpy as np

from gddc import Budget, ShieldParams, bundled_scenario, run_shield
from gddc.experiment import best_solutions
from gddc.model import OBJECTIVE_NAMES

scenario = bundled_scenario()
params = ShieldParams(iter_early=5)
runs = [run_shield(scenario, e, Budget(evaluations=3_000), params, seed=e) for e in range(24)]

# %%
daily = {sel: np.zeros(3) for sel in OBJECTIVE_NAMES}
for r in runs:
    best = best_solutions(r)
    for sel in OBJECTIVE_NAMES:
        daily[sel] += [best[sel]["objectives"][k] for k in OBJECTIVE_NAMES]

print(f"{'policy':16s}{'cost $':>12s}{'carbon kg':>12s}{'water L':>12s}")
for sel, v in daily.items():
    print(f"{'min ' + sel:16s}{v[0]:12.1f}{v[1]:12.1f}{v[2]:12.1f}")

# %% [markdown]
# Where does the cheapest plan send work at noon? Shares per site, summed
# over workload types.

# %%
noon = best_solutions(runs[12])["cost"]
rates = np.array(noon["rates"])
share = rates.sum(axis=1) / rates.sum()
for dc, s, rho in sorted(zip(scenario.datacenters, share, noon["rho"]), key=lambda t: -t[1])[:6]:
    print(f"{dc.id:10s} {s:6.1%}  clean premium {rho:.2f}")
