"""One data center, one workload type, every number traceable by hand.

Three identical nodes serve two requests per second that each take one
second, so two nodes work and one idles. Everything else follows from the
site's cooling efficiency, water and carbon factors and the hourly price.
"""

# %%
from pathlib import Path

import numpy as np

from gddc import Assignment, evaluate
from gddc.model import evaluate_site
from gddc.scenario import load_scenario

DATA = Path(__file__).resolve().parent.parent / "tests" / "data"
scenario = load_scenario(DATA / "oracle_scenario.json")
site = scenario.datacenters[0]
print(site.id, "nodes:", [(n.count, n.idle_power, n.active_power) for n in site.nodes])

# %% [markdown]
# IT power is 2 x 0.3 + 1 x 0.1 = 0.7 kW. Mechanical cooling at CoP 4 adds
# three quarters of that, the power chain another 13 %.

# %%
total, (row,) = evaluate(Assignment([[2.0]], [0.0]), scenario, epoch=0)
print(f"P_IT      {row.p_it:.4f} kW")
print(f"cooling   {row.p_cooling:.4f} kW  (free cooling: {row.free_cooling_active})")
print(f"energy    {row.energy_total:.4f} kWh")
print(f"cost      ${total.cost:.4f}")
print(f"water     {total.water:.4f} L")
print(f"carbon    {total.carbon:.4f} kg")

# %% [markdown]
# Buying clean energy: take the same site, offer a premium and sweep the
# clean fraction. Cost goes up while carbon and source water go down.

# %%
green = site.model_copy(update={"premium_available": True, "premium_price": 0.02})
for rho in np.linspace(0.0, 1.0, 5):
    r = evaluate_site(green, [2.0], rho, 0)
    print(f"rho={rho:.2f}  cost=${r.cost:.4f}  carbon={r.carbon:.4f} kg  water={r.water:.4f} L")
