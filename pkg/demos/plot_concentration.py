"""
==================================
Concentration of sampled rank data
==================================

Draw uniform feasible compositions with the lazy Metropolis chain and watch
the worst deviation of the cumulative counts from the equilibrium curve grow
sub-linearly in ``N``.
"""

# %%
# Run the experiment
# ------------------

import numpy as np

from rankdist import ChainConfig
from rankdist.sampler import concentration_experiment

res = concentration_experiment(n_grid=[64, 128, 256, 512], energia_ratio=1.2, k=1000,
                               config=ChainConfig(50, 5, seed=1))

for n, stats in res:
    q = stats.deviation_quantiles
    print(f"N={n:4d}  D50={q[0.5]:6.2f}  D99={q[0.99]:6.2f}  "
          f"exceed N^0.8: {stats.exceed_fraction:.3f}")

# %%
# Scaling exponent
# ----------------
#
# A slope near 1/2 is the central-limit scale; the bound to beat is 3/4.

print(f"log-log slope of D99: {res.slope:.3f}")
ns = np.array([n for n, _ in res], dtype=float)
print("D99 / sqrt(N):", np.round([st.deviation_quantiles[0.99] for _, st in res] / np.sqrt(ns), 3))
