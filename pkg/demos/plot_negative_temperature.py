"""
=====================================
Equilibrium occupations on both sides
=====================================

Solve for ``(beta, nu)`` on a fixed spectrum as the energia bound sweeps
from below the uniform point to above it.  The inverse temperature changes
sign exactly at ``E = N * mean(w)``.
"""

# %%
# Setup
# -----

import numpy as np

from rankdist import CardinalitySpectrum, Direction, EnergiaConstraint, cumulative_curve, solve_equilibrium
from rankdist.io import write_svg

spec = CardinalitySpectrum.uniform_grid(200, upper=5.0)
n = 300
uniform = n * spec.mean

# %%
# Sweep the energia ratio
# -----------------------
#
# Below the uniform point the bound is an upper one, above it a lower one.

for ratio in (0.6, 0.9, 1.0, 1.1, 1.5):
    direction = Direction.AT_MOST if ratio < 1 else Direction.AT_LEAST
    p = solve_equilibrium(spec, n, EnergiaConstraint(ratio * uniform, direction))
    print(f"ratio {ratio:4.2f}  beta {p.beta:+.5f}  nu {p.nu:+.5f}  "
          f"branch {p.branch.value:10s} residual {p.residual_norm:.1e}")

# %%
# Occupation profiles
# -------------------
#
# Negative beta piles signs onto the high-cardinality bins.

series = {}
for ratio in (0.7, 1.3):
    direction = Direction.AT_MOST if ratio < 1 else Direction.AT_LEAST
    p = solve_equilibrium(spec, n, EnergiaConstraint(ratio * uniform, direction))
    series[f"ratio {ratio}"] = (spec.values, cumulative_curve(spec, p).occupations)

write_svg("negative_temperature.svg", series, title="occupation per bin", xlabel="w", ylabel="n(w)")
print("wrote negative_temperature.svg")
