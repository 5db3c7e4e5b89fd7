"""
===========================================
Exact partition function versus saddle point
===========================================

The exact ``log Z`` comes from a log-domain coefficient recursion; the
Gaussian saddle-point form should close in on it as ``N`` grows with
``s = N``.
"""

# %%
# Exact against brute force
# -------------------------

from rankdist import CardinalitySpectrum
from rankdist.partition import mean_energia_exact, partition_brute, partition_exact, partition_saddle

small = CardinalitySpectrum([0.5, 1.0, 2.0, 3.5])
for beta in (-0.5, 0.3, 1.0):
    print(f"beta {beta:+.1f}: DP {partition_exact(small, 8, beta):.15f}  "
          f"brute {partition_brute(small, 8, beta):.15f}")

# %%
# Relative gap of the saddle-point form
# -------------------------------------

for n in (25, 50, 100, 200, 400):
    r = partition_saddle(CardinalitySpectrum.uniform_grid(n), n, 0.3)
    print(f"N={n:4d}  exact {r.exact_log:12.6f}  saddle {r.saddle_log:12.6f}  gap {r.rel_gap:.2e}")

# %%
# Mean energia from the same recursion
# ------------------------------------
#
# It matches a finite difference of ``log Z`` in ``beta``.

h = 1e-5
fd = -(partition_exact(small, 8, 0.3 + h) - partition_exact(small, 8, 0.3 - h)) / (2 * h)
print(f"<E> = {mean_energia_exact(small, 8, 0.3):.8f}, finite difference {fd:.8f}")
