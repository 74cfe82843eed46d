"""
Choosing the leaf capacity from a memory budget
===============================================

Index memory shrinks as the leaf capacity ``f`` grows, because a larger
``f`` means fewer nodes.  Given a budget in 8-byte units, ``tune_leaf_capacity``
returns a capacity whose predicted footprint fits.
"""

from daskmeans import (
    BudgetInfeasible,
    estimate_total_memory,
    minimum_budget,
    tune_leaf_capacity,
)

n, k = 1_000_000, 1_000
for f in (10, 30, 100, 200):
    est = estimate_total_memory(n, k, f)
    print(f"f={f:4d}  point index {est.point_index_floats:>9,d}  "
          f"centroid index {est.centroid_index_floats:>6,d}  total {est.total_units:>9,d}")

for budget in (3.2e6, 3.05e6):
    f = tune_leaf_capacity(n, k, budget)
    print(f"budget {budget:,.0f} -> f={f}, predicted {estimate_total_memory(n, k, f).total_units:,d}")

# Below the smallest achievable footprint the request is refused.
try:
    tune_leaf_capacity(n, k, 2e6)
except BudgetInfeasible as exc:
    print("infeasible; the minimum is", exc.minimum_budget, "=", minimum_budget(n, k))
