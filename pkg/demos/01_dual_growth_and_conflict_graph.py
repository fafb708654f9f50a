"""
Dual growth, tight facilities and the conflict graph
====================================================

Grow client budgets at a fixed opening price, then open a maximal independent
set of the conflict graph. A smaller distance factor delta removes conflict
edges and opens more facilities.
"""

import math

import numpy as np

from pdcluster import build_instance, delta_preset, dual_growth, jv
from pdcluster.jv import build_client_facility_graph, build_conflict_graph

rng = np.random.default_rng(0)
clients = np.vstack([rng.normal(c, 0.15, (8, 2)) for c in ((0, 0), (1.5, 0), (0.7, 1.2))])
inst = build_instance(clients, "kmeans", k=3)
print(f"{inst.n} clients, {inst.m} candidate centers (the points themselves)")

price = 0.06
dual = dual_growth(inst, price)
print(f"\nprice {price}: {len(dual.tight)} tight facilities")
print("budgets (first 8):", np.round(dual.alpha[:8], 3))

# every facility pays at most the price, tight ones exactly
paid = np.maximum(dual.alpha[:, None] - inst.cost, 0).sum(axis=0)
print("largest payment:", round(float(paid.max()), 6), "<=", price)

g = build_client_facility_graph(dual, inst)
for name, delta in (("general metric", math.inf), ("k-means", delta_preset("kmeans")[0]),
                    ("k-median", delta_preset("kmedian")[0]), ("only co-located", 0.0)):
    h = build_conflict_graph(g, delta, inst)
    _, sol = jv(inst, price, delta)
    print(f"delta={delta:8.4f} ({name:16s}) conflict edges {len(h.edges()):3d}  "
          f"opened {sol.is_size:2d}  cost {sol.cost:8.4f}")

# the measured LMP ratio stays under the preset ceiling
delta, rho = delta_preset("kmeans")
for price in (0.05, 0.2, 0.6, 2.0):
    dual, sol = jv(inst, price, delta)
    lmp = sol.cost / (dual.alpha.sum() - price * sol.is_size)
    print(f"price {price:5.2f}: {sol.is_size:2d} open, LMP ratio {lmp:.3f} (ceiling {rho:.3f})")
