"""
Normalizing distances into a bounded band
=========================================

Rescale by a rough optimum estimate, clamp the far entries and floor the near
ones. Distances stay in a polynomial band in n and the optimum of the new
instance maps back to a near-optimal solution of the original.
"""

import numpy as np

from pdcluster import brute_force_opt, normalize_distances
from pdcluster.instance import random_metric_instance

rng = np.random.default_rng(12)
inst = random_metric_instance(rng, 10, 6, k=2)
print(f"original squared costs in [{inst.cost.min():.3g}, {inst.cost.max():.3g}]")

out, rec = normalize_distances(inst)
n = inst.n
print(f"mode {rec.mode.value}, estimate {rec.estimate:.4g}, distance scale {rec.scale:.4g}")
print(f"normalized costs in [{out.cost.min():.3g}, {out.cost.max():.3g}], band [1, {n**6}]")

for k in (1, 2, 3):
    opt = brute_force_opt(inst, k)
    back = rec.to_original(brute_force_opt(out, k).opt_set)
    cost = inst.solution_cost(back)
    print(f"k={k}: original optimum {opt.opt_cost:.4f}; normalized optimum maps back to "
          f"{cost:.4f} (allowed factor {1 + 100 / n**2:.2f})")
