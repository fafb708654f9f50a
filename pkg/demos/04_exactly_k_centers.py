"""
Exactly k centers: sequence, bisection and k-means++/Lloyd
==========================================================

Price bisection can skip over k because the number of opened facilities is
not monotone in the price. The close dual sequence walks the price up in
small steps and reads off an independent set of size exactly k.
"""

import time

import numpy as np

from pdcluster import SweepConfig, bisection_solve, build_instance, solve_exact_k
from pdcluster.baseline import kmeanspp_lloyd
from pdcluster.instance import random_points

rng = np.random.default_rng(7)
pts = random_points(rng, 60, 2, 4, spread=0.4)
inst = build_instance(pts, "kmeans", k=4)

for k in (2, 4, 6):
    t0 = time.perf_counter()
    bis = bisection_solve(inst, k)
    lam = max(bis.lam, 1e-6)
    seq = solve_exact_k(inst, k, SweepConfig(eps=0.1, eps_z=lam / 300))
    t1 = time.perf_counter()
    base = kmeanspp_lloyd(inst, k, seed=0)
    lb = max(seq.certificate.best_lower_bound, bis.certificate.best_lower_bound)
    print(f"k={k}: sequence cost {seq.solution.cost:8.3f} ({len(seq.solution.opened)} centers, "
          f"level {seq.level}, step {seq.step})")
    print(f"      bisection cost {bis.solution.cost:8.3f} ({bis.solution.is_size} centers)")
    print(f"      k-means++/Lloyd {base.cost:8.3f}")
    print(f"      lower bound {lb:8.3f}; certified sequence ratio {seq.solution.cost / lb:.3f}; "
          f"{t1 - t0:.1f}s")
    if seq.certificate.flags:
        print("      flags:", "; ".join(seq.certificate.flags))
