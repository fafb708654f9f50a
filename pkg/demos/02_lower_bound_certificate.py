"""
Certified lower bounds
======================

Any feasible dual at price lam gives sum(alpha) - lam*k <= OPT_k. Sweeping the
price and keeping the best bound certifies how far a clustering can be from
optimal, without knowing the optimum. On a small instance we compare against
exhaustive search.
"""

import numpy as np

from pdcluster import (RefusesToCertify, brute_force_opt, build_instance, bisection_solve,
                       dual_growth, lp_lower_bound)

rng = np.random.default_rng(3)
pts = rng.uniform(0, 1, (12, 2))
inst = build_instance(pts, "kmedian", k=3)
k = 3

opt = brute_force_opt(inst, k)
print(f"exhaustive optimum over C({inst.m},{k}) = {opt.enumerated} subsets: "
      f"{opt.opt_cost:.4f} at {opt.opt_set}")

best = -np.inf
for lam in np.linspace(0, 2, 41):
    dual = dual_growth(inst, lam)
    lb = lp_lower_bound(dual.alpha, lam, inst, k)
    best = max(best, lb)
print(f"best dual lower bound over the price grid: {best:.4f}  (gap to OPT {opt.opt_cost - best:.4f})")

res = bisection_solve(inst, k)
cert = res.certificate
print(f"\nbisection solution: cost {res.solution.cost:.4f}, {len(res.solution.opened)} centers")
print(f"certified ratio cost / lower bound = {cert.ratio:.3f}; true ratio "
      f"{res.solution.cost / opt.opt_cost:.3f}")

# an infeasible dual is refused rather than producing a bogus bound
bad = dual_growth(inst, 0.5).alpha + 1.0
try:
    lp_lower_bound(bad, 0.5, inst, k)
except RefusesToCertify as exc:
    print("\ninflated dual:", exc)
