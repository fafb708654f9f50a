"""
A sequence of close duals and the interpolated independent sets
===============================================================

The hand-made instance below has four clients and five facilities. At price 2
with budgets (3, 3, 4, 4) one sweep step to price 2 + eps_z moves each budget
by a small multiple of eps_z and swaps tight facility i4 for i5. Walking
through the hybrid conflict graph of the two levels changes the independent
set one facility at a time, so every size between the two endpoints appears.
"""

import math

import numpy as np

from pdcluster import DualSolution, SweepConfig, from_costs, maximal_independent_set, quasi_sweep
from pdcluster.jv import opening_times
from pdcluster.sequence import _level, quasi_graph_update

eps_z = 1e-2
cost = np.full((4, 5), 5.0)
cost[0, 0] = cost[1, 1] = 1.0
cost[0, 2] = cost[1, 2] = 3.0
cost[2, 2] = 2.0
cost[2, 3] = cost[3, 3] = 3.0
cost[3, 4] = 2.0 + eps_z / 2
between = np.full((5, 5), 5.0)
np.fill_diagonal(between, 0.0)
inst = from_costs(cost, "kmeans-general", 1, between)

alpha_in = np.array([3.0, 3.0, 4.0, 4.0])
paid = np.maximum(alpha_in[:, None] - cost, 0).sum(axis=0)
tight = frozenset(int(i) for i in np.flatnonzero(np.isclose(paid, 2.0)))
lo = _level(0, DualSolution(alpha_in, 2.0, tight, opening_times(alpha_in, cost),
                            np.arange(4)), inst, math.inf)
lo.is_set = maximal_independent_set(lo.conflict)
print("price 2.00  budgets", alpha_in, " tight", sorted(tight), " IS", sorted(lo.is_set))

out = quasi_sweep(alpha_in, 2.0, SweepConfig(eps=0.1, eps_z=eps_z), inst)
hi = _level(1, out, inst, math.inf)
print(f"price {out.lam:.2f}  budgets", np.round(out.alpha, 4), " tight", sorted(out.tight))
print("largest budget change:", float(np.abs(out.alpha - alpha_in).max()))

steps = quasi_graph_update(lo, hi, lo.is_set, inst, math.inf)
print("\nhybrid conflict graph edges (level, facility):")
for a, b in sorted(tuple(sorted(e)) for e in steps[0].graph.edges()):
    print("  ", a, "--", b)
print("\nindependent sets along the walk:")
for st in steps:
    print(f"  step {st.step}: size {len(st.is_set)}  ",
          sorted(st.is_set, key=lambda v: (v[1], v[0])))
