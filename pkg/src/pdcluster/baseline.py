"""k-means++ seeding followed by discrete Lloyd iterations (centers in F)."""

from __future__ import annotations

import numpy as np

from .instance import Instance
from .jv import ClusterSolution, make_solution


def kmeanspp_seed(inst: Instance, k: int, rng: np.random.Generator) -> list[int]:
    """Cost-weighted seeding; a sampled client opens its nearest closed facility."""
    c = inst.cost
    k = min(k, inst.m)
    centers = [int(rng.integers(inst.m))]
    while len(centers) < k:
        gap = c[:, centers].min(axis=1)
        total = gap.sum()
        if total <= 0:
            j = int(rng.integers(inst.n))
        else:
            j = int(rng.choice(inst.n, p=gap / total))
        closed = np.ones(inst.m, dtype=bool)
        closed[centers] = False
        cand = np.flatnonzero(closed)
        centers.append(int(cand[np.argmin(c[j, cand])]))
    return centers


def discrete_lloyd(inst: Instance, centers: list[int], max_iter: int = 100) -> ClusterSolution:
    """Alternate nearest-center assignment and best in-cluster facility."""
    c = inst.cost
    centers = list(centers)
    prev = None
    for _ in range(max_iter):
        assign = np.argmin(c[:, centers], axis=1)
        if prev is not None and np.array_equal(assign, prev):
            break
        prev = assign
        new = []
        for q, ctr in enumerate(centers):
            members = np.flatnonzero(assign == q)
            if members.size == 0:
                new.append(ctr)
                continue
            best = int(np.argmin(c[members].sum(axis=0)))
            new.append(best if best not in new else ctr)
        if len(set(new)) < len(new):
            new = list(dict.fromkeys(new))
        centers = new
    return make_solution(inst, centers)


def kmeanspp_lloyd(inst: Instance, k: int, seed: int = 0, max_iter: int = 100) -> ClusterSolution:
    rng = np.random.default_rng(seed)
    return discrete_lloyd(inst, kmeanspp_seed(inst, k, rng), max_iter)
