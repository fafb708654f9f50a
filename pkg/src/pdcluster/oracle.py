"""Ground truth for tests: exhaustive optima, a greedy optimum estimate and
naive time-stepped versions of the two dual-raising procedures."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .instance import Instance
from .jv import ETA, DualSolution, opening_times


class TooLarge(ValueError):
    """Exhaustive enumeration would exceed its budget."""


@dataclass(frozen=True)
class OracleResult:
    opt_cost: float
    opt_set: tuple
    enumerated: int


def brute_force_opt(inst: Instance, k: int | None = None, budget: int = 10**6,
                    chunk: int = 4096) -> OracleResult:
    """Exact integral optimum over all facility subsets of size min(k, m)."""
    k = inst.k if k is None else k
    m = inst.m
    size = min(k, m)
    total = math.comb(m, size)
    if total > budget:
        raise TooLarge(f"C({m},{size}) = {total} subsets exceed the budget {budget}")
    c = inst.cost
    best_cost, best_set = math.inf, ()
    combos = itertools.combinations(range(m), size)
    while True:
        block = list(itertools.islice(combos, chunk))
        if not block:
            break
        idx = np.array(block, dtype=int)  # (b, size)
        costs = c[:, idx].min(axis=2).sum(axis=0)  # (b,)
        b = int(np.argmin(costs))
        if costs[b] < best_cost:
            best_cost, best_set = float(costs[b]), tuple(int(i) for i in idx[b])
    return OracleResult(best_cost, best_set, total)


def greedy_opt_estimate(inst: Instance, k: int | None = None) -> float:
    """Upper bound on the optimum: farthest-point seeding, then one round of
    reassignment and re-centering within each cluster."""
    k = inst.k if k is None else k
    c = inst.cost
    if k >= inst.m:
        return float(c.min(axis=1).sum())
    centers = [int(np.argmin(c.sum(axis=0)))]
    while len(centers) < k:
        gap = c[:, centers].min(axis=1)
        far = int(np.argmax(gap))
        if gap[far] <= 0:
            break
        cand = [i for i in np.argsort(c[far], kind="stable") if i not in centers]
        centers.append(int(cand[0]))
    assign = np.argmin(c[:, centers], axis=1)
    moved = []
    for q, ctr in enumerate(centers):
        members = np.flatnonzero(assign == q)
        if members.size == 0:
            moved.append(ctr)
            continue
        moved.append(int(np.argmin(c[members].sum(axis=0))))
    before = float(c[:, centers].min(axis=1).sum())
    after = float(c[:, sorted(set(moved))].min(axis=1).sum())
    return min(before, after)


def reference_dual_growth(inst: Instance, lam: float, step: float,
                          eta: float = ETA, max_steps: int = 10**7) -> DualSolution:
    """Time-stepped dual growth: raise every active budget by ``step`` per tick.

    Within a tick facilities are examined before clients, both in ascending id.
    """
    c = inst.cost
    n, m = c.shape
    alpha = np.zeros(n)
    active = np.ones(n, dtype=bool)
    tight = np.zeros(m, dtype=bool)
    witness = np.full(n, -1, dtype=int)
    tau = 0.0
    for _ in range(max_steps):
        paid = np.maximum(alpha[:, None] - c, 0.0).sum(axis=0)
        for i in range(m):
            if not tight[i] and paid[i] >= lam - eta:
                tight[i] = True
        # clients do not affect each other within a tick; first tight edge wins
        edge = active[:, None] & tight[None, :] & (alpha[:, None] >= c - eta)
        hit = edge.any(axis=1)
        witness[hit] = np.argmax(edge[hit], axis=1)
        active[hit] = False
        if not active.any():
            break
        tau += step
        alpha[active] = tau
    t = opening_times(alpha, c, eta)
    return DualSolution(alpha, float(lam), frozenset(int(i) for i in np.flatnonzero(tight)),
                        t, witness)


def _bucket(v: float, eps: float, unit: float) -> int:
    # kept separate from the solver's helper on purpose
    if v < unit:
        return 0
    x = math.log(v / unit) / math.log(1 + eps)
    if abs(x - round(x)) < 1e-9:
        x = round(x)
    return 1 + math.floor(x)


def reference_quasi_sweep(alpha_in, lam: float, cfg, inst: Instance, step: float,
                          eta: float = ETA, max_steps: int = 10**8) -> DualSolution:
    """Time-stepped sweep with ``step`` increments of the threshold.

    Waiting clients above the threshold's bucket shrink by |A|*step per tick,
    stopping at their bucket border. When nobody is active the threshold jumps
    to the next waiting budget.
    """
    c = inst.cost
    n, m = c.shape
    eps, unit = cfg.eps, cfg.unit
    lam_new = lam + cfg.eps_z
    alpha = np.array(alpha_in, dtype=float)
    status = np.zeros(n, dtype=int)
    label = np.array([_bucket(a, eps, unit) for a in alpha])
    tight = np.zeros(m, dtype=bool)
    witness = np.full(n, -1, dtype=int)
    theta = 0.0
    for _ in range(max_steps):
        bt = _bucket(theta, eps, unit)
        for j in range(n):
            if status[j] == 0 and alpha[j] <= theta + eta:
                status[j] = 1
        act = status == 1
        label[act] = bt
        paid = np.maximum(alpha[:, None] - c, 0.0).sum(axis=0)
        tight |= paid >= lam_new - eta
        contrib = alpha[:, None] - c > eta
        for j in np.flatnonzero(act):
            for i in range(m):
                if not tight[i] or alpha[j] < c[j, i] - eta:
                    continue
                if label[contrib[:, i]].max(initial=0) <= bt:
                    status[j] = 2
                    witness[j] = i
                    break
        act = status == 1
        pend = np.flatnonzero(status == 0)
        if not act.any():
            if pend.size == 0:
                break
            theta = float(alpha[pend].min())
            continue
        na = int(act.sum())
        border = unit * (1 + eps) ** bt
        dec = pend[label[pend] > bt]
        theta += step
        alpha[act] = theta
        if dec.size:
            alpha[dec] = np.maximum(alpha[dec] - na * step, border)
            hit = dec[alpha[dec] <= border]
            label[hit] = bt
    t = opening_times(alpha, c, eta)
    return DualSolution(alpha, float(lam_new), frozenset(int(i) for i in np.flatnonzero(tight)),
                        t, witness)
