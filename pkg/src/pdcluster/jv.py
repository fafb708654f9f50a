"""Primal-dual facility opening with a tunable conflict rule.

The dual-growth phase raises client budgets alpha uniformly from zero; a
facility becomes tight once the positive parts [alpha_j - c(j,i)]^+ sum to
the opening price. Pruning builds the client-facility graph of tight
facilities and a conflict graph on them, then opens a maximal independent
set of the conflict graph.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Hashable, Iterable, Optional

import numpy as np
from scipy.optimize import brentq

from .instance import Instance, Objective

ETA = 1e-9


class SeedConflict(ValueError):
    """A seed set handed to the independent-set builder is not independent."""


class InternalError(RuntimeError):
    """An internal loop exceeded its event budget."""


@dataclass(frozen=True)
class DualSolution:
    """Client budgets ``alpha`` for opening price ``lam``.

    ``t[i]`` is the largest alpha among clients with a strictly positive
    contribution to facility i (0 when there is none). ``witness[j]`` is a
    tight facility certifying client j, or -1.
    """

    alpha: np.ndarray
    lam: float
    tight: frozenset
    t: np.ndarray
    witness: np.ndarray

    def beta(self, inst: Instance) -> np.ndarray:
        return np.maximum(self.alpha[:, None] - inst.cost, 0.0)

    def to_json(self) -> dict:
        return {
            "lambda": float(self.lam),
            "alpha": [float(a) for a in self.alpha],
            "tight": sorted(int(i) for i in self.tight),
            "t": {str(i): float(self.t[i]) for i in sorted(self.tight)},
            "witness": {str(j): int(w) for j, w in enumerate(self.witness)},
        }


def contributions(alpha: np.ndarray, cost: np.ndarray) -> np.ndarray:
    """Per-facility sum of [alpha_j - c(j,i)]^+."""
    return np.maximum(alpha[:, None] - cost, 0.0).sum(axis=0)


def opening_times(alpha: np.ndarray, cost: np.ndarray, eta: float = ETA) -> np.ndarray:
    """t_i = max alpha_j over clients with alpha_j - c(j,i) > eta, else 0."""
    contrib = alpha[:, None] - cost > eta
    return np.where(contrib, alpha[:, None], 0.0).max(axis=0)


def dual_growth(inst: Instance, lam: float, eta: float = ETA) -> DualSolution:
    """Event-driven dual growth at opening price ``lam``.

    Between events the active budgets all equal the clock tau. The next time
    a facility becomes tight has a closed form: with the active costs sorted
    s_1 <= s_2 <= ..., the contribution at time tau is
    frozen + sum_q [tau - s_q]^+ = max_p (frozen + sum_{q<=p} (tau - s_q)),
    so it reaches lam at min_p (lam - frozen + s_1 + ... + s_p) / p.
    """
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    c = inst.cost
    n, m = c.shape
    alpha = np.zeros(n)
    active = np.ones(n, dtype=bool)
    tight = np.zeros(m, dtype=bool)
    witness = np.full(n, -1, dtype=int)
    tau = 0.0
    frozen = np.zeros(m)
    budget = 4 * (n + m) + 10
    while active.any():
        budget -= 1
        if budget < 0:
            raise InternalError("dual growth did not terminate")
        act = np.flatnonzero(active)
        ca = np.sort(c[act], axis=0)
        p = np.arange(1, act.size + 1)[:, None]
        cand = (lam - frozen + np.cumsum(ca, axis=0)) / p
        t_tight = np.maximum(cand.min(axis=0), tau)
        t_tight[frozen >= lam - eta] = tau
        t_tight[tight] = np.inf
        ct = c[np.ix_(act, tight)]
        later = np.where(ct > tau + eta, ct, np.inf)
        t_edge = later.min() if later.size else np.inf
        now = min(t_tight.min(), t_edge)
        if not np.isfinite(now):
            raise InternalError("no further events while clients are active")
        tol = eta * max(1.0, abs(now)) * 1e-3
        alpha[act] = now
        tau = now
        # Event 1: facilities becoming tight, ascending id
        for i in np.flatnonzero(t_tight <= now + tol):
            tight[i] = True
            hit = act[(alpha[act] - c[act, i] >= -eta) & active[act]]
            witness[hit] = i
            active[hit] = False
        # Event 2: remaining active clients with a tight edge to a tight facility
        act = np.flatnonzero(active)
        if act.size and tight.any():
            tidx = np.flatnonzero(tight)
            edge = alpha[act, None] - c[np.ix_(act, tidx)] >= -eta
            has = edge.any(axis=1)
            witness[act[has]] = tidx[np.argmax(edge[has], axis=1)]
            active[act[has]] = False
        removed = ~active
        frozen = np.maximum(alpha[removed, None] - c[removed], 0.0).sum(axis=0)
    t = opening_times(alpha, c, eta)
    return DualSolution(alpha, float(lam), frozenset(int(i) for i in np.flatnonzero(tight)), t, witness)


@dataclass(frozen=True)
class ClientFacilityGraph:
    """Bipartite graph between all clients and a list of facility vertices.

    Vertices are labels (plain facility ids, or (level, id) tags in the
    hybrid graph); ``facility[v]`` is the underlying facility index.
    """

    vertices: tuple
    facility: np.ndarray
    adj: np.ndarray  # (n, V) bool
    times: np.ndarray

    def neighbors_of_client(self, j: int) -> list:
        return [self.vertices[v] for v in np.flatnonzero(self.adj[j])]


def build_client_facility_graph(dual: DualSolution, inst: Instance,
                                eta: float = ETA) -> ClientFacilityGraph:
    fac = np.array(sorted(dual.tight), dtype=int)
    adj = dual.alpha[:, None] - inst.cost[:, fac] > eta
    return ClientFacilityGraph(tuple(int(i) for i in fac), fac, adj, dual.t[fac].astype(float))


@dataclass(frozen=True)
class ConflictGraph:
    vertices: tuple
    adj: np.ndarray  # (V, V) bool, symmetric, zero diagonal
    delta: float

    def index(self) -> dict:
        return {v: k for k, v in enumerate(self.vertices)}

    def edges(self) -> set:
        a, b = np.nonzero(np.triu(self.adj, 1))
        return {frozenset((self.vertices[x], self.vertices[y])) for x, y in zip(a, b)}

    def without(self, label: Hashable) -> "ConflictGraph":
        keep = [k for k, v in enumerate(self.vertices) if v != label]
        return ConflictGraph(tuple(self.vertices[k] for k in keep),
                             self.adj[np.ix_(keep, keep)], self.delta)

    def is_independent(self, labels: Iterable) -> bool:
        pos = self.index()
        idx = [pos[v] for v in labels]
        return not self.adj[np.ix_(idx, idx)].any()

    def is_maximal_independent(self, labels: Iterable) -> bool:
        labels = list(labels)
        if not self.is_independent(labels):
            return False
        pos = self.index()
        chosen = np.zeros(len(self.vertices), dtype=bool)
        chosen[[pos[v] for v in labels]] = True
        dominated = chosen | self.adj[:, chosen].any(axis=1)
        return bool(dominated.all())


def build_conflict_graph(g: ClientFacilityGraph, delta: float, inst: Instance) -> ConflictGraph:
    """Facilities conflict when they share a client and sit within delta*min(t)."""
    a = g.adj.astype(np.int32)
    share = (a.T @ a) > 0
    if math.isinf(delta):
        adj = share
    else:
        dist = inst.facility_cost[np.ix_(g.facility, g.facility)]
        adj = share & (dist <= delta * np.minimum.outer(g.times, g.times))
    adj = adj.copy()
    np.fill_diagonal(adj, False)
    return ConflictGraph(g.vertices, adj, float(delta))


def maximal_independent_set(h: ConflictGraph, seed: Iterable = ()) -> frozenset:
    """Greedily extend ``seed`` to a maximal independent set.

    Vertices are scanned in the order of ``h.vertices`` (ascending facility id,
    or (id, level) for hybrid graphs).

    Raises
    ------
    SeedConflict
        If two seed vertices are adjacent or a seed vertex is not in ``h``.
    """
    pos = h.index()
    seed = list(seed)
    missing = [v for v in seed if v not in pos]
    if missing:
        raise SeedConflict(f"seed vertices {missing} are not in the graph")
    chosen = np.zeros(len(h.vertices), dtype=bool)
    sidx = [pos[v] for v in seed]
    if h.adj[np.ix_(sidx, sidx)].any():
        raise SeedConflict("seed is not independent")
    chosen[sidx] = True
    blocked = chosen | h.adj[:, chosen].any(axis=1)
    for v in range(len(h.vertices)):
        if not blocked[v]:
            chosen[v] = True
            blocked |= h.adj[v]
            blocked[v] = True
    return frozenset(h.vertices[v] for v in np.flatnonzero(chosen))


@dataclass(frozen=True)
class ClusterSolution:
    """Opened facilities and the induced nearest-facility assignment.

    ``is_size`` counts vertices of the independent set that produced the
    solution; it can exceed ``len(opened)`` when two copies of one location
    were both selected.
    """

    opened: tuple
    assignment: np.ndarray
    cost: float
    is_size: int
    padded: tuple = ()

    def to_json(self) -> dict:
        return {
            "opened": [int(i) for i in self.opened],
            "assignment": [int(a) for a in self.assignment],
            "cost": float(self.cost),
        }


def make_solution(inst: Instance, opened: Iterable[int], is_size: Optional[int] = None,
                  padded: tuple = ()) -> ClusterSolution:
    op = np.array(sorted(set(int(i) for i in opened)), dtype=int)
    if op.size == 0:
        raise ValueError("a solution needs at least one facility")
    sub = inst.cost[:, op]
    pick = np.argmin(sub, axis=1)  # first minimum = lowest id
    cost = float(sub[np.arange(inst.n), pick].sum())
    return ClusterSolution(tuple(int(i) for i in op), op[pick], cost,
                           int(op.size if is_size is None else is_size), tuple(padded))


def jv(inst: Instance, lam: float, delta: float) -> tuple[DualSolution, ClusterSolution]:
    """Dual growth followed by conflict-graph pruning."""
    dual = dual_growth(inst, lam)
    g = build_client_facility_graph(dual, inst)
    h = build_conflict_graph(g, delta, inst)
    chosen = maximal_independent_set(h)
    return dual, make_solution(inst, chosen, len(chosen))


def _kmeans_delta() -> float:
    f = lambda d: (1 + math.sqrt(d)) ** 2 - 1.0 / (d / 2 - 1)
    return brentq(f, 2.0 + 1e-9, 4.0, xtol=1e-15, rtol=4 * np.finfo(float).eps)


DELTA_KMEANS = _kmeans_delta()
RHO_KMEANS = max((1 + math.sqrt(DELTA_KMEANS)) ** 2, 1.0 / (DELTA_KMEANS / 2 - 1))
DELTA_KMEDIAN = math.sqrt(8.0 / 3.0)
RHO_KMEDIAN = max(1 + DELTA_KMEDIAN, 1 / (DELTA_KMEDIAN - 1), 1 / (1.5 * DELTA_KMEDIAN - 2))


def delta_preset(objective) -> tuple[float, float]:
    """(delta, rho) pair under which pruning is rho-LMP for the objective."""
    objective = Objective.parse(objective)
    if objective is Objective.GENERAL_KMEANS:
        return math.inf, 9.0
    if objective is Objective.EUCLIDEAN_KMEANS:
        return DELTA_KMEANS, RHO_KMEANS
    return DELTA_KMEDIAN, RHO_KMEDIAN
