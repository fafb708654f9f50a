"""Opening exactly k facilities.

Two drivers live here. ``bisection_solve`` is the practical one: it searches
over the opening price and keeps the best solution with at most k centers.
``solve_exact_k`` follows a sequence of duals whose opening prices grow in
steps of eps_z; consecutive duals are close, and interpolating between their
conflict graphs one facility at a time lets the independent-set size walk
down from m to 1 without skipping k.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional

import numpy as np

from .certify import (Certificate, HybridAuditReport, audit_hybrid, build_certificate,
                      build_hybrid_account, client_audit, verify_dual_feasibility)
from .instance import BadInput, Instance
from .jv import (ETA, ClientFacilityGraph, ConflictGraph, DualSolution, InternalError,
                 SeedConflict, build_client_facility_graph, build_conflict_graph, delta_preset,
                 jv, make_solution, maximal_independent_set, opening_times)


class HorizonExhausted(RuntimeError):
    """The sequence ended before an independent set of size k appeared."""

    def __init__(self, msg: str, bracket=None):
        super().__init__(msg)
        self.bracket = bracket


def bucket(v: float, eps: float, unit: float = 1.0) -> int:
    """0 below ``unit``, else 1 + floor(log_{1+eps}(v/unit)).

    Logarithms within 1e-9 of an integer are snapped to it, so that values
    sitting on a border such as 1.1**2 land in the upper bucket despite
    rounding in either the power or the logarithm.
    """
    if v < unit:
        return 0
    x = math.log(v / unit) / math.log1p(eps)
    r = round(x)
    if abs(x - r) <= 1e-9 * max(1.0, abs(x)):
        x = r
    return 1 + int(math.floor(x))


def bucket_border(b: int, eps: float, unit: float = 1.0) -> float:
    """Smallest value of bucket b + 1, i.e. the upper border of bucket b."""
    return unit * (1 + eps) ** b


@dataclass
class SweepConfig:
    """Step size and horizon of the dual sequence.

    With paper_faithful set, it uses eps_z = n^(-3 - 10 log_{1+eps} n) and
    L = 4 n^7 / eps_z; it is only usable for a handful of clients. Desk mode
    uses the given eps_z and stops after ceil(lambda_max / eps_z) levels, where
    lambda_max is a price at which the conflict graph is a clique.
    """

    eps: float = 0.1
    eps_z: float = 1e-4
    L: Optional[int] = None
    paper_faithful: bool = False
    unit: float = 1.0
    max_levels: int = 10**6

    def __post_init__(self):
        if not 0 < self.eps < 1:
            raise ValueError("eps must lie in (0, 1)")
        if self.eps_z <= 0:
            raise ValueError("eps_z must be positive")

    def resolved(self, inst: Instance, delta: float) -> "SweepConfig":
        if self.paper_faithful:
            n = inst.n
            eps_z = n ** (-3 - 10 * math.log(n) / math.log1p(self.eps)) if n > 1 else 1.0
            L = math.ceil(4 * n**7 / eps_z)
            top = collapse_price(inst, delta)
            if top + eps_z == top:
                raise ValueError(f"paper-faithful step {eps_z:.3g} is below floating-point "
                                 f"resolution at prices near {top:.3g}; use n <= 1 or desk mode")
            return SweepConfig(self.eps, eps_z, L, True, self.unit, max(self.max_levels, L))
        if self.L is not None:
            return self
        L = min(self.max_levels, math.ceil(collapse_price(inst, delta) / self.eps_z))
        return SweepConfig(self.eps, self.eps_z, max(1, L), False, self.unit, self.max_levels)


def collapse_price(inst: Instance, delta: float) -> float:
    """A price at which every tight facility serves every client and the
    conflict graph is complete, so at most one facility is opened."""
    cmax = float(inst.cost.max())
    fmax = float(inst.facility_cost.max())
    need = cmax if math.isinf(delta) or delta <= 0 else max(cmax, fmax / delta)
    return 2.0 * inst.n * (need + 1.0)


def initial_alpha(inst: Instance) -> np.ndarray:
    return inst.cost.min(axis=1).astype(float)


@dataclass
class SweepState:
    """Mutable state of one sweep. Active clients all sit at ``theta``."""

    alpha: np.ndarray
    theta: float
    status: np.ndarray  # 0 pending, 1 active, 2 removed
    label: np.ndarray  # bucket label of each client
    tight: np.ndarray
    witness: np.ndarray
    lambda_new: float
    events: int = 0
    kinds: dict = field(default_factory=dict)

    @property
    def active(self) -> np.ndarray:
        return np.flatnonzero(self.status == 1)

    @property
    def removed(self) -> np.ndarray:
        return np.flatnonzero(self.status == 2)


def quasi_sweep(alpha_in: np.ndarray, lam: float, cfg: SweepConfig, inst: Instance,
                eta: float = ETA, stats: Optional[dict] = None) -> DualSolution:
    """Turn a dual at price ``lam`` into one at ``lam + eps_z``.

    A threshold theta rises from 0. A client joins the active set when theta
    reaches its budget and then grows with theta. It leaves once it has a
    tight edge to a tight facility whose contributors all sit in buckets no
    higher than B(theta). While some client is active, every waiting client
    in a bucket above B(theta) shrinks at |A| times the speed of theta, which
    stops any facility it contributes to from gaining. A shrinking client that
    reaches a bucket border stops there and is filed in the lower bucket.

    The simulation is exact: between breakpoints every quantity is linear,
    and the next breakpoint is the earliest of
    - theta reaching a waiting client's budget,
    - theta crossing a bucket border,
    - a facility's contributions reaching the new price (positive slope only),
    - an active client reaching a connection cost,
    - a shrinking client reaching a bucket border,
    - a shrinking client dropping to a connection cost (its contribution ends).

    Returns the new dual including tight set, opening times and witnesses.
    If ``stats`` is given it receives the event count and a tally of which
    breakpoint kind ended each interval.
    """
    c = inst.cost
    n, m = c.shape
    eps, unit = cfg.eps, cfg.unit
    lam_new = lam + cfg.eps_z
    alpha = np.array(alpha_in, dtype=float)
    B = lambda v: bucket(v, eps, unit)
    st = SweepState(alpha, 0.0, np.zeros(n, dtype=np.int8),
                    np.array([B(a) for a in alpha], dtype=int),
                    np.zeros(m, dtype=bool), np.full(n, -1, dtype=int), lam_new)
    top = max([B(a) for a in alpha] + [B(float(c.max()) + lam_new)]) + 2
    guard = 10 * (n + m) * top * n + 100
    while True:
        st.events += 1
        if st.events > guard:
            raise InternalError(f"sweep exceeded {guard} events at theta={st.theta}")
        theta = st.theta
        bt = B(theta)
        # admissions: waiting clients whose budget theta has reached
        join = (st.status == 0) & (alpha <= theta + eta)
        st.status[join] = 1
        act = st.active
        st.label[act] = bt
        # facilities first
        paid = np.maximum(alpha[:, None] - c, 0.0).sum(axis=0)
        st.tight |= paid >= lam_new - eta
        # then clients, ascending id
        if act.size and st.tight.any():
            contrib = alpha[:, None] - c > eta
            lab = np.where(contrib, st.label[:, None], 0).max(axis=0)
            ok_fac = st.tight & (lab <= bt)
            edge = (alpha[act, None] >= c[act] - eta) & ok_fac[None, :]
            has = edge.any(axis=1)
            st.witness[act[has]] = np.argmax(edge[has], axis=1)
            st.status[act[has]] = 2
            act = st.active
        pending = np.flatnonzero(st.status == 0)
        if act.size == 0:
            if pending.size == 0:
                break
            _drain_idle(st, c, eps, unit, eta)
            pending = np.flatnonzero(st.status == 0)
            if pending.size == 0:
                break
            st.theta = float(alpha[pending].min())
            st.kinds["idle-join"] = st.kinds.get("idle-join", 0) + 1
            continue
        na = act.size
        dec = pending[st.label[pending] > bt]
        steady = pending[st.label[pending] <= bt]
        border = bucket_border(bt, eps, unit)
        dts = [(border - theta, "border")]
        if steady.size:
            dts.append((float(alpha[steady].min()) - theta, "join"))
        grow = (c[act] <= theta + eta).sum(axis=0)
        if dec.size:
            shrink = (alpha[dec, None] - c[dec] > eta).sum(axis=0)
        else:
            shrink = np.zeros(m, dtype=int)
        slope = grow - na * shrink
        cand = (~st.tight) & (slope > 0)
        if cand.any():
            dts.append((float(((lam_new - paid[cand]) / slope[cand]).min()), "tight"))
        ahead = c[act][c[act] > theta + eta]
        if ahead.size:
            dts.append((float(ahead.min()) - theta, "edge"))
        if dec.size:
            dts.append((float((alpha[dec] - border).min()) / na, "shrink-border"))
            gap = alpha[dec, None] - c[dec]
            gap = gap[gap > eta]
            if gap.size:
                dts.append((float(gap.min()) / na, "shrink-edge"))
        dt, kind = min(dts)
        st.kinds[kind] = st.kinds.get(kind, 0) + 1
        dt = max(0.0, dt)
        new_theta = theta + dt
        if abs(new_theta - border) <= 1e-12 * max(1.0, border):
            new_theta = border
        alpha[act] = new_theta
        if dec.size:
            alpha[dec] -= na * dt
            low = dec[alpha[dec] <= border + 1e-12 * max(1.0, border)]
            alpha[low] = border
            st.label[low] = bt
        st.theta = new_theta
    if stats is not None:
        stats["events"] = st.events
        stats.update(st.kinds)
    t = opening_times(alpha, c, eta)
    tight = frozenset(int(i) for i in np.flatnonzero(st.tight))
    return DualSolution(alpha, float(lam_new), tight, t, st.witness.copy())


def buckets(v: np.ndarray, eps: float, unit: float = 1.0) -> np.ndarray:
    """Vectorized ``bucket``."""
    v = np.asarray(v, dtype=float)
    with np.errstate(divide="ignore"):
        x = np.log(np.maximum(v, unit) / unit) / math.log1p(eps)
    r = np.round(x)
    x = np.where(np.abs(x - r) <= 1e-9 * np.maximum(1.0, np.abs(x)), r, x)
    return np.where(v < unit, 0, 1 + np.floor(x)).astype(int)


def _drain_idle(st: SweepState, c: np.ndarray, eps: float, unit: float, eta: float) -> None:
    """Admit-and-remove waiting clients in budget order while nobody is active.

    With no active client nothing grows or shrinks and the tight set is fixed.
    Admitting client j only lifts its own label to B(alpha_j), which cannot
    exceed B(alpha_j') for any later client j', so whether a later client is
    removed on admission does not depend on the earlier ones. The prefix of
    waiting clients, in budget order, that would be removed on admission is
    therefore processed in one batch.
    """
    pending = np.flatnonzero(st.status == 0)
    if pending.size == 0 or not st.tight.any():
        return
    alpha = st.alpha
    order = pending[np.argsort(alpha[pending], kind="stable")]
    bj = buckets(alpha[order], eps, unit)
    contrib = alpha[:, None] - c > eta
    lab = np.where(contrib, st.label[:, None], 0).max(axis=0)
    elig = (st.tight[None, :] & (alpha[order, None] >= c[order] - eta)
            & (lab[None, :] <= bj[:, None]))
    ok = elig.any(axis=1)
    if ok.all():
        stop = order.size
    else:
        first_bad = int(np.argmin(ok))
        # clients tied with the first blocked one are left to the main loop
        cut = alpha[order[first_bad]] - eta
        stop = int(np.searchsorted(alpha[order[:first_bad]], cut, side="left"))
    if stop == 0:
        return
    done = order[:stop]
    st.witness[done] = np.argmax(elig[:stop], axis=1)
    st.label[done] = bj[:stop]
    st.status[done] = 2
    st.theta = max(st.theta, float(alpha[done[-1]]))


def check_invariant(dual: DualSolution, inst: Instance, eps: float, unit: float = 1.0,
                    eta: float = ETA) -> list:
    """Clients lacking a tight witness edge with B(t_w) <= B(alpha_j)."""
    c = inst.cost
    paid = np.maximum(dual.alpha[:, None] - c, 0.0).sum(axis=0)
    tight = paid >= dual.lam - eta * max(1.0, dual.lam)
    t = opening_times(dual.alpha, c, eta)
    bad = []
    for j in range(inst.n):
        a = dual.alpha[j]
        ba = bucket(a, eps, unit)
        ok = False
        for i in np.flatnonzero(tight & (a >= c[j] - eta)):
            # border values may be filed in the lower bucket
            if bucket(t[i], eps, unit) <= ba or bucket(max(t[i] - eta, 0.0), eps, unit) <= ba \
                    or t[i] <= a + eta:
                ok = True
                break
        if not ok:
            bad.append(j)
    return bad


@dataclass
class UpdateStep:
    step: int
    graph: ConflictGraph
    is_set: frozenset


@dataclass
class SequenceLevel:
    index: int
    dual: DualSolution
    cf_graph: ClientFacilityGraph
    conflict: ConflictGraph
    is_set: frozenset
    updates: list = field(default_factory=list)
    max_alpha_delta: float = 0.0

    @property
    def alpha(self) -> np.ndarray:
        return self.dual.alpha

    @property
    def lam(self) -> float:
        return self.dual.lam


def _level(index: int, dual: DualSolution, inst: Instance, delta: float) -> SequenceLevel:
    g = build_client_facility_graph(dual, inst)
    h = build_conflict_graph(g, delta, inst)
    return SequenceLevel(index, dual, g, h, frozenset())


def hybrid_client_facility_graph(lo: SequenceLevel, hi: SequenceLevel) -> ClientFacilityGraph:
    """Union of two client-facility graphs on shared clients.

    Facilities are duplicated and tagged (level, id); vertices are ordered by
    facility id, old copy first.
    """
    items = []
    for lev in (lo, hi):
        g = lev.cf_graph
        for k, v in enumerate(g.vertices):
            items.append(((lev.index, v), g.facility[k], g.adj[:, k], g.times[k]))
    items.sort(key=lambda it: (it[0][1], it[0][0]))
    n = lo.cf_graph.adj.shape[0]
    adj = np.column_stack([it[2] for it in items]) if items else np.zeros((n, 0), dtype=bool)
    return ClientFacilityGraph(tuple(it[0] for it in items),
                               np.array([it[1] for it in items], dtype=int), adj,
                               np.array([it[3] for it in items], dtype=float))


def quasi_graph_update(lo: SequenceLevel, hi: SequenceLevel, is_seed, inst: Instance,
                       delta: float) -> list[UpdateStep]:
    """Interpolate from an independent set of H(lo) to one of H(hi).

    Step 1 extends the seed (tagged with lo's index) greedily in the hybrid
    conflict graph. Each later step deletes one old-level facility, in
    ascending id, drops it from the set and re-extends. Deleting a facility
    from the hybrid client-facility graph only deletes its vertex from the
    conflict graph, so the set loses at most one element per step.
    """
    if not lo.conflict.is_maximal_independent(is_seed):
        raise SeedConflict("seed is not a maximal independent set of the lower level")
    g = hybrid_client_facility_graph(lo, hi)
    h = build_conflict_graph(g, delta, inst)
    cur = maximal_independent_set(h, [(lo.index, v) for v in is_seed])
    steps = [UpdateStep(1, h, cur)]
    for v in lo.cf_graph.vertices:
        label = (lo.index, v)
        h = h.without(label)
        cur = maximal_independent_set(h, cur - {label})
        steps.append(UpdateStep(len(steps) + 1, h, cur))
    return steps


class _Trace:
    def __init__(self, path):
        self.fh = open(path, "w", encoding="utf-8") if path else None

    def write(self, rec: dict) -> None:
        if self.fh:
            self.fh.write(json.dumps(rec) + "\n")

    def close(self) -> None:
        if self.fh:
            self.fh.close()


def generate_sequence(inst: Instance, cfg: SweepConfig, delta: Optional[float] = None,
                      stop: Optional[Callable[[SequenceLevel], bool]] = None,
                      trace=None, interpolate: bool = True) -> Iterator[SequenceLevel]:
    """Yield levels 0, 1, ... of the close dual sequence.

    Level 0 is the price-0 dual alpha_j = min_i c(j,i), where every facility
    is tight and isolated, so its independent set is all of F. Each following
    level attaches the interpolation steps from its predecessor in
    ``updates``. When two consecutive conflict graphs coincide the previous
    set is carried over unchanged and no steps are recorded.

    ``trace`` is a path or an object with a ``write(dict)`` method.
    """
    if delta is None:
        delta = delta_preset(inst.objective)[0]
    cfg = cfg.resolved(inst, delta)
    own = isinstance(trace, (str, bytes)) or hasattr(trace, "__fspath__")
    tr = _Trace(trace) if own else trace
    try:
        alpha0 = initial_alpha(inst)
        dual0 = DualSolution(alpha0, 0.0, frozenset(range(inst.m)), np.zeros(inst.m),
                             np.argmin(inst.cost, axis=1))
        prev = _level(0, dual0, inst, delta)
        prev.is_set = maximal_independent_set(prev.conflict)
        _trace_level(tr, prev)
        yield prev
        if stop is not None and stop(prev):
            return
        for ell in range(1, cfg.L + 1):
            dual = quasi_sweep(prev.dual.alpha, prev.dual.lam, cfg, inst)
            # keep prices exact multiples of the step
            dual = DualSolution(dual.alpha, ell * cfg.eps_z, dual.tight, dual.t, dual.witness)
            cur = _level(ell, dual, inst, delta)
            cur.max_alpha_delta = float(np.max(np.abs(dual.alpha - prev.dual.alpha)))
            same = (cur.conflict.vertices == prev.conflict.vertices
                    and np.array_equal(cur.conflict.adj, prev.conflict.adj))
            if same or not interpolate:
                cur.is_set = (prev.is_set if same
                              else maximal_independent_set(cur.conflict))
            else:
                cur.updates = quasi_graph_update(prev, cur, prev.is_set, inst, delta)
                cur.is_set = frozenset(v for (_, v) in cur.updates[-1].is_set)
                for st in cur.updates:
                    if tr is not None:
                        tr.write({"level": ell, "step": st.step, "is_size": len(st.is_set)})
            _trace_level(tr, cur)
            yield cur
            if stop is not None and stop(cur):
                return
            prev = cur
    finally:
        if own:
            tr.close()


def _trace_level(tr, lev: SequenceLevel) -> None:
    if tr is None:
        return
    tr.write({"level": lev.index, "lambda": lev.lam, "max_alpha_delta": lev.max_alpha_delta,
              "tight": len(lev.dual.tight), "tight_ids": sorted(lev.dual.tight),
              "is_size": len(lev.is_set)})


@dataclass
class ExactKResult:
    solution: object
    certificate: Certificate
    level: int
    step: Optional[int]
    hybrid_report: Optional[HybridAuditReport] = None
    levels_run: int = 0


def _pad(inst: Instance, opened: list, k: int) -> tuple[list, tuple]:
    """Add facilities greedily until ``k`` distinct ones are open."""
    opened = sorted(set(opened))
    added = []
    while len(opened) < min(k, inst.m):
        cur = inst.cost[:, opened].min(axis=1)
        rest = [i for i in range(inst.m) if i not in opened]
        gains = [np.minimum(cur, inst.cost[:, i]).sum() for i in rest]
        best = rest[int(np.argmin(gains))]
        opened.append(best)
        opened.sort()
        added.append(best)
    return opened, tuple(added)


def solve_exact_k(inst: Instance, k: Optional[int] = None, cfg: Optional[SweepConfig] = None,
                  delta: Optional[float] = None, rho: Optional[float] = None, trace=None,
                  normalized: bool = False) -> ExactKResult:
    """Open exactly k facilities via the interpolated dual sequence.

    Returns the first intermediate independent set of size k, its certificate
    (hybrid dual at the lower level's price) and the hybrid audit report.

    Raises
    ------
    HorizonExhausted
        If the sequence ends before a set of size k appears.
    """
    k = inst.k if k is None else int(k)
    cfg = cfg or SweepConfig()
    d0, r0 = delta_preset(inst.objective)
    delta = d0 if delta is None else delta
    rho = r0 if rho is None else rho
    if k >= inst.m:
        alpha0 = initial_alpha(inst)
        dual0 = DualSolution(alpha0, 0.0, frozenset(range(inst.m)), np.zeros(inst.m),
                             np.argmin(inst.cost, axis=1))
        sol = make_solution(inst, range(inst.m), inst.m)
        audits = client_audit(inst, dual0, sol.opened, delta, rho)
        cert = build_certificate(inst, alpha0, 0.0, sol, k, rho, audits, normalized=normalized)
        cert.flags.append("k >= m: every facility opened")
        return ExactKResult(sol, cert, 0, None, None, 1)
    rcfg = cfg.resolved(inst, delta)
    if rcfg.paper_faithful:
        lo_band, hi_band = (1.0, float(inst.n) ** 6) if inst.objective.squared else (1.0, float(inst.n) ** 3)
        if inst.cost.min() < lo_band or inst.cost.max() > hi_band:
            raise BadInput("paper-faithful runs need costs normalized into "
                           f"[{lo_band:g}, {hi_band:g}]; normalize the instance first")
    best_lb = -math.inf
    found = None
    prev = None
    levels = 0
    last_sizes = None
    for lev in generate_sequence(inst, rcfg, delta, trace=trace):
        levels += 1
        lb = float(lev.alpha.sum() - lev.lam * k)
        if verify_dual_feasibility(lev.alpha, lev.lam, inst).feasible:
            best_lb = max(best_lb, lb)
        if lev.index == 0:
            if len(lev.is_set) == k:
                found = (lev, None, None)
                break
            prev = lev
            continue
        if lev.updates:
            for st in lev.updates:
                if len(st.is_set) == k:
                    found = (prev, lev, st)
                    break
        elif len(lev.is_set) == k:
            found = (prev, lev, None)
        if found:
            break
        last_sizes = (len(prev.is_set), len(lev.is_set))
        prev = lev
    if found is None:
        raise HorizonExhausted(f"no independent set of size {k} within {rcfg.L} levels",
                               last_sizes)
    lo, hi, st = found
    if hi is None:
        sol = make_solution(inst, lo.is_set, len(lo.is_set))
        audits = client_audit(inst, lo.dual, sol.opened, delta, rho)
        cert = build_certificate(inst, lo.alpha, lo.lam, sol, k, rho, audits, best_lb,
                                 normalized=normalized)
        return ExactKResult(sol, cert, lo.index, None, None, levels)
    if st is None:
        # conflict graphs of lo and hi coincide; the set is maximal in both
        labels = [(hi.index, v) for v in hi.is_set]
        g = hybrid_client_facility_graph(lo, hi)
        step_no = None
    else:
        labels = list(st.is_set)
        g = hybrid_client_facility_graph(lo, hi)
        step_no = st.step
    fac_of = {v: int(f) for v, f in zip(g.vertices, g.facility)}
    time_of = {v: float(t) for v, t in zip(g.vertices, g.times)}
    adj_of = {v: g.adj[:, q] for q, v in enumerate(g.vertices)}
    opened, padded = _pad(inst, [fac_of[v] for v in labels], k)
    sol = make_solution(inst, opened, len(labels), padded)
    account = build_hybrid_account(inst, lo.alpha, hi.alpha, lo.lam, rcfg.eps_z, labels,
                                   fac_of, time_of, adj_of, delta, rho, rcfg.unit)
    report = audit_hybrid(account, sol, good_check=True, eps=rcfg.eps)
    cert = build_certificate(inst, account.alpha_hybrid, lo.lam, sol, k, rho, report.audits,
                             best_lb, normalized=normalized, closeness=account.closeness)
    if padded:
        cert.flags.append(f"padded with facilities {list(padded)} to reach k distinct centers")
    for f in report.failures:
        cert.flags.append("hybrid audit: " + f)
    return ExactKResult(sol, cert, hi.index, step_no, report, levels)


@dataclass
class BisectionResult:
    solution: object
    certificate: Certificate
    lam: float
    probes: list


def bisection_solve(inst: Instance, k: Optional[int] = None, delta: Optional[float] = None,
                    iters: int = 60, rho: Optional[float] = None) -> BisectionResult:
    """Search the opening price for an independent set with at most k centers.

    The independent-set size is not monotone in the price, so every probe is
    kept: the returned solution is the cheapest one with at most k centers,
    and the certificate carries the best lower bound seen over all probes.
    """
    k = inst.k if k is None else int(k)
    d0, r0 = delta_preset(inst.objective)
    delta = d0 if delta is None else delta
    rho = r0 if rho is None else rho
    probes = []
    best = None
    best_lb = -math.inf

    def probe(lam):
        nonlocal best, best_lb
        dual, sol = jv(inst, lam, delta)
        lb = float(dual.alpha.sum() - lam * k)
        best_lb = max(best_lb, lb)
        probes.append((lam, sol.is_size, sol.cost, lb))
        if sol.is_size <= k and (best is None or sol.cost < best[1].cost):
            best = (dual, sol)
        return sol.is_size

    if probe(0.0) > k:
        lo, hi = 0.0, collapse_price(inst, delta)
        while probe(hi) > k:
            hi *= 2.0
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            if probe(mid) <= k:
                hi = mid
            else:
                lo = mid
            if hi - lo <= 1e-12 * max(1.0, hi):
                break
    dual, sol = best
    audits = client_audit(inst, dual, sol.opened, delta, rho)
    cert = build_certificate(inst, dual.alpha, dual.lam, sol, k, rho, audits, best_lb)
    return BisectionResult(sol, cert, dual.lam, probes)
