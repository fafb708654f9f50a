"""Certificates: dual feasibility, Lagrangian lower bounds, LMP ratios and the
per-client inequalities that justify them.

Everything here is recomputed from the raw alpha vector and the instance's
cost matrices; nothing produced by the solver is trusted beyond that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .instance import Instance, Objective
from .jv import ETA, ClusterSolution, DualSolution, opening_times


class RefusesToCertify(ValueError):
    """The dual handed over for certification is infeasible."""


class DegenerateCertificate(ArithmeticError):
    """The LMP denominator sum(alpha) - lambda*|IS| is not positive."""


def _tol(scale: float) -> float:
    return 1e-9 * max(1.0, abs(scale))


@dataclass(frozen=True)
class FeasibilityReport:
    slack: np.ndarray
    feasible: bool

    @property
    def min_slack(self) -> float:
        return float(self.slack.min())


def verify_dual_feasibility(alpha: np.ndarray, lam: float, inst: Instance,
                            tol: float = ETA) -> FeasibilityReport:
    """Slack lam - sum_j [alpha_j - c(j,i)]^+ for every facility."""
    alpha = np.asarray(alpha, dtype=float)
    paid = np.maximum(alpha[:, None] - inst.cost, 0.0).sum(axis=0)
    slack = lam - paid
    ok = bool(np.all(slack >= -tol * max(1.0, lam)) and np.all(alpha >= -tol))
    return FeasibilityReport(slack, ok)


def dual_feasibility(dual: DualSolution, inst: Instance) -> FeasibilityReport:
    return verify_dual_feasibility(dual.alpha, dual.lam, inst)


def lp_lower_bound(alpha: np.ndarray, lam: float, inst: Instance, k: Optional[int] = None) -> float:
    """sum(alpha) - lam*k, a lower bound on the k-clustering LP optimum.

    Raises
    ------
    RefusesToCertify
        If alpha is not feasible for the dual at price ``lam``.
    """
    k = inst.k if k is None else k
    if not verify_dual_feasibility(alpha, lam, inst).feasible:
        raise RefusesToCertify("dual is infeasible; no lower bound can be claimed")
    return float(np.sum(alpha) - lam * k)


def lmp_ratio(cost: float, alpha: np.ndarray, lam: float, opened_count: int) -> float:
    """cost / (sum(alpha) - lam * |IS|)."""
    denom = float(np.sum(alpha) - lam * opened_count)
    if denom <= 0 or (denom <= 1e-12 * max(1.0, abs(float(np.sum(alpha))))):
        if denom >= 0 and cost <= _tol(denom):
            raise DegenerateCertificate("zero cost against a zero denominator")
        raise DegenerateCertificate(f"non-positive LMP denominator {denom}")
    return cost / denom


@dataclass(frozen=True)
class ClientAudit:
    """One client's LMP inequality c(j,IS) <= rho*(alpha_j - sum_{i in S} beta_ij).

    ``bound_class`` is "s=0", "s=1" or "s>1" where S is the set of opened
    facilities the client contributes to. ``checks`` lists the intermediate
    inequalities of the case analysis as (name, lhs, rhs) with lhs <= rhs
    required.
    """

    client: int
    bound_class: str
    lhs: float
    rhs: float
    checks: tuple = ()
    ok: bool = True

    def to_json(self) -> dict:
        return {"client": self.client, "class": self.bound_class, "lhs": self.lhs,
                "rhs": self.rhs, "ok": self.ok,
                "checks": [{"name": n, "lhs": a, "rhs": b} for n, a, b in self.checks]}


def client_audit(inst: Instance, dual: DualSolution, opened, delta: float, rho: float,
                 eta: float = ETA) -> list[ClientAudit]:
    """Re-derive the per-client case analysis behind the LMP guarantee.

    For the general-metric preset (delta infinite) at most one opened facility
    receives a positive contribution from any client, and a client with none
    reaches an opened facility within three hops of cost at most alpha each.
    For Euclidean k-means, opened facilities in S are pairwise farther than
    delta*alpha_j (squared), so by the centroid identity the squared distances
    from j sum to at least delta*(s-1)/2*alpha_j. For Euclidean k-median the
    same separation bounds s by three and pays for 2 or 3 facilities.
    """
    alpha = dual.alpha
    c = inst.cost
    op = np.array(sorted(opened), dtype=int)
    d_is = c[:, op].min(axis=1)
    beta = np.maximum(alpha[:, None] - c[:, op], 0.0)
    in_s = alpha[:, None] - c[:, op] > eta
    obj = inst.objective
    out = []
    for j in range(inst.n):
        a = float(alpha[j])
        S = op[in_s[j]]
        s = S.size
        paid = float(beta[j, in_s[j]].sum())
        lhs = float(d_is[j])
        rhs = rho * (a - paid)
        tol = _tol(max(a, lhs))
        checks = []
        if s == 0:
            cls = "s=0"
            checks.append(_zero_case(inst, a, lhs, delta))
        elif s == 1:
            cls = "s=1"
            checks.append(("c(j,IS) <= c(j,i*)", lhs, float(c[j, S[0]])))
        else:
            cls = "s>1"
            sum_c = float(c[j, S].sum())
            pair = inst.facility_cost[np.ix_(S, S)]
            if math.isinf(delta):
                checks.append(("at most one contributed opened facility", float(s), 1.0))
            elif obj.squared:
                checks.append(("centroid bound", delta * (s - 1) / 2 * a, sum_c))
                checks.append(("centroid identity", float(pair.sum()) / (2 * s), sum_c))
                checks.append(("sum beta <= (2 - delta/2) alpha", paid, (2 - delta / 2) * a))
                checks.append(("(delta/2-1) c(j,IS) <= alpha - sum beta",
                               (delta / 2 - 1) * lhs, a - paid))
            else:
                checks.append(("s <= 3", float(s), 3.0))
                pairs = float(np.triu(pair, 1).sum())
                checks.append(("pairwise separation", delta * a * s * (s - 1) / 2, pairs))
                checks.append(("pairwise triangle bound", pairs / (s - 1), sum_c))
                if s == 2:
                    checks.append(("(delta-1) c(j,IS) <= alpha - sum beta", (delta - 1) * lhs, a - paid))
                elif s == 3:
                    checks.append(("(3delta/2-2) c(j,IS) <= alpha - sum beta",
                                   (1.5 * delta - 2) * lhs, a - paid))
        ok = lhs <= rhs + tol and all(x <= y + _tol(max(abs(x), abs(y), a)) for _, x, y in checks)
        out.append(ClientAudit(j, cls, lhs, float(rhs), tuple(checks), bool(ok)))
    return out


def _zero_case(inst: Instance, a: float, lhs: float, delta: float):
    # reached through the witness and at most one conflict edge
    obj = inst.objective
    if math.isinf(delta):
        return ("c(j,IS) <= 9 alpha", lhs, 9.0 * a)
    if obj.squared:
        return ("d(j,IS) <= (1+sqrt(delta)) sqrt(alpha)", math.sqrt(lhs),
                (1 + math.sqrt(delta)) * math.sqrt(max(a, 0.0)))
    return ("c(j,IS) <= (1+delta) alpha", lhs, (1 + delta) * a)


# Certificates -------------------------------------------------------------

@dataclass
class Certificate:
    """Lower bound and ratio evidence for one clustering.

    ``lower_bound`` is sum(alpha) - lam*k for a feasible dual; ``ratio`` is the
    certified ratio cost / best lower bound; ``lmp_ratio`` is the per-price
    LMP ratio cost / (sum(alpha) - lam*|IS|).
    """

    lam: float
    dual_value: float
    lower_bound: float
    best_lower_bound: float
    ratio: Optional[float]
    lmp_ratio: Optional[float]
    feasible: bool
    cost: float
    k: int
    rho: float
    audits: list = field(default_factory=list)
    flags: list = field(default_factory=list)
    closeness: Optional[float] = None
    alpha: Optional[np.ndarray] = None

    @property
    def audits_ok(self) -> bool:
        return all(a.ok for a in self.audits)

    def dual_json(self, inst: Instance) -> dict:
        """The certifying dual in the DualSolution JSON layout."""
        alpha = self.alpha
        paid = np.maximum(alpha[:, None] - inst.cost, 0.0).sum(axis=0)
        tight = np.flatnonzero(paid >= self.lam - ETA * max(1.0, self.lam))
        t = opening_times(alpha, inst.cost)
        edge = alpha[:, None] >= inst.cost[:, tight] - ETA
        wit = {str(j): int(tight[np.argmax(edge[j])]) for j in range(inst.n) if edge[j].any()}
        return {"lambda": self.lam, "alpha": [float(a) for a in alpha],
                "tight": [int(i) for i in tight], "t": {str(int(i)): float(t[i]) for i in tight},
                "witness": wit}

    def to_json(self) -> dict:
        return {
            "lambda": self.lam,
            "dual_value": self.dual_value,
            "lower_bound": self.lower_bound,
            "best_lower_bound": self.best_lower_bound,
            "ratio": self.ratio,
            "lmp_ratio": self.lmp_ratio,
            "rho": self.rho,
            "cost": self.cost,
            "k": self.k,
            "feasible": self.feasible,
            "closeness": self.closeness,
            "flags": list(self.flags),
            "audits": [a.to_json() for a in self.audits],
        }


def build_certificate(inst: Instance, alpha: np.ndarray, lam: float, sol: ClusterSolution,
                      k: int, rho: float, audits: list | None = None,
                      best_lower_bound: Optional[float] = None,
                      normalized: bool = False, closeness: Optional[float] = None) -> Certificate:
    alpha = np.asarray(alpha, dtype=float)
    cost = inst.solution_cost(sol.opened)
    feas = verify_dual_feasibility(alpha, lam, inst).feasible
    flags = []
    lb = float(alpha.sum() - lam * k)
    if not feas:
        flags.append("RefusesToCertify: dual infeasible")
    best = lb if best_lower_bound is None else max(lb, best_lower_bound)
    try:
        lmp = lmp_ratio(cost, alpha, lam, sol.is_size)
    except DegenerateCertificate as exc:
        lmp = None
        flags.append(f"DegenerateCertificate: {exc}")
    if feas and best > 0:
        ratio = cost / best
    else:
        ratio = None
        if cost <= 0:
            flags.append("DegenerateCertificate: zero cost, ratio undefined")
        else:
            flags.append("no positive lower bound")
    if not normalized:
        flags.append("unnormalized: additive absorption via OPT >= n not applied")
    return Certificate(float(lam), float(alpha.sum()), lb, float(best), ratio, lmp, feas, cost,
                       int(k), float(rho), list(audits or []), flags, closeness, alpha.copy())


# Hybrid accounting --------------------------------------------------------

@dataclass
class HybridAccount:
    """Book-keeping for a solution read off the union of two close duals.

    ``alpha_hybrid`` is the per-client minimum of the two duals. For every
    client, ``S[j]`` lists the opened hybrid vertices it contributes to
    (labels of the hybrid graph), and ``payment`` maps each opened vertex to
    the contributions it receives under ``alpha_hybrid``.
    """

    inst: Instance
    alpha_lo: np.ndarray
    alpha_hi: np.ndarray
    lam: float
    eps_z: float
    alpha_hybrid: np.ndarray
    opened_labels: tuple
    label_facility: dict
    label_time: dict
    S: list
    payment: dict
    closeness: float
    delta: float
    rho: float
    unit: float = 1.0


def build_hybrid_account(inst: Instance, alpha_lo, alpha_hi, lam: float, eps_z: float,
                         opened_labels, label_facility: dict, label_time: dict,
                         label_adjacent: dict, delta: float, rho: float,
                         unit: float = 1.0) -> HybridAccount:
    """``label_adjacent[v]`` is the boolean client mask of vertex v in the hybrid graph."""
    a_lo = np.asarray(alpha_lo, dtype=float)
    a_hi = np.asarray(alpha_hi, dtype=float)
    hyb = np.minimum(a_lo, a_hi)
    labels = tuple(sorted(opened_labels, key=_label_key))
    c = inst.cost
    S = []
    for j in range(inst.n):
        S.append(frozenset(v for v in labels if hyb[j] - c[j, label_facility[v]] > ETA))
    payment = {v: float(np.maximum(hyb - c[:, label_facility[v]], 0.0).sum()) for v in labels}
    closeness = float(np.max(np.abs(a_hi - a_lo))) if a_lo.size else 0.0
    return HybridAccount(inst, a_lo, a_hi, float(lam), float(eps_z), hyb, labels,
                         dict(label_facility), dict(label_time), S, payment, closeness,
                         float(delta), float(rho), float(unit))


def _label_key(v):
    if isinstance(v, tuple):
        return (v[1], v[0])
    return (v, 0)


@dataclass
class HybridAuditReport:
    failures: list
    audits: list
    cost: float
    cost_bound: float
    lp_value: float
    measured_factor: Optional[float]

    @property
    def ok(self) -> bool:
        return not self.failures


def audit_hybrid(account: HybridAccount, sol: ClusterSolution, good_check: bool = True,
                 eps: float = 0.1) -> HybridAuditReport:
    """Check the hybrid-solution inequalities with measured closeness.

    With cl = max_j |alpha_hi_j - alpha_lo_j| and u the bucket unit:

    * every i in S_j opens no earlier than j's hybrid budget (alpha_j <= t_i);
    * |S_j| > 0: c(j,IS) <= rho * (alpha_j - sum_{i in S_j} beta_ij);
    * |S_j| = 0: c(j,IS) <= (1+eps) * rho * max(alpha_j + cl, u) + rho * cl;
    * every opened vertex receives at least lam - n*cl in contributions.

    The third form is the exact-arithmetic version of the (1+5 eps) bound for
    normalized inputs, where alpha >= u = 1 and cl <= 1/n^2. With
    ``good_check`` the higher dual's witness structure is re-verified.
    """
    inst = account.inst
    c = inst.cost
    hyb = account.alpha_hybrid
    cl = account.closeness
    rho, delta, u = account.rho, account.delta, account.unit
    op = np.array(sorted(set(sol.opened)), dtype=int)
    d_is = c[:, op].min(axis=1)
    failures = []
    audits = []
    bound_total = 0.0
    for j in range(inst.n):
        a = float(hyb[j])
        S = account.S[j]
        for v in S:
            if a > account.label_time[v] + _tol(a):
                failures.append(f"client {j}: alpha {a} exceeds opening time of {v}")
        lhs = float(d_is[j])
        if S:
            paid = float(sum(max(a - c[j, account.label_facility[v]], 0.0) for v in S))
            rhs = rho * (a - paid)
            cls = "s=1" if len(S) == 1 else "s>1"
        else:
            rhs = (1 + eps) * rho * max(a + cl, u) + rho * cl
            cls = "s=0"
        ok = lhs <= rhs + _tol(max(lhs, rhs))
        if not ok:
            failures.append(f"client {j} ({cls}): {lhs} > {rhs}")
        audits.append(ClientAudit(j, cls, lhs, float(rhs), (), bool(ok)))
        bound_total += rhs
    need = account.lam - inst.n * cl
    for v, paid in account.payment.items():
        if paid < need - _tol(need):
            failures.append(f"opened {v}: payment {paid} < {need}")
    if good_check:
        failures.extend(_good_failures(inst, account.alpha_hi, account.lam + account.eps_z,
                                       delta, eps, u))
    cost = float(d_is.sum())
    lp_value = float(hyb.sum() - account.lam * len(account.opened_labels))
    factor = cost / lp_value if lp_value > 0 else None
    return HybridAuditReport(failures, audits, cost, bound_total, lp_value, factor)


def _good_failures(inst: Instance, alpha: np.ndarray, lam: float, delta: float, eps: float,
                   unit: float) -> list:
    """Every client needs a tight facility reachable by a tight edge whose
    opening time is within a (1+eps) factor of max(alpha_j, unit)."""
    c = inst.cost
    paid = np.maximum(alpha[:, None] - c, 0.0).sum(axis=0)
    tight = paid >= lam - ETA * max(1.0, lam)
    t = opening_times(alpha, c)
    edge = (alpha[:, None] >= c - ETA) & tight[None, :]
    ok_t = t[None, :] <= (1 + eps) * np.maximum(alpha, unit)[:, None] + ETA
    good = (edge & ok_t).any(axis=1)
    return [f"client {j}: no good witness" for j in np.flatnonzero(~good)]
