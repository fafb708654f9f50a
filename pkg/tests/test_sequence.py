import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pdcluster import (HorizonExhausted, SeedConflict, SweepConfig, bisection_solve,
                       brute_force_opt, bucket, delta_preset, from_costs, generate_sequence,
                       initial_alpha, quasi_graph_update, quasi_sweep, solve_exact_k,
                       verify_dual_feasibility)
from pdcluster.sequence import buckets, check_invariant, collapse_price

from cases import (FIGURE_ALPHA_IN, FIGURE_LAMBDA, euclid_instance, figure_input_level,
                   figure_instance)
from test_certify import _figure_pair

FIGURE_HYBRID_EDGES = {
    ((0, 0), (1, 0)), ((0, 0), (1, 2)), ((0, 1), (1, 1)), ((0, 1), (1, 2)),
    ((0, 2), (0, 3)), ((0, 2), (1, 2)), ((0, 3), (1, 2)), ((0, 3), (1, 4)),
    ((1, 0), (1, 2)), ((1, 1), (1, 2)),
}


def test_bucket_examples():
    assert bucket(0.5, 0.1) == 0
    assert bucket(1.0, 0.1) == 1
    assert bucket(1.05, 0.1) == 1
    assert bucket(1.1, 0.1) == 2
    assert bucket(1.21, 0.1) == 3
    assert bucket(1.1**2, 0.1) == 3
    assert bucket(2.0, 0.1, unit=2.0) == 1


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 1e6), st.floats(0.01, 0.9))
def test_bucket_vectorized_agrees(v, eps):
    assert buckets(np.array([v]), eps)[0] == bucket(v, eps)


def test_initial_alpha():
    inst = from_costs([[3.0, 1.0], [2.0, 5.0]], "kmeans-general", 1)
    assert initial_alpha(inst).tolist() == [1.0, 2.0]


@pytest.mark.parametrize("eps_z", [1e-2, 1e-4])
def test_figure_sweep(eps_z):
    inst = figure_instance(eps_z)
    out = quasi_sweep(FIGURE_ALPHA_IN, FIGURE_LAMBDA, SweepConfig(eps=0.1, eps_z=eps_z), inst)
    expect = [3 + eps_z, 3 + eps_z, 4 - eps_z, 4 + 1.5 * eps_z]
    np.testing.assert_allclose(out.alpha, expect, rtol=0, atol=1e-12)
    assert out.tight == {0, 1, 2, 4}
    assert out.lam == pytest.approx(FIGURE_LAMBDA + eps_z)


@pytest.mark.parametrize("eps_z", [1e-2, 1e-4])
def test_figure_hybrid_graph(eps_z):
    inst, lo, hi = _figure_pair(eps_z)
    steps = quasi_graph_update(lo, hi, lo.is_set, inst, math.inf)
    edges = {tuple(sorted(e)) for e in steps[0].graph.edges()}
    assert edges == FIGURE_HYBRID_EDGES
    assert steps[0].is_set == {(0, 0), (0, 1), (0, 2), (1, 4)}
    assert steps[-1].is_set == {(1, 0), (1, 1), (1, 4)}


def test_graph_update_rejects_bad_seed():
    inst, lo, hi = _figure_pair(1e-2)
    with pytest.raises(SeedConflict):
        quasi_graph_update(lo, hi, {0}, inst, math.inf)


def test_sequence_starts_at_all_facilities():
    rng = np.random.default_rng(1)
    inst = euclid_instance(rng, 10, 5)
    lev = next(generate_sequence(inst, SweepConfig(eps_z=1e-2)))
    assert lev.index == 0 and lev.lam == 0.0
    assert lev.is_set == frozenset(range(5))
    np.testing.assert_allclose(lev.alpha, inst.cost.min(axis=1))


def test_star_instance_reaches_single_center():
    # every client at distance 1 of every facility: one shared client joins all tight facilities
    inst = from_costs(np.ones((4, 3)), "kmeans-general", 1,
                      np.array([[0.0, 2.0, 2.0], [2.0, 0.0, 2.0], [2.0, 2.0, 0.0]]))
    sizes = [len(lev.is_set) for lev in generate_sequence(
        inst, SweepConfig(eps_z=0.05), math.inf, stop=lambda lv: len(lv.is_set) == 1)]
    assert sizes[0] == 3 and sizes[-1] == 1


def test_sequence_invariants_and_steps():
    rng = np.random.default_rng(2)
    delta, _ = delta_preset("kmeans")
    cfg = SweepConfig(eps=0.1, eps_z=5e-3)
    for _ in range(5):
        inst = euclid_instance(rng, 14, 7)
        for lev in generate_sequence(inst, cfg, delta, stop=lambda lv: len(lv.is_set) <= 1):
            assert verify_dual_feasibility(lev.alpha, lev.lam, inst).feasible
            assert check_invariant(lev.dual, inst, cfg.eps) == []
            assert lev.conflict.is_maximal_independent(lev.is_set)
            assert lev.max_alpha_delta <= cfg.eps_z + 1e-12
            sizes = [len(s.is_set) for s in lev.updates]
            for a, b in zip(sizes, sizes[1:]):
                assert b >= a - 1
            for s in lev.updates:
                assert s.graph.is_maximal_independent(s.is_set)


def test_trace_file(tmp_path):
    rng = np.random.default_rng(3)
    inst = euclid_instance(rng, 8, 4)
    path = tmp_path / "trace.jsonl"
    n_levels = sum(1 for _ in generate_sequence(inst, SweepConfig(eps_z=0.05), trace=str(path),
                                                stop=lambda lv: lv.index >= 5))
    recs = [json.loads(x) for x in path.read_text().splitlines()]
    assert sum("lambda" in r for r in recs) == n_levels
    assert recs[0]["level"] == 0 and recs[0]["is_size"] == 4


def test_solve_exact_k_all_facilities():
    rng = np.random.default_rng(4)
    inst = euclid_instance(rng, 10, 4)
    res = solve_exact_k(inst, 4, SweepConfig(eps_z=1e-2))
    assert res.solution.opened == (0, 1, 2, 3)
    assert res.solution.cost == pytest.approx(inst.cost.min(axis=1).sum())


@pytest.mark.parametrize("objective", ["kmeans", "kmedian", "kmeans-general"])
def test_solve_exact_k_sizes_and_ratio(objective):
    rng = np.random.default_rng(5)
    from cases import random_instance
    _, rho = delta_preset(objective)
    if objective == "kmeans-general":
        inst = random_instance(rng, objective, 12, 6)
    else:
        inst = euclid_instance(rng, 12, 6, objective)
    for k in (1, 2, 3):
        res = solve_exact_k(inst, k, SweepConfig(eps_z=1e-3))
        assert len(res.solution.opened) == k
        opt = brute_force_opt(inst, k).opt_cost
        assert res.solution.cost <= rho * opt + 1e-9
        assert res.certificate.best_lower_bound <= opt + 1e-9


def test_solve_exact_k_horizon():
    rng = np.random.default_rng(6)
    inst = euclid_instance(rng, 10, 5)
    with pytest.raises(HorizonExhausted):
        solve_exact_k(inst, 1, SweepConfig(eps_z=1e-3, L=2))


def test_paper_faithful_guard():
    rng = np.random.default_rng(7)
    inst = euclid_instance(rng, 8, 3)
    with pytest.raises(ValueError):
        SweepConfig(paper_faithful=True).resolved(inst, 2.0)


def test_bisection_examples():
    rng = np.random.default_rng(8)
    for objective in ("kmeans", "kmedian"):
        _, rho = delta_preset(objective)
        inst = euclid_instance(rng, 12, 6, objective)
        for k in (1, 2, 4):
            res = bisection_solve(inst, k)
            assert res.solution.is_size <= k
            opt = brute_force_opt(inst, k).opt_cost
            assert res.certificate.best_lower_bound <= opt + 1e-9
    inst = euclid_instance(rng, 6, 3)
    assert bisection_solve(inst, 3).lam == 0.0


def test_collapse_price_gives_single_center():
    from pdcluster import jv
    rng = np.random.default_rng(9)
    for objective in ("kmeans", "kmedian", "kmeans-general"):
        from cases import random_instance
        inst = random_instance(rng, objective, 10, 5)
        delta, _ = delta_preset(objective)
        _, sol = jv(inst, collapse_price(inst, delta), delta)
        assert sol.is_size == 1
