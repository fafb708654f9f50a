import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pdcluster import (ClientFacilityGraph, ConflictGraph, SeedConflict, build_client_facility_graph,
                       build_conflict_graph, build_instance, delta_preset, dual_growth, from_costs,
                       jv, maximal_independent_set, verify_dual_feasibility)
from pdcluster.jv import ETA, opening_times

from cases import FIGURE_ALPHA_IN, figure_input_level, figure_instance, random_instance


def test_zero_price_single_pair():
    inst = from_costs([[4.0]], "kmeans-general", 1)
    d = dual_growth(inst, 0.0)
    assert d.alpha.tolist() == [4.0]
    assert d.tight == {0} and d.t[0] == 0.0 and d.witness.tolist() == [0]


def test_two_clients_one_facility():
    # frozen from the time-stepped reference: (a-1)+(a-2) = 3 at a = 3
    d = dual_growth(from_costs([[1.0], [2.0]], "kmeans-general", 1), 3.0)
    np.testing.assert_allclose(d.alpha, [3.0, 3.0])
    assert d.t[0] == 3.0


def test_one_client_two_facilities():
    d = dual_growth(from_costs([[4.0, 9.0]], "kmeans-general", 1), 1.0)
    np.testing.assert_allclose(d.alpha, [5.0])
    assert d.tight == {0} and d.witness.tolist() == [0]


def test_three_clients_frozen():
    # reference simulator at steps 1e-3..1e-5 gives these values
    d = dual_growth(from_costs([[1.0, 4.0], [2.0, 3.0], [5.0, 1.0]], "kmeans-general", 1), 2.0)
    np.testing.assert_allclose(d.alpha, [2.5, 2.5, 3.0])
    assert d.tight == {0, 1}
    assert d.witness.tolist() == [0, 0, 1]
    np.testing.assert_allclose(d.t, [2.5, 3.0])


def test_dual_growth_invariants_random():
    rng = np.random.default_rng(4)
    for obj in ("kmeans", "kmedian", "kmeans-general"):
        for _ in range(20):
            inst = random_instance(rng, obj, int(rng.integers(1, 25)), int(rng.integers(1, 8)))
            lam = float(rng.uniform(0, inst.n * inst.cost.max() / 3))
            d = dual_growth(inst, lam)
            paid = np.maximum(d.alpha[:, None] - inst.cost, 0).sum(axis=0)
            assert np.all(paid <= lam + 1e-9)
            for i in d.tight:
                assert abs(paid[i] - lam) <= 1e-9 * max(1, lam)
            for j, w in enumerate(d.witness):
                assert w in d.tight
                assert d.alpha[j] >= inst.cost[j, w] - ETA
                assert d.alpha[j] >= d.t[w] - ETA
            assert np.array_equal(d.t, opening_times(d.alpha, inst.cost))


def test_determinism():
    rng = np.random.default_rng(1)
    inst = random_instance(rng, "kmeans", 20, 7)
    a = jv(inst, 3.0, delta_preset("kmeans")[0])
    b = jv(inst, 3.0, delta_preset("kmeans")[0])
    assert np.array_equal(a[0].alpha, b[0].alpha) and a[1].opened == b[1].opened


def test_zero_price_graph_is_edgeless():
    rng = np.random.default_rng(2)
    inst = random_instance(rng, "kmeans", 10, 6)
    d = dual_growth(inst, 0.0)
    g = build_client_facility_graph(d, inst)
    assert g.vertices == tuple(range(6)) and not g.adj.any()
    dual, sol = jv(inst, 0.0, 2.0)
    assert sol.opened == tuple(range(6))
    assert sol.cost == pytest.approx(inst.cost.min(axis=1).sum())


def test_figure_input_graph():
    lev = figure_input_level(figure_instance(1e-2))
    assert lev.cf_graph.vertices == (0, 1, 2, 3)
    edges = {(j, v) for j in range(4) for v in lev.cf_graph.neighbors_of_client(j)}
    assert edges == {(0, 0), (1, 1), (2, 2), (2, 3), (3, 3)}
    assert lev.conflict.edges() == {frozenset({2, 3})}


def test_graph_matches_predicate_scan():
    rng = np.random.default_rng(7)
    inst = random_instance(rng, "kmedian", 15, 6)
    d = dual_growth(inst, 4.0)
    g = build_client_facility_graph(d, inst)
    for j in range(inst.n):
        for q, i in enumerate(g.vertices):
            assert g.adj[j, q] == (d.alpha[j] - inst.cost[j, i] > ETA)


def _graph(adj_cf, times, ff):
    n, v = adj_cf.shape
    inst = from_costs(np.ones((n, v)), "kmeans-general", 1, ff)
    g = ClientFacilityGraph(tuple(range(v)), np.arange(v), adj_cf, np.asarray(times, float))
    return g, inst


def test_conflict_rules():
    ff = np.array([[0.0, 4.0], [4.0, 0.0]])
    g, inst = _graph(np.array([[True, False], [False, True]]), [1.0, 1.0], ff)
    assert not build_conflict_graph(g, math.inf, inst).adj.any()
    g, inst = _graph(np.array([[True, True]]), [1.0, 3.0], ff)
    assert not build_conflict_graph(g, 3.9, inst).adj.any()
    assert build_conflict_graph(g, 4.0, inst).adj[0, 1]
    assert build_conflict_graph(g, math.inf, inst).adj[0, 1]
    zero = np.zeros((2, 2))
    g, inst = _graph(np.array([[True, True]]), [0.5, 0.5], zero)
    assert build_conflict_graph(g, 0.0, inst).adj[0, 1]


def test_mis_examples():
    empty = ConflictGraph((0, 1, 2), np.zeros((3, 3), bool), 1.0)
    assert maximal_independent_set(empty) == {0, 1, 2}
    full = ConflictGraph(("a", "b", "c"), ~np.eye(3, dtype=bool), 1.0)
    assert maximal_independent_set(full) == {"a"}
    path = np.zeros((3, 3), bool)
    path[0, 1] = path[1, 0] = path[1, 2] = path[2, 1] = True
    h = ConflictGraph(("a", "b", "c"), path, 1.0)
    assert maximal_independent_set(h, {"b"}) == {"b"}
    assert maximal_independent_set(h) == {"a", "c"}
    with pytest.raises(SeedConflict):
        maximal_independent_set(h, {"a", "b"})


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 9), st.integers(0, 10**6))
def test_mis_property(v, seed):
    rng = np.random.default_rng(seed)
    a = rng.random((v, v)) < 0.4
    a = np.triu(a, 1)
    a = a | a.T
    h = ConflictGraph(tuple(range(v)), a, 1.0)
    seed_set = maximal_independent_set(ConflictGraph(h.vertices[:2], a[:2, :2], 1.0))
    out = maximal_independent_set(h, seed_set)
    assert seed_set <= out and h.is_maximal_independent(out)


def test_delta_presets():
    assert delta_preset("kmeans-general") == (math.inf, 9.0)
    d, r = delta_preset("kmeans")
    assert abs((1 + math.sqrt(d)) ** 2 - 1 / (d / 2 - 1)) < 1e-9
    assert d == pytest.approx(2.3146, abs=1e-4) and r == pytest.approx(6.3574, abs=1e-4)
    d, r = delta_preset("kmedian")
    assert d == math.sqrt(8 / 3) and r == 1 + math.sqrt(8 / 3)


def test_lmp_per_client_general_metric():
    rng = np.random.default_rng(13)
    for _ in range(10):
        inst = random_instance(rng, "kmeans-general", 25, 8)
        lam = float(rng.uniform(0, 5))
        dual, sol = jv(inst, lam, math.inf)
        beta = np.maximum(dual.alpha[:, None] - inst.cost[:, list(sol.opened)], 0).sum(axis=1)
        dist = inst.cost[:, list(sol.opened)].min(axis=1)
        assert np.all(dist <= 9 * (dual.alpha - beta) + 1e-9)


def test_lmp_total_euclidean_kmeans():
    rng = np.random.default_rng(14)
    delta, rho = delta_preset("kmeans")
    for _ in range(10):
        inst = random_instance(rng, "kmeans", 30, 10)
        lam = float(rng.uniform(0, 20))
        dual, sol = jv(inst, lam, delta)
        assert sol.cost <= rho * (dual.alpha.sum() - lam * sol.is_size) + 1e-9


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 12), st.integers(1, 6), st.floats(0, 50), st.integers(0, 10**6))
def test_dual_growth_feasible_property(n, m, lam, seed):
    rng = np.random.default_rng(seed)
    inst = build_instance(rng.uniform(0, 3, (n, 2)), "kmeans", 1, "explicit",
                          rng.uniform(0, 3, (m, 2)))
    d = dual_growth(inst, lam)
    assert verify_dual_feasibility(d.alpha, lam, inst).feasible
    assert np.all(d.witness >= 0)
