import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from laplace_learn.errors import BridgeRemovalError, SingularityError
from laplace_learn.graph import Topology, laplacian_from_weights, make_graph
from laplace_learn.numerics import (
    effective_resistances,
    log_pdet,
    rank_one_update,
    regularized_inverse,
    spanning_tree_weight,
)

from oracles import (
    brute_resistance,
    eig_log_pdet,
    eig_pinv,
    enumerate_spanning_tree_weight,
    random_connected,
    random_laplacian,
)

EDGE2 = Topology(2, ((0, 1),))


def test_two_node_inverse():
    inv = regularized_inverse(laplacian_from_weights(EDGE2, [1.0]))
    np.testing.assert_allclose(inv.M, [[0.75, 0.25], [0.25, 0.75]], atol=1e-15)
    np.testing.assert_allclose(inv.pinv(), [[0.25, -0.25], [-0.25, 0.25]], atol=1e-15)
    L = inv.L
    np.testing.assert_allclose(L @ inv.pinv(), np.eye(2) - 0.5, atol=1e-15)


def test_disconnected_is_singular():
    L = laplacian_from_weights(EDGE2, [0.0])
    with pytest.raises(SingularityError):
        regularized_inverse(L)
    with pytest.raises(SingularityError):
        log_pdet(L)
    assert spanning_tree_weight(L) == 0.0


def test_fixed_point_and_pinv(rng):
    _, _, L = random_laplacian(15, rng)
    inv = regularized_inverse(L)
    np.testing.assert_allclose(inv.M @ np.ones(15), np.ones(15), atol=1e-12)
    np.testing.assert_allclose(inv.pinv(), eig_pinv(L), atol=1e-10)
    assert np.linalg.eigvalsh(inv.M).min() > 0


def test_log_pdet_examples():
    assert log_pdet(laplacian_from_weights(EDGE2, [1.0])) == pytest.approx(math.log(2), abs=1e-14)
    assert log_pdet(laplacian_from_weights(make_graph("path", 3), [1, 1])) == pytest.approx(math.log(3), abs=1e-14)


def test_log_pdet_scaling(rng):
    _, _, L = random_laplacian(10, rng)
    assert log_pdet(3.0 * L) - log_pdet(L) == pytest.approx(9 * math.log(3.0), abs=1e-10)
    assert log_pdet(L) == pytest.approx(eig_log_pdet(L), rel=1e-12)


def test_spanning_tree_weight_examples():
    assert spanning_tree_weight(laplacian_from_weights(make_graph("path", 6), np.ones(5))) == pytest.approx(1, rel=1e-12)
    assert spanning_tree_weight(laplacian_from_weights(make_graph("complete", 3), np.ones(3))) == pytest.approx(3, rel=1e-12)
    assert spanning_tree_weight(laplacian_from_weights(make_graph("complete", 4), np.ones(6))) == pytest.approx(16, rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2**32 - 1))
def test_matrix_tree_matches_enumeration(p, seed):
    rng = np.random.default_rng(seed)
    t = random_connected(p, rng, density=rng.random())
    w = rng.uniform(0.2, 3.0, t.m)
    got = spanning_tree_weight(laplacian_from_weights(t, w))
    want = enumerate_spanning_tree_weight(t, w)
    assert abs(got - want) <= 1e-9 * want


def test_resistance_examples():
    inv = regularized_inverse(laplacian_from_weights(make_graph("path", 3), [1, 1]))
    assert effective_resistances(inv, [(0, 2)])[0] == pytest.approx(2, abs=1e-14)
    star = regularized_inverse(laplacian_from_weights(make_graph("star", 9), np.ones(8)))
    non_edges = [(i, j) for i in range(1, 9) for j in range(i + 1, 9)]
    np.testing.assert_allclose(effective_resistances(star, non_edges), 2.0, atol=1e-12)
    w = 0.37
    two = regularized_inverse(laplacian_from_weights(EDGE2, [w]))
    assert effective_resistances(two, [(0, 1)])[0] == pytest.approx(1 / w, rel=1e-14)
    assert effective_resistances(two, [(1, 1)])[0] == 0.0


def test_resistances_match_eigen_oracle(rng):
    _, _, L = random_laplacian(12, rng)
    inv = regularized_inverse(L)
    for i, j in [(0, 5), (3, 11), (7, 2)]:
        assert effective_resistances(inv, [(i, j)])[0] == pytest.approx(brute_resistance(L, i, j), rel=1e-10)


@settings(max_examples=25, deadline=None)
@given(st.integers(3, 20), st.integers(0, 2**32 - 1))
def test_resistance_is_a_metric(p, seed):
    rng = np.random.default_rng(seed)
    _, _, L = random_laplacian(p, rng, density=rng.random())
    M = regularized_inverse(L).M
    d = np.diag(M)
    R = d[:, None] + d[None, :] - 2 * M
    assert np.all(R[~np.eye(p, dtype=bool)] > 0)
    sq = np.sqrt(np.maximum(R, 0))
    for k in range(p):
        assert np.all(R <= R[:, [k]] + R[[k], :] + 1e-10)
        assert np.all(sq <= sq[:, [k]] + sq[[k], :] + 1e-10)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 30), st.integers(0, 2**32 - 1))
def test_foster_trace_identity(p, seed):
    rng = np.random.default_rng(seed)
    t, w, L = random_laplacian(p, rng, density=rng.random())
    r = effective_resistances(regularized_inverse(L), t.edges)
    assert abs(np.dot(w, r) - (p - 1)) <= 1e-8


def test_rank_one_zero_delta_is_noop(rng):
    t, w, L = random_laplacian(8, rng)
    inv = regularized_inverse(L)
    M0 = inv.M.copy()
    rank_one_update(inv, t.edges[0], 0.0)
    np.testing.assert_array_equal(inv.M, M0)


def test_rank_one_update_resistance_formula(rng):
    t, w, L = random_laplacian(10, rng, density=0.5)
    for k in range(5):
        inv = regularized_inverse(L)
        e = t.edges[k]
        r = effective_resistances(inv, [e])[0]
        delta = rng.uniform(-0.9 * w[k], 2.0)
        rank_one_update(inv, e, delta)
        fresh = regularized_inverse(laplacian_from_weights(t, w + delta * (np.arange(t.m) == k)))
        assert effective_resistances(inv, [e])[0] == pytest.approx(r / (1 + delta * r), rel=1e-10)
        np.testing.assert_allclose(inv.M, fresh.M, atol=1e-10)


def test_rank_one_sequence_agrees_with_refresh(rng):
    p = 15
    t, w, L = random_laplacian(p, rng, density=0.4)
    inv = regularized_inverse(L)
    w = w.copy()
    for _ in range(p):
        k = int(rng.integers(t.m))
        delta = rng.uniform(-0.5 * w[k], 1.0)
        rank_one_update(inv, t.edges[k], delta)
        w[k] += delta
        A = laplacian_from_weights(t, w) + 1.0 / p
        assert np.abs(A @ inv.M - np.eye(p)).max() <= 1e-8
    np.testing.assert_allclose(inv.M, regularized_inverse(laplacian_from_weights(t, w)).M, atol=1e-8)
    np.testing.assert_allclose(inv.L, laplacian_from_weights(t, w), atol=1e-12)


def test_removing_a_bridge_raises():
    t = make_graph("path", 4)
    inv = regularized_inverse(laplacian_from_weights(t, [1.0, 2.0, 3.0]))
    with pytest.raises(BridgeRemovalError):
        rank_one_update(inv, (1, 2), -2.0)


def test_drift_counter_triggers_refresh(rng):
    p = 6
    t, w, L = random_laplacian(p, rng, density=0.8)
    inv = regularized_inverse(L)
    for k in range(p - 1):
        rank_one_update(inv, t.edges[k % t.m], 0.1)
    assert inv.drift_counter == p - 1
    rank_one_update(inv, t.edges[0], 0.1)
    assert inv.drift_counter == 0 and inv.refreshes == 1
