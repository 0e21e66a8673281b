import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from metricgp.field import build_field_model
from metricgp.graph import Point, path_graph, random_connected_graph, random_points
from metricgp.metric import (MetricError, REGIMES, asymptotic_gaps, asymptotic_limit, default_tau,
                             distance_blocks, distance_D, pseudo_variogram_from_cov, resistance_dR,
                             resistance_matrix, resistance_oracle)
from metricgp.psd import one_cnd_check

V1, V3 = Point.at_vertex("v1"), Point.at_vertex("v3")


def test_path_example_values():
    g = path_graph(3)
    for a in (0.3, 1.0, 7.0):
        assert abs(distance_D(build_field_model(g, 3, a), V1, V3).diag - 2.0) < 1e-10
    D = distance_D(build_field_model(g, 3, 1.32092), V1, V3)
    assert D.off == pytest.approx(1.99896, abs=1e-4)
    assert D.diag - D.off == pytest.approx(0.00103, abs=1e-4)
    D = distance_D(build_field_model(g, 3, 0.97222), V1, V3)
    assert abs(D.diag - D.off) < 1e-4
    D = distance_D(build_field_model(g, 3, 0.5), V1, V3)
    assert D.diag - D.off < 0
    D = distance_D(build_field_model(g, 10_000, 1e-4), V1, V3)
    assert abs(D.diag - D.off - 2 / 9) < 0.01


def test_d12_closed_form():
    p, a = 3, 1.32092
    m = build_field_model(path_graph(3), p, a)
    expect = 10 / 9 - 2 / (3 * a * p * (p - 1)) - 2 * m.X[0, 2]
    assert distance_D(m, V1, V3).off == pytest.approx(expect, rel=1e-12)


def test_self_distance_has_zero_diagonal(rng):
    g = random_connected_graph(rng, 6)
    m = build_field_model(g, 3, 1.1, 0.3)
    for u in random_points(g, 5, rng):
        assert distance_D(m, u, u).is_diagonal_zero


def test_matches_pseudo_variogram(rng):
    g = random_connected_graph(rng, 7)
    m = build_field_model(g, 4, 0.8, 0.6)
    for _ in range(10):
        u1, u2 = random_points(g, 2, rng)
        G = pseudo_variogram_from_cov(m.cov_Z, u1, u2)
        np.testing.assert_allclose(distance_D(m, u1, u2).matrix(), G, atol=1e-10)


def test_pseudo_variogram_constant_field():
    K = lambda a, b: np.full((2, 2), 3.0)
    np.testing.assert_array_equal(pseudo_variogram_from_cov(K, 0, 1), np.zeros((2, 2)))


def test_resistance_examples():
    g = path_graph(3)
    m = build_field_model(g, 2, 1.0)
    assert resistance_dR(m, V1, V3) == pytest.approx(2.0, abs=1e-12)
    mid = Point.on_edge("e1", 0.5)
    assert resistance_dR(m, V1, mid) == pytest.approx(resistance_oracle(g, V1, mid), abs=1e-12)
    assert resistance_dR(m, mid, mid) == 0.0


def test_resistance_on_trees_equals_geodesic(rng):
    from metricgp.graph import random_tree

    g = random_tree(rng, 8)
    pts = random_points(g, 12, rng)
    np.testing.assert_allclose(resistance_matrix(g, pts), g.tree_distance_matrix(pts), atol=1e-12)


def test_symmetry_and_homogeneity(rng):
    g = random_connected_graph(rng, 6)
    m = build_field_model(g, 3, 0.7, 0.5)
    u1, u2 = random_points(g, 2, rng)
    D12 = distance_D(m, u1, u2).matrix()
    D21 = distance_D(m, u2, u1).matrix()
    np.testing.assert_allclose(D12, D21, atol=1e-13)
    np.testing.assert_allclose(D12, D12.T)
    G = pseudo_variogram_from_cov(m.cov_Z, u1, u2)
    assert np.ptp(np.diag(G)) < 1e-12 and np.ptp(G[~np.eye(3, dtype=bool)]) < 1e-12


def test_distinct_points_strictly_positive(rng):
    g = random_connected_graph(rng, 6)
    m = build_field_model(g, 3, 0.9, 0.2)
    pts = list(dict.fromkeys(random_points(g, 12, rng)))
    d, o = distance_blocks(m, pts)
    off = ~np.eye(len(pts), dtype=bool)
    assert np.all(d[off] > 0) and np.all(o > 0)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_one_cnd(seed):
    rng = np.random.default_rng(seed)
    g = random_connected_graph(rng, int(rng.integers(3, 8)))
    p = int(rng.integers(2, 5))
    m = build_field_model(g, p, float(rng.uniform(0.2, 3)), float(rng.uniform(0, 1)))
    pts = random_points(g, 6, rng)
    exact, rnd = one_cnd_check(lambda a, b: distance_D(m, a, b).matrix(), pts, p, trials=100, rng=rng)
    assert exact.min_eig >= -1e-9 and rnd.passed


def test_table_regimes_examples():
    g = path_graph(3)
    lim = asymptotic_limit(g, "p-inf", V1, V3, 200, 1.0)
    from metricgp.spectral import pinv

    np.testing.assert_allclose(lim.X, pinv(g.laplacian()))
    lim = asymptotic_limit(g, "alpha-zero", V1, V3, 3, 0.01)
    assert lim.D_off == pytest.approx(2 / (0.01 * 3 * 3))
    m = build_field_model(g, 200, 1.0)
    assert np.linalg.norm(m.Q - 199 * np.eye(3)) / np.linalg.norm(m.Q) <= 0.05


def test_tau_range_errors():
    g = path_graph(3)
    with pytest.raises(MetricError):
        asymptotic_gaps(g, "p-inf-small-tau", 200, V1, V3, tau=10.0)
    with pytest.raises(MetricError):
        asymptotic_gaps(g, "p-inf-large-tau", 200, V1, V3, tau=0.01)
    with pytest.raises(MetricError):
        asymptotic_gaps(g, "nope", 200, V1, V3)
    assert default_tau(g, "p-inf-small-tau") < default_tau(g, "p-inf-large-tau")


@pytest.mark.parametrize("regime", sorted(REGIMES))
def test_gaps_shrink(regime):
    g = path_graph(3)
    u2 = Point.on_edge("e2", 0.4)
    a = asymptotic_gaps(g, regime, 200, V1, u2)
    b = asymptotic_gaps(g, regime, 2000, V1, u2)
    for k in ("Q", "X", "D_off"):
        assert b[k] <= a[k] + 1e-12


def test_difference_against_self_distance_not_psd():
    # D(u1,u1) - D(u0,u0) has zero diagonal and a nonzero constant off-diagonal
    m = build_field_model(path_graph(3), 3, 1.32092)
    v2 = Point.at_vertex("v2")
    M = distance_D(m, V1, V1).matrix() - distance_D(m, v2, v2).matrix()
    assert np.all(np.diag(M) == 0.0)
    assert np.linalg.eigvalsh(M)[0] == pytest.approx(-0.0487008, abs=1e-6)


def test_second_difference_counterexample_with_correlated_bridges():
    from metricgp.graph import Edge, GraphEE

    g = GraphEE(["a", "b"], [Edge("e", "a", "b", 1.0)])
    m = build_field_model(g, 2, 0.5, 1.0)
    G = lambda a, b: pseudo_variogram_from_cov(m.cov_Z, a, b)  # noqa: E731
    u0, u1, u2 = Point.on_edge("e", 0.5), Point.at_vertex("a"), Point.at_vertex("b")
    M = 2 * G(u1, u0) + 2 * G(u2, u0) - G(u1, u2) - 3 * G(u0, u0)
    assert np.linalg.eigvalsh(M)[0] == pytest.approx(-(3 - np.sqrt(5)) / 2, abs=1e-12)
    # without bridge cross-correlation the same triple is fine
    m0 = build_field_model(g, 2, 0.5, 0.0)
    D = lambda a, b: distance_D(m0, a, b).matrix()  # noqa: E731
    assert np.linalg.eigvalsh(2 * D(u1, u0) + 2 * D(u2, u0) - D(u1, u2) - 3 * D(u0, u0))[0] >= -1e-12
