import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hlcl.filters import (
    FilterKind, apply_filter, build_operator, filter_iteration_study, jacobi_eigh, separation_score,
    symmetric_eigen,
)
from hlcl.graph import CsrGraph, Labels
from hlcl.synthgen import toy_graph

from conftest import random_graph

LOW, HIGH = FilterKind.LOW_PASS, FilterKind.HIGH_PASS


def dense_low(g):
    """Oracle straight from the definition: D~^-1/2 (A + I) D~^-1/2."""
    a = g.adjacency().toarray() + np.eye(g.n_nodes)
    d = a.sum(axis=1)
    return a / np.sqrt(np.outer(d, d))


def test_path_low_pass(path3):
    m = build_operator(path3, LOW).to_dense()
    assert np.allclose(np.diag(m), [1 / 2, 1 / 3, 1 / 2], atol=1e-15)
    assert m[0, 1] == m[1, 0] == pytest.approx(1 / np.sqrt(6), abs=1e-15)
    assert m[1, 2] == pytest.approx(1 / np.sqrt(6), abs=1e-15)
    assert m[0, 2] == 0.0


def test_path_high_pass(path3):
    m = build_operator(path3, HIGH).to_dense()
    assert np.allclose(np.diag(m), [1 / 2, 2 / 3, 1 / 2], atol=1e-15)
    assert m[0, 1] == pytest.approx(-1 / np.sqrt(6), abs=1e-15)


def test_isolated_node_low_pass():
    g = CsrGraph.from_edges(1, [])
    assert build_operator(g, LOW).to_dense().tolist() == [[1.0]]
    assert jacobi_eigh(np.array([[1.0]]))[0].tolist() == [1.0]


def test_apply_on_path(path3):
    x = np.array([1.0, 0.0, 0.0])
    assert np.allclose(apply_filter(path3, LOW, x), [0.5, 1 / np.sqrt(6), 0.0], atol=1e-15)
    assert np.allclose(apply_filter(path3, HIGH, x), [0.5, -0.40824829046386296, 0.0], atol=1e-15)


def test_regular_graph_constant_killed():
    n = 8
    g = CsrGraph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])
    assert np.abs(apply_filter(g, HIGH, np.ones((n, 3)))).max() < 1e-15


def test_operator_matches_definition():
    rng = np.random.default_rng(1)
    for _ in range(20):
        g = random_graph(rng, int(rng.integers(1, 40)))
        assert np.abs(build_operator(g, LOW).to_dense() - dense_low(g)).max() < 1e-15


def test_path_spectra(path3):
    lh = symmetric_eigen(build_operator(path3, HIGH))[0]
    ll = symmetric_eigen(build_operator(path3, LOW))[0]
    assert lh.min() >= -1e-12 and lh.max() < 2
    assert ll.min() > -1 and ll.max() <= 1 + 1e-12


def test_jacobi_against_lapack():
    rng = np.random.default_rng(2)
    for n in (2, 5, 17, 40):
        a = rng.standard_normal((n, n))
        a = a + a.T
        w, v = jacobi_eigh(a)
        assert np.allclose(w, np.linalg.eigvalsh(a), atol=1e-10)
        assert np.abs(a @ v - v * w).max() < 1e-10
        assert np.abs(v.T @ v - np.eye(n)).max() < 1e-12


def test_symmetric_eigen_size_limit():
    g = CsrGraph.from_edges(300, [])
    with pytest.raises(ValueError):
        symmetric_eigen(build_operator(g, LOW))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 40), st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_linearity(n, m, seed):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, n)
    x, y = rng.standard_normal((2, n, m))
    a, b = rng.standard_normal(2)
    for k in (LOW, HIGH):
        lhs = apply_filter(g, k, a * x + b * y)
        rhs = a * apply_filter(g, k, x) + b * apply_filter(g, k, y)
        assert np.abs(lhs - rhs).max() <= 1e-12 * max(1.0, np.abs(lhs).max())


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 40), st.integers(0, 2**32 - 1))
def test_permutation_equivariance(n, seed):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, n)
    x = rng.standard_normal((n, 3))
    perm = rng.permutation(n)
    for k in (LOW, HIGH):
        out = apply_filter(g, k, x)
        # node i becomes perm[i]; filter, then read rows back in old order
        xp = np.empty_like(x)
        xp[perm] = x
        back = apply_filter(g.permute(perm), k, xp)[perm]
        assert np.abs(back - out).max() <= 1e-15


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 60), st.integers(0, 2**32 - 1))
def test_matrix_free_matches_dense(n, seed):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, n)
    x = rng.standard_normal((n, 4))
    for k in (LOW, HIGH):
        assert np.abs(apply_filter(g, k, x) - build_operator(g, k).to_dense() @ x).max() <= 1e-10


def test_separation_score_two_points():
    x = np.array([[0.0, 0.0], [0.0, 0.0], [3.0, 4.0], [3.0, 4.0]])
    assert separation_score(x, Labels.from_array([0, 0, 1, 1])) == pytest.approx(5.0 / 1e-12)


def test_separation_single_class():
    with pytest.raises(ValueError):
        separation_score(np.zeros((3, 2)), Labels.from_array([0, 0, 0]))


def test_iteration_study_start_is_kind_independent():
    g, x, y = toy_graph("mixed", seed=0)
    a = filter_iteration_study(g, x, y, LOW, 3)
    b = filter_iteration_study(g, x, y, HIGH, 3)
    assert len(a) == 4 and a[0] == b[0]
    assert a[0] == separation_score(x, y)


def test_toy_raw_separation_scale():
    # centroid gap about 10 * sqrt(200) in 200 dims
    g, x, y = toy_graph("high", seed=0)
    gap = np.linalg.norm(x[y.classes == 0].mean(0) - x[y.classes == 1].mean(0))
    assert gap == pytest.approx(10 * np.sqrt(200), rel=0.02)


def test_toy_high_homophily_low_pass_non_decreasing():
    s = np.mean([filter_iteration_study(*toy_graph("high", seed=k), LOW, 3) for k in range(20)], axis=0)
    assert np.all(np.diff(s) >= 0)


def test_toy_low_homophily_high_pass_improves():
    s = np.mean([filter_iteration_study(*toy_graph("low", seed=k), HIGH, 3) for k in range(20)], axis=0)
    assert s[3] > s[0]
