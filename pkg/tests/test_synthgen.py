import numpy as np
import pytest

from hlcl.graph import homophily_ratio
from hlcl.synthgen import InfeasibleSpecError, SynthSpec, generate, mean_grid, n_target_edges, toy_graph


def test_endpoints_exact():
    for beta in (0.0, 1.0):
        g, _, y = generate(SynthSpec(n_nodes=200, target_beta=beta, seed=3))
        assert homophily_ratio(g, y) == beta


def test_quarter_target_seed_1():
    g, _, y = generate(SynthSpec(target_beta=0.25, seed=1))
    assert 0.20 <= homophily_ratio(g, y) <= 0.30


def test_edge_count_and_determinism():
    spec = SynthSpec(n_nodes=100, avg_degree=6, seed=4)
    g, x, y = generate(spec)
    assert g.n_edges == n_target_edges(spec) == 300
    g2, x2, y2 = generate(spec)
    assert g == g2 and x.tobytes() == x2.tobytes()


def test_class_means_at_requested_distance():
    grid = mean_grid(3, 5)
    d = np.linalg.norm(grid[:, None] - grid[None], axis=-1)
    assert np.allclose(d[~np.eye(3, dtype=bool)], 1.0)
    _, x, y = generate(SynthSpec(n_nodes=4000, feature_std=0.1, class_mean_separation=2.0, seed=0))
    gap = np.linalg.norm(x[y.classes == 0].mean(0) - x[y.classes == 1].mean(0))
    assert gap == pytest.approx(2.0, abs=0.02)


@pytest.mark.parametrize("kw", [
    dict(n_nodes=10, avg_degree=9, target_beta=1.0),
    dict(n_classes=1),
    dict(feature_dim=1, n_classes=2),
    dict(target_beta=1.5),
])
def test_infeasible(kw):
    with pytest.raises(InfeasibleSpecError):
        generate(SynthSpec(**kw))


def test_toy_cases():
    for case, beta in (("high", 1.0), ("low", 0.0)):
        g, x, y = toy_graph(case, seed=0)
        assert g.n_nodes == 7 and x.shape == (7, 200)
        assert sorted(np.bincount(y.classes)) == [3, 4]
        assert homophily_ratio(g, y) == beta
    g, _, y = toy_graph("mixed")
    e = g.edge_array()
    same = y.classes[e[:, 0]] == y.classes[e[:, 1]]
    assert same.sum() == (~same).sum()
