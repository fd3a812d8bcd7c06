import numpy as np
import pytest

from hlcl.encoder import (
    EncoderParams, OutputMode, encode, final_embeddings, init_params, load_params, project, save_params,
)
from hlcl.filters import FilterKind, build_operator
from hlcl.graph import CsrGraph

from conftest import random_graph


def dense_encode(g, x, p, kind):
    f = build_operator(g, kind).to_dense()
    return np.maximum(f @ np.maximum(f @ x @ p.W0, 0) @ p.W1, 0)


def test_init_deterministic():
    assert init_params(5, 4, 3, 2, seed=7).equal(init_params(5, 4, 3, 2, seed=7))
    assert not init_params(5, 4, 3, 2, seed=7).equal(init_params(5, 4, 3, 2, seed=8))


def test_init_glorot_bound():
    p = init_params(4, 3, 3, 3, seed=0)
    assert np.abs(p.W0).max() <= np.sqrt(6 / 7)


def test_shapes_validated():
    with pytest.raises(ValueError):
        EncoderParams(np.zeros((3, 2)), np.zeros((3, 2)), np.zeros((2, 2)), np.zeros((2, 2)))


def test_zero_weights_give_zero_embedding():
    g = CsrGraph.from_edges(3, [(0, 1)])
    p = init_params(2, 3, 3, 3)
    p.W0[:] = 0
    assert not encode(g, np.ones((3, 2)), p, FilterKind.LOW_PASS).any()


def test_regular_graph_constant_features_high_pass():
    g = CsrGraph.from_edges(5, [(i, (i + 1) % 5) for i in range(5)])
    p = init_params(3, 4, 4, 4, seed=1)
    assert np.abs(encode(g, np.ones((5, 3)), p, "high")).max() < 1e-14


def test_path_layer_one_is_relu_of_column_sums(path3):
    p = EncoderParams(np.ones((3, 1)), np.ones((1, 1)), np.ones((1, 1)), np.ones((1, 1)))
    f = build_operator(path3, FilterKind.LOW_PASS).to_dense()
    from hlcl.encoder import forward
    tr = forward(path3, np.eye(3), p, FilterKind.LOW_PASS)
    assert np.allclose(tr.h1[:, 0], np.maximum(f.sum(axis=1), 0), atol=1e-15)


def test_encode_matches_dense_oracle():
    rng = np.random.default_rng(3)
    for _ in range(10):
        n, m = int(rng.integers(2, 30)), int(rng.integers(1, 6))
        g = random_graph(rng, n)
        x = rng.standard_normal((n, m))
        p = init_params(m, 5, 4, 3, seed=int(rng.integers(1000)))
        for k in FilterKind:
            assert np.abs(encode(g, x, p, k) - dense_encode(g, x, p, k)).max() < 1e-12


def test_projection():
    rng = np.random.default_rng(0)
    h = np.abs(rng.standard_normal((6, 3)))
    eye = np.eye(3)
    assert np.array_equal(project(EncoderParams(np.eye(2, 3), eye, eye, eye), h), h)
    p = init_params(2, 3, 3, 4, seed=2)
    p.P1[:] = 0
    assert not project(p, h).any()
    p = init_params(2, 3, 3, 4, seed=2)
    assert np.abs(project(p, h) - np.maximum(h @ p.P0, 0) @ p.P1).max() < 1e-12


def test_output_modes():
    rng = np.random.default_rng(4)
    g = random_graph(rng, 12)
    x = rng.standard_normal((12, 3))
    p = init_params(3, 4, 5, 4, seed=0)
    lp = encode(g, x, p, "low")
    hp = encode(g, x, p, "high")
    assert np.array_equal(final_embeddings(g, x, p, OutputMode.LP), lp)
    assert np.array_equal(final_embeddings(g, x, p, "hp"), hp)
    assert final_embeddings(g, x, p, "concat").shape == (12, 10)
    assert np.abs(final_embeddings(g, x, p, "aggregate") - (lp + hp)).max() <= 1e-15


def test_weights_shared_between_channels():
    rng = np.random.default_rng(5)
    g = random_graph(rng, 10, 0.4)
    x = rng.standard_normal((10, 3))
    p = init_params(3, 4, 4, 4, seed=0)
    before = [encode(g, x, p, k) for k in FilterKind]
    p.W1 *= 2.0
    after = [encode(g, x, p, k) for k in FilterKind]
    assert all(not np.array_equal(a, b) for a, b in zip(before, after))


def test_checkpoint_roundtrip(tmp_path):
    p = init_params(3, 4, 5, 6, seed=9)
    save_params(p, tmp_path / "p.bin")
    assert load_params(tmp_path / "p.bin").equal(p)
    raw = (tmp_path / "p.bin").read_bytes()
    (tmp_path / "cut.bin").write_bytes(raw[:-8])
    with pytest.raises(ValueError):
        load_params(tmp_path / "cut.bin")
