import numpy as np
import pytest

from hlcl.synthgen import SynthSpec, generate
from hlcl.trainer import Objective, TrainConfig, TrainingDivergedError, parse_config, train

SMALL = dict(d1=8, d2=8, dp=8, epochs_max=6, eval_every=2, patience=2)


@pytest.fixture(scope="module")
def data():
    return generate(SynthSpec(n_nodes=60, avg_degree=4, target_beta=0.3, feature_dim=4, seed=2))


def test_single_epoch(data):
    g, x, _ = data
    _, rep = train(g, x, None, TrainConfig(epochs_max=1, d1=4, d2=4, dp=4))
    assert len(rep.loss_curve) == 1 and rep.probe is None


def test_deterministic_loss_curve(data):
    g, x, y = data
    cfg = TrainConfig(seed=5, aug_low="er:0.2", aug_high="fm:0.25", **SMALL)
    p1, r1 = train(g, x, y, cfg)
    p2, r2 = train(g, x, y, cfg)
    assert r1.loss_curve == r2.loss_curve and p1.equal(p2)


def test_output_mode_does_not_change_training(data):
    g, x, y = data
    p1, r1 = train(g, x, y, TrainConfig(output_mode="lp", **SMALL))
    p2, r2 = train(g, x, y, TrainConfig(output_mode="concat", **SMALL))
    assert r1.loss_curve == r2.loss_curve and p1.equal(p2)
    assert r2.probe.weights.shape[0] == 16


def test_best_checkpoint_restored(data):
    g, x, y = data
    _, rep = train(g, x, y, TrainConfig(**SMALL))
    best = max(v for _, v in rep.val_history)
    assert dict(rep.val_history)[rep.best_epoch] == best
    assert rep.probe.val_acc == best
    assert len(rep.loss_curve) <= 6


def test_infonce_objective_runs(data):
    g, x, y = data
    _, rep = train(g, x, y, TrainConfig(objective="grace", **SMALL))
    assert rep.loss_curve[0] > 0


def test_divergence_reports_last_good(data):
    g, x, _ = data
    bad = x.copy()
    bad[0, 0] = np.inf
    with pytest.raises((TrainingDivergedError, ValueError)):
        train(g, bad, None, TrainConfig(**SMALL))


def test_config_parsing():
    cfg = parse_config("# comment\nseed = 3\nlr=0.01  # inline\naug_low=er:0.3+fm:0.3\nobjective=infonce\n")
    assert cfg.seed == 3 and cfg.lr == 0.01 and cfg.objective is Objective.INFONCE
    assert len(cfg.aug_low) == 2
    assert parse_config(cfg.to_text()) == cfg
    with pytest.raises(ValueError, match="line 1"):
        parse_config("bogus=1")
    with pytest.raises(ValueError):
        TrainConfig(tau=0)
    with pytest.raises(ValueError):
        TrainConfig(eval_every=0)
