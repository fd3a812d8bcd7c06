"""Training loop, early stopping and experiment configuration."""
from __future__ import annotations

import dataclasses
import enum
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .augment import format_pipeline, parse_pipeline, sub_seed, two_view_augment
from .encoder import EncoderParams, OutputMode, final_embeddings, init_params
from .graph import Labels, check_features
from .objective import AdamState, adam_step, loss_and_grads
from .probe import ProbeResult, SplitSpec, linear_probe

log = logging.getLogger(__name__)


class Objective(enum.Enum):
    HLCL = "hlcl"
    INFONCE = "infonce"

    @classmethod
    def parse(cls, s) -> "Objective":
        if isinstance(s, cls):
            return s
        key = str(s).strip().lower()
        if key in ("infonce", "infoncebaseline", "infonce_baseline", "grace"):
            return cls.INFONCE
        if key == "hlcl":
            return cls.HLCL
        raise ValueError(f"unknown objective {s!r}; expected hlcl or infonce")


class TrainingDivergedError(FloatingPointError):
    def __init__(self, msg, params: EncoderParams, epoch: int):
        super().__init__(msg)
        self.params = params
        self.epoch = epoch


@dataclass
class TrainConfig:
    seed: int = 0
    epochs_max: int = 200
    lr: float = 1e-3
    tau: float = 0.5
    d1: int = 128
    d2: int = 128
    dp: int = 128
    aug_low: tuple = ()
    aug_high: tuple = ()
    eval_every: int = 10
    patience: int = 5
    objective: Objective = Objective.HLCL
    output_mode: OutputMode = OutputMode.LP
    l2: float = 1e-4

    def __post_init__(self):
        self.aug_low = parse_pipeline(self.aug_low)
        self.aug_high = parse_pipeline(self.aug_high)
        self.objective = Objective.parse(self.objective)
        self.output_mode = OutputMode.parse(self.output_mode)
        if self.epochs_max < 1 or self.eval_every < 1 or self.patience < 1:
            raise ValueError("epochs_max, eval_every and patience must be >= 1")
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if not self.lr > 0:
            raise ValueError("lr must be positive")

    def replace(self, **kw) -> "TrainConfig":
        return dataclasses.replace(self, **kw)

    def to_text(self) -> str:
        lines = []
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if f.name in ("aug_low", "aug_high"):
                v = format_pipeline(v)
            elif isinstance(v, enum.Enum):
                v = v.value
            lines.append(f"{f.name}={v}")
        return "\n".join(lines) + "\n"


_CONFIG_TYPES = {f.name: f.type for f in dataclasses.fields(TrainConfig)}
_INT_KEYS = {"seed", "epochs_max", "d1", "d2", "dp", "eval_every", "patience"}
_FLOAT_KEYS = {"lr", "tau", "l2"}


def parse_config(text: str, base: TrainConfig | None = None) -> TrainConfig:
    """``key=value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if not sep or key not in _CONFIG_TYPES:
            raise ValueError(f"config line {lineno}: unknown or malformed entry {raw.strip()!r}")
        if key in _INT_KEYS:
            values[key] = int(val)
        elif key in _FLOAT_KEYS:
            values[key] = float(val)
        else:
            values[key] = val
    return (base or TrainConfig()).replace(**values)


def load_config(path) -> TrainConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


@dataclass
class TrainReport:
    loss_curve: list = field(default_factory=list)
    best_epoch: int = 0
    probe: ProbeResult | None = None
    wall_seconds: float = 0.0
    val_history: list = field(default_factory=list)  # (epoch, val_acc) per evaluation
    stopped_early: bool = False


def train(g, x, y: Labels | None, cfg: TrainConfig):
    """Contrastive training of the shared encoder.

    Every epoch draws fresh augmented views, encodes the low view with the
    low-pass filter and the high view with the high-pass filter (both views
    low-pass for the InfoNCE comparator), and takes one Adam step.

    With labels, the encoder is probed every ``eval_every`` epochs on its
    low-pass output; training stops after ``patience`` evaluations without
    a validation gain and the best parameters are restored. Without labels,
    training stops once the loss improves by less than 1e-4 (relative) over
    ``patience`` evaluations.
    """
    start = time.perf_counter()
    x = check_features(x, g.n_nodes)
    params = init_params(x.shape[1], cfg.d1, cfg.d2, cfg.dp, seed=cfg.seed)
    state = AdamState.zeros_like(params)
    objective = cfg.objective.value
    split = SplitSpec(seed=cfg.seed)
    report = TrainReport()
    best = params.copy()
    best_score = -np.inf
    since_best = 0
    last_good = params.copy()

    for epoch in range(1, cfg.epochs_max + 1):
        view_low, view_high = two_view_augment(g, x, cfg.aug_low, cfg.aug_high, sub_seed(cfg.seed, 1000 + epoch))
        loss, grads = loss_and_grads(params, view_low, view_high, cfg.tau, objective)
        if not np.isfinite(loss):
            raise TrainingDivergedError(f"non-finite loss at epoch {epoch}", last_good, epoch - 1)
        report.loss_curve.append(float(loss))
        last_good = params.copy()
        adam_step(params, grads, state, cfg.lr)

        if epoch % cfg.eval_every and epoch != cfg.epochs_max:
            continue
        if y is not None:
            emb = final_embeddings(g, x, params, OutputMode.LP)
            score = linear_probe(emb, y, split, cfg.l2).val_acc
            report.val_history.append((epoch, score))
            improved = score > best_score
        else:
            score = -float(loss)
            # plateau test: relative loss improvement below 1e-4
            improved = score > best_score + 1e-4 * abs(best_score) if np.isfinite(best_score) else True
        log.debug("epoch %d loss %.6f score %.4f", epoch, loss, score)
        if improved:
            best_score, since_best = score, 0
            best = params.copy()
            report.best_epoch = epoch
        else:
            since_best += 1
            if since_best >= cfg.patience:
                report.stopped_early = True
                break

    params.assign(best)
    if y is not None:
        emb = final_embeddings(g, x, params, cfg.output_mode)
        report.probe = linear_probe(emb, y, split, cfg.l2)
    report.wall_seconds = time.perf_counter() - start
    return params, report
