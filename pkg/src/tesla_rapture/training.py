"""Loss, Adam, step-decay schedule, early stopping, and evaluation metrics."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.stats import rankdata

from .core import GestureSample
from .net import ModelConfig, ModelParameters, backward, classify_forward, init_params, log_softmax
from .preprocess import AugmentConfig, augment

log = logging.getLogger(__name__)


class DivergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 0.001
    decay: float = 0.5
    decay_every: int = 20
    patience: int = 100
    max_epochs: int = 200
    batch_size: int = 16
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    augment: bool = True

    def __post_init__(self):
        if min(self.lr, self.decay, self.decay_every, self.patience, self.max_epochs, self.batch_size) <= 0:
            raise ValueError("training hyperparameters must be positive")
        if self.patience > self.max_epochs:
            raise ValueError("patience cannot exceed max_epochs")


def cross_entropy(logits: np.ndarray, label: int) -> float:
    logits = np.asarray(logits, dtype=np.float64)
    if not 0 <= label < logits.size:
        raise ValueError(f"label {label} outside [0, {logits.size})")
    return -float(log_softmax(logits)[label])


def lr_schedule(epoch: int, cfg: TrainConfig = TrainConfig()) -> float:
    return cfg.lr * cfg.decay ** (epoch // cfg.decay_every)


@dataclass
class AdamState:
    m: dict
    v: dict
    step: int = 0

    @classmethod
    def zeros_like(cls, params) -> "AdamState":
        items = params.items() if hasattr(params, "items") else params
        return cls({k: np.zeros_like(t) for k, t in items}, {k: np.zeros_like(t) for k, t in items})


def adam_step(params, grads: dict, state: AdamState, lr: float, cfg: TrainConfig = TrainConfig()) -> None:
    """Bias-corrected Adam update, applied in place to ``params``."""
    tensors = params.tensors if isinstance(params, ModelParameters) else params
    for name in tensors:
        if grads[name].shape != tensors[name].shape:
            raise ValueError(f"{name}: gradient shape {grads[name].shape} != {tensors[name].shape}")
    state.step += 1
    c1 = 1.0 - cfg.beta1 ** state.step
    c2 = 1.0 - cfg.beta2 ** state.step
    for name, w in tensors.items():
        g = grads[name]
        m = state.m[name]
        v = state.v[name]
        m *= cfg.beta1
        m += (1.0 - cfg.beta1) * g
        v *= cfg.beta2
        v += (1.0 - cfg.beta2) * (g * g)
        w -= lr * (m / c1) / (np.sqrt(v / c2) + cfg.eps)
    if isinstance(params, ModelParameters):
        params.bump()


# --------------------------------------------------------------------------
# metrics


def ovr_auc(scores: np.ndarray, labels: np.ndarray, num_classes: int) -> tuple[float, np.ndarray]:
    """Macro one-vs-rest ranking AUC with half credit for ties.

    Classes without both positives and negatives get ``nan`` and are left
    out of the mean.
    """
    per = np.full(num_classes, np.nan)
    for c in range(num_classes):
        pos = labels == c
        P, N = int(pos.sum()), int((~pos).sum())
        if P == 0 or N == 0:
            log.warning("class %d has no %s; AUC undefined", c, "positives" if P == 0 else "negatives")
            continue
        ranks = rankdata(scores[:, c])
        per[c] = (ranks[pos].sum() - P * (P + 1) / 2) / (P * N)
    valid = per[~np.isnan(per)]
    return (float(valid.mean()) if valid.size else float("nan")), per


@dataclass
class MetricsReport:
    accuracy: float
    auc: float
    confusion: np.ndarray
    per_class_auc: np.ndarray
    mean_inference_s: float = 0.0
    n: int = 0

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "auc": self.auc,
            "confusion": self.confusion.tolist(),
            "per_class_auc": [None if np.isnan(a) else a for a in self.per_class_auc.tolist()],
            "mean_inference_s": self.mean_inference_s,
            "n": self.n,
        }


def metrics_from_scores(scores: np.ndarray, labels, num_classes: int) -> MetricsReport:
    labels = np.asarray(labels)
    pred = np.argmax(scores, axis=1)
    conf = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(conf, (labels, pred), 1)
    auc, per = ovr_auc(scores, labels, num_classes)
    return MetricsReport(float(np.mean(pred == labels)), auc, conf, per, n=len(labels))


def score_samples(samples: list[GestureSample], params: ModelParameters) -> tuple[np.ndarray, float]:
    """Softmax scores for every sample and the mean forward time (after one warm-up)."""
    cfg = params.config
    if samples:
        classify_forward(samples[0], cfg, params)
    out, elapsed = [], 0.0
    for s in samples:
        t0 = time.perf_counter()
        logits, _ = classify_forward(s, cfg, params)
        elapsed += time.perf_counter() - t0
        out.append(np.exp(log_softmax(logits)))
    return np.array(out).reshape(len(samples), cfg.num_classes), elapsed / max(len(samples), 1)


def evaluate(samples: list[GestureSample], params: ModelParameters) -> MetricsReport:
    if not samples:
        raise ValueError("cannot evaluate an empty split")
    scores, mean_t = score_samples(samples, params)
    report = metrics_from_scores(scores, [s.label for s in samples], params.config.num_classes)
    report.mean_inference_s = mean_t
    return report


# --------------------------------------------------------------------------
# training driver


@dataclass
class EpochRecord:
    epoch: int
    lr: float
    train_loss: float
    val_acc: float


@dataclass
class TrainResult:
    params: ModelParameters
    best_epoch: int
    best_val_acc: float
    history: list[EpochRecord] = field(default_factory=list)

    def history_csv(self) -> str:
        rows = ["epoch,lr,train_loss,val_acc"]
        rows += [f"{r.epoch},{r.lr!r},{r.train_loss!r},{r.val_acc!r}" for r in self.history]
        return "\n".join(rows) + "\n"


def batch_gradients(batch: list[GestureSample], params: ModelParameters) -> tuple[float, dict]:
    """Mean loss and gradient over ``batch``, summed in sample order."""
    total, acc = 0.0, None
    for s in batch:
        _, trace = classify_forward(s, params.config, params)
        loss, g = backward(trace, s.label)
        total += loss
        if acc is None:
            acc = g
        else:
            for k in acc:
                acc[k] += g[k]
    inv = 1.0 / len(batch)
    return total * inv, {k: v * inv for k, v in acc.items()}


def validation_accuracy(samples, params) -> float:
    cfg = params.config
    hits = 0
    for s in samples:
        logits, _ = classify_forward(s, cfg, params)
        hits += int(np.argmax(logits) == s.label)
    return hits / len(samples)


def train(
    train_set: list[GestureSample],
    val_set: list[GestureSample],
    model_cfg: ModelConfig,
    cfg: TrainConfig = TrainConfig(),
    augment_cfg: AugmentConfig = AugmentConfig(),
    params: Optional[ModelParameters] = None,
    on_epoch: Optional[Callable[[EpochRecord], None]] = None,
    val_metric: Optional[Callable[[list, ModelParameters], float]] = None,
    time_budget_s: Optional[float] = None,
) -> TrainResult:
    """Train on preprocessed samples with early stopping on validation accuracy.

    Training stops once ``cfg.patience`` epochs pass without a strict
    improvement, or at ``cfg.max_epochs``; the best epoch's weights are
    returned. All randomness derives from ``cfg.seed``. With
    ``time_budget_s`` set, no new epoch starts once the projected end of the
    next one would exceed the budget.
    """
    if not train_set or not val_set:
        raise ValueError("train and validation splits must be non-empty")
    val_metric = val_metric or validation_accuracy
    params = params.copy() if params is not None else init_params(model_cfg, cfg.seed)
    state = AdamState.zeros_like(params)
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 1]))
    best = TrainResult(params.copy(), -1, -1.0)
    history = []
    t_start = time.perf_counter()
    for epoch in range(cfg.max_epochs):
        if time_budget_s is not None and epoch:
            spent = time.perf_counter() - t_start
            if spent + spent / epoch > time_budget_s:
                log.info("time budget reached after %d epochs", epoch)
                break
        lr = lr_schedule(epoch, cfg)
        order = rng.permutation(len(train_set))
        losses = []
        for start in range(0, len(order), cfg.batch_size):
            batch = [train_set[i] for i in order[start : start + cfg.batch_size]]
            if cfg.augment:
                batch = [augment(s, augment_cfg, rng) for s in batch]
            loss, grads = batch_gradients(batch, params)
            if not math.isfinite(loss):
                raise DivergenceError(
                    f"non-finite loss at epoch {epoch}, batch starting {start} (lr={lr})"
                )
            losses.append(loss * len(batch))
            adam_step(params, grads, state, lr, cfg)
        rec = EpochRecord(epoch, lr, sum(losses) / len(train_set), val_metric(val_set, params))
        history.append(rec)
        log.info("epoch %d lr %.2e loss %.4f val_acc %.4f", epoch, lr, rec.train_loss, rec.val_acc)
        if on_epoch:
            on_epoch(rec)
        if rec.val_acc > best.best_val_acc:
            best = TrainResult(params.copy(), epoch, rec.val_acc)
        elif epoch - best.best_epoch >= cfg.patience:
            break
    best.history = history
    return best
