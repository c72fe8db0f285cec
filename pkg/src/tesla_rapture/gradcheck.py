"""Central finite-difference check of the analytic gradients."""

from __future__ import annotations

import numpy as np

from .core import GestureSample
from .net import ModelConfig, ModelParameters, backward, classify_forward, init_params, log_softmax, tiny_config


def loss_at(sample, params: ModelParameters, label: int) -> float:
    logits, _ = classify_forward(sample, params.config, params)
    return -float(log_softmax(logits)[label])


def numeric_grads(sample, params: ModelParameters, label: int, h: float = 1e-6) -> dict:
    """Central differences for every entry of every tensor (restores ``params``)."""
    out = {}
    for name, t in params.items():
        g = np.zeros_like(t)
        flat = t.reshape(-1)
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + h
            params.bump()
            fp = loss_at(sample, params, label)
            flat[i] = old - h
            params.bump()
            fm = loss_at(sample, params, label)
            flat[i] = old
            params.bump()
            g.reshape(-1)[i] = (fp - fm) / (2 * h)
        out[name] = g
    return out


# Central differences at h=1e-6 carry ~1e-10 of round-off per entry, so a
# gradient norm below this floor cannot be resolved to 1e-4 relative error.
NORM_FLOOR = 1e-5


def relative_errors(analytic: dict, numeric: dict, floor: float = NORM_FLOOR) -> dict[str, float]:
    """Per-tensor ``|a - n| / max(|a|, |n|, floor)`` in the Euclidean norm."""
    errs = {}
    for name, a in analytic.items():
        n = numeric[name]
        scale = max(np.linalg.norm(a), np.linalg.norm(n), floor)
        errs[name] = float(np.linalg.norm(a - n) / scale)
    return errs


def tiny_sample(rng: np.random.Generator, n: int = 8, frames: int = 3) -> GestureSample:
    ids = np.sort(rng.integers(0, frames, n))
    return GestureSample(rng.normal(size=(n, 3)), ids, frames)


def random_point(cfg: ModelConfig, rng: np.random.Generator, scale: float = 0.3) -> ModelParameters:
    """Initialized parameters plus Gaussian noise, so no tensor sits at zero."""
    params = init_params(cfg, int(rng.integers(2**31)))
    for t in params.tensors.values():
        t += rng.normal(0.0, scale, t.shape)
    return params


def run_gradcheck(seed: int = 0, points: int = 3, h: float = 1e-6, cfg: ModelConfig = None) -> list[dict]:
    """Check every gradient of the tiny model at ``points`` random parameter points.

    Returns one ``{tensor: relative error}`` table per point.
    """
    cfg = cfg or tiny_config()
    rng = np.random.default_rng(seed)
    tables = []
    for _ in range(points):
        sample = tiny_sample(rng)
        params = random_point(cfg, rng)
        label = int(rng.integers(cfg.num_classes))
        _, trace = classify_forward(sample, cfg, params)
        _, analytic = backward(trace, label)
        tables.append(relative_errors(analytic, numeric_grads(sample, params, label, h)))
    return tables
