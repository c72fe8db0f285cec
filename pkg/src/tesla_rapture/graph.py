"""Temporal k-nearest-neighbor graphs over motion point clouds.

Each point receives directed edges from its ``k`` nearest neighbors among
points in the same or earlier frames. Distances are taken over min-max
normalized ``(x, y, z, frame)`` features with the frame column scaled by
``alpha``. Ties are broken by the canonical point order ``(frame, x, y, z)``
so that the graph does not depend on how points happen to be stored.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .core import GestureSample


@dataclass(frozen=True)
class GraphConfig:
    k: int = 32
    alpha: float = 10.0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")


class FeatureRow(NamedTuple):
    spatial: tuple
    temporal: float
    frame: int
    index: int


@dataclass
class TemporalGraph:
    """Directed edges ``src -> dst``, grouped by target in canonical order.

    Within one target the sources are listed nearest first. ``distance``
    holds the masked distance of each edge.
    """

    n: int
    src: np.ndarray
    dst: np.ndarray
    distance: np.ndarray

    @property
    def in_degree(self) -> np.ndarray:
        return np.bincount(self.dst, minlength=self.n)

    def neighbor_lists(self) -> list[list[int]]:
        out = [[] for _ in range(self.n)]
        for s, d in zip(self.src.tolist(), self.dst.tolist()):
            out[d].append(s)
        return out

    def edge_set(self) -> set:
        return set(zip(self.src.tolist(), self.dst.tolist()))

    def dump_csv(self, path) -> None:
        lines = ["src,dst,distance"]
        lines += [f"{s},{d},{w!r}" for s, d, w in zip(self.src.tolist(), self.dst.tolist(), self.distance.tolist())]
        Path(path).write_text("\n".join(lines) + "\n")


def raw_features(sample: GestureSample) -> np.ndarray:
    return np.column_stack([sample.points, sample.frame_ids.astype(np.float64)])


def minmax_normalize(features: np.ndarray) -> np.ndarray:
    """Scale every column to [0, 1]; constant columns map to 0."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[0] < 1:
        raise ValueError("expected a non-empty 2-D feature matrix")
    if not np.all(np.isfinite(features)):
        raise ValueError("non-finite feature value")
    lo = features.min(axis=0)
    span = features.max(axis=0) - lo
    safe = np.where(span > 0, span, 1.0)
    return np.where(span > 0, (features - lo) / safe, 0.0)


def scale_temporal(features: np.ndarray, alpha: float) -> np.ndarray:
    out = np.array(features, dtype=np.float64, copy=True)
    out[:, 3] = out[:, 3] * alpha
    return out


def masked_distance(a: FeatureRow, b: FeatureRow) -> float:
    """Euclidean distance over all four features, or inf if ``b`` is later than ``a``."""
    if b.frame > a.frame:
        return math.inf
    dx = a.spatial[0] - b.spatial[0]
    dy = a.spatial[1] - b.spatial[1]
    dz = a.spatial[2] - b.spatial[2]
    dt = a.temporal - b.temporal
    return math.sqrt(dx * dx + dy * dy + dz * dz + dt * dt)


def canonical_order(sample: GestureSample) -> np.ndarray:
    """Indices sorting the points by ``(frame, x, y, z)``; stable on exact ties."""
    p = sample.points
    return np.lexsort((p[:, 2], p[:, 1], p[:, 0], sample.frame_ids))


def temporal_knn(sample: GestureSample, cfg: GraphConfig) -> TemporalGraph:
    n = sample.n_points
    canon = canonical_order(sample)
    feats = scale_temporal(minmax_normalize(raw_features(sample)), cfg.alpha)[canon]
    frames = sample.frame_ids[canon]

    diff = feats[:, None, :] - feats[None, :, :]
    sq = diff * diff
    dist = np.sqrt(sq[..., 0] + sq[..., 1] + sq[..., 2] + sq[..., 3])
    dist[frames[None, :] > frames[:, None]] = np.inf
    np.fill_diagonal(dist, np.inf)

    kk = min(cfg.k, n - 1)
    if kk < 1:
        empty = np.zeros(0, dtype=np.int64)
        return TemporalGraph(n, empty, empty, np.zeros(0))
    # every distance up to the k-th smallest, ties included, then exact ordering
    thresh = np.partition(dist, kk - 1, axis=1)[:, kk - 1]
    rows, cols = np.nonzero((dist <= thresh[:, None]) & np.isfinite(dist))
    vals = dist[rows, cols]
    order = np.lexsort((cols, vals, rows))
    rows, cols, vals = rows[order], cols[order], vals[order]
    starts = np.searchsorted(rows, np.arange(n))
    rank = np.arange(rows.size) - starts[rows]
    keep = rank < kk
    return TemporalGraph(n, canon[cols[keep]], canon[rows[keep]], vals[keep])


def knn_oracle(sample: GestureSample, cfg: GraphConfig) -> TemporalGraph:
    """Exhaustive pure-Python scan; reference for :func:`temporal_knn`."""
    pts = sample.points.tolist()
    frs = sample.frame_ids.tolist()
    n = len(pts)
    raw = [pts[i] + [float(frs[i])] for i in range(n)]
    lo = [min(r[d] for r in raw) for d in range(4)]
    hi = [max(r[d] for r in raw) for d in range(4)]
    norm = [
        [(r[d] - lo[d]) / (hi[d] - lo[d]) if hi[d] > lo[d] else 0.0 for d in range(4)]
        for r in raw
    ]
    canon = sorted(range(n), key=lambda i: (frs[i], pts[i][0], pts[i][1], pts[i][2]))
    rows = [
        FeatureRow(tuple(norm[i][:3]), norm[i][3] * cfg.alpha, frs[i], i) for i in canon
    ]
    src, dst, dd = [], [], []
    for ci, a in enumerate(rows):
        cand = []
        for cj, b in enumerate(rows):
            if cj == ci:
                continue
            d = masked_distance(a, b)
            if d < math.inf:
                cand.append((d, cj))
        cand.sort()
        for d, cj in cand[: cfg.k]:
            src.append(rows[cj].index)
            dst.append(a.index)
            dd.append(d)
    return TemporalGraph(n, np.array(src, dtype=np.int64), np.array(dst, dtype=np.int64), np.array(dd))
