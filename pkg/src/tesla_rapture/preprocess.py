"""Pose normalization, frame division, density-based resampling, augmentation."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.cluster.hierarchy import linkage

from .core import GestureSample


class DegeneratePoseError(ValueError):
    pass


class TooFewPointsError(ValueError):
    pass


@dataclass(frozen=True)
class PreprocessConfig:
    reference_range: float = 1.5
    reference_azimuth: float = 0.0
    frames: int = 32
    points: int = 1024

    def __post_init__(self):
        if self.frames < 1 or self.points < 1 or self.points % self.frames:
            raise ValueError("points must be a positive multiple of frames")

    @property
    def points_per_frame(self) -> int:
        return self.points // self.frames


@dataclass(frozen=True)
class AugmentConfig:
    max_translation: float = 0.10
    scale_min: float = 0.8
    scale_max: float = 1.25
    jitter_sigma: float = 0.01
    jitter_clip: float = 0.03
    shuffle: bool = True

    def __post_init__(self):
        if not 0 < self.scale_min <= self.scale_max:
            raise ValueError("scale range must be positive and ordered")
        if self.jitter_clip < 0 or self.jitter_sigma < 0 or self.max_translation < 0:
            raise ValueError("translation, jitter sigma and clip must be non-negative")


def normalize_pose(sample: GestureSample, cfg: PreprocessConfig = PreprocessConfig()) -> GestureSample:
    """Rotate about z and shift radially so the centroid sits at the reference pose."""
    pts = sample.points
    c = pts.mean(axis=0)
    rho = math.hypot(c[0], c[1])
    if rho < 1e-12:
        raise DegeneratePoseError("gesture centroid lies on the z-axis; azimuth undefined")
    delta = math.atan2(c[0], c[1]) - cfg.reference_azimuth
    out = pts.copy()
    if delta != 0.0:
        cs, sn = math.cos(delta), math.sin(delta)
        out[:, 0] = pts[:, 0] * cs - pts[:, 1] * sn
        out[:, 1] = pts[:, 0] * sn + pts[:, 1] * cs
    shift = cfg.reference_range - rho
    if shift != 0.0:
        out[:, 0] += shift * math.sin(cfg.reference_azimuth)
        out[:, 1] += shift * math.cos(cfg.reference_azimuth)
    return sample.replace(points=out)


def divide_frames(sample: GestureSample, S: int) -> GestureSample:
    """Regroup the points, in temporal order, into ``S`` equal-size frames.

    The ``n mod S`` leftover points are appended to the last frame.
    """
    n = sample.n_points
    if S < 1:
        raise ValueError("S must be positive")
    if n < S:
        raise TooFewPointsError(f"{n} points cannot fill {S} frames")
    per = n // S
    ids = np.minimum(np.arange(n) // per, S - 1)
    return sample.replace(frame_ids=ids, num_frames=S)


def _canonical(points: np.ndarray) -> np.ndarray:
    order = np.lexsort((points[:, 2], points[:, 1], points[:, 0]))
    return points[order]


def kmeans(points: np.ndarray, k: int, rng: np.random.Generator, max_iter: int = 100) -> np.ndarray:
    """Lloyd's algorithm with k-means++ seeding; returns the ``k`` centroids."""
    p = points.shape[0]
    centers = np.empty((k, points.shape[1]))
    centers[0] = points[rng.integers(p)]
    d2 = np.sum((points - centers[0]) ** 2, axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = rng.choice(p, p=d2 / total)
        else:
            idx = rng.integers(p)
        centers[c] = points[idx]
        d2 = np.minimum(d2, np.sum((points - centers[c]) ** 2, axis=1))

    assign = None
    for _ in range(max_iter):
        dist = np.sum((points[:, None, :] - centers[None, :, :]) ** 2, axis=2)
        new = np.argmin(dist, axis=1)
        if assign is not None and np.array_equal(new, assign):
            break
        assign = new
        for c in range(k):
            members = points[assign == c]
            if len(members):  # empty clusters keep their previous center
                centers[c] = members.mean(axis=0)
    return centers


def ahc_upsample(points: np.ndarray, m: int) -> np.ndarray:
    """Grow ``points`` to ``m`` rows by adding single-linkage merge centroids.

    Each round clusters the current set bottom-up; every merge, cheapest
    first, contributes the centroid of the merged cluster as a new point.
    Rounds repeat on the enlarged set until ``m`` points exist.
    """
    out = [points]
    count = points.shape[0]
    current = points
    while count < m:
        if current.shape[0] == 1:
            out.append(np.repeat(current, m - count, axis=0))
            break
        Z = linkage(current, method="single", metric="euclidean")
        members = [[i] for i in range(current.shape[0])]
        added = []
        for a, b, _, _ in Z:
            merged = members[int(a)] + members[int(b)]
            members.append(merged)
            added.append(current[merged].mean(axis=0))
            count += 1
            if count == m:
                break
        added = np.array(added)
        out.append(added)
        current = np.concatenate([current, added])
    return np.concatenate(out)


def resample_frame(points: np.ndarray, m: int, seed=0) -> np.ndarray:
    """Return exactly ``m`` points summarizing ``points``.

    Downsampling keeps the K-means centroids (K = m); upsampling adds
    agglomerative merge centroids. Input order does not affect the result.
    """
    if m < 1:
        raise ValueError("target point count must be >= 1")
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if points.shape[0] == 0:
        raise ValueError("cannot resample an empty frame")
    if points.shape[0] == m:
        return points.copy()
    points = _canonical(points)
    if points.shape[0] > m:
        return kmeans(points, m, np.random.default_rng(seed))
    return ahc_upsample(points, m)


def resample_sample(sample: GestureSample, cfg: PreprocessConfig = PreprocessConfig(), seed: int = 0) -> GestureSample:
    """Divide into ``cfg.frames`` frames and resample each to equal size."""
    divided = divide_frames(sample, cfg.frames)
    m = cfg.points_per_frame
    frames = [
        resample_frame(f.points, m, np.random.SeedSequence([seed, f.index]))
        for f in divided.frames
    ]
    return GestureSample.from_frames(frames, label=sample.label, meta=dict(sample.meta))


def preprocess(sample: GestureSample, cfg: PreprocessConfig = PreprocessConfig(), seed: int = 0) -> GestureSample:
    """Full pipeline: pose normalization, frame division, point resampling."""
    return resample_sample(normalize_pose(sample, cfg), cfg, seed)


def augment(sample: GestureSample, cfg: AugmentConfig, rng: np.random.Generator) -> GestureSample:
    """Translate, scale about the centroid, jitter, then shuffle storage order.

    The drawn translation and scale are recorded in ``meta["augment"]``.
    """
    pts = sample.points
    n = pts.shape[0]
    t = rng.uniform(-cfg.max_translation, cfg.max_translation, size=3)
    s = rng.uniform(cfg.scale_min, cfg.scale_max)
    jitter = np.clip(rng.normal(0.0, cfg.jitter_sigma, size=(n, 3)), -cfg.jitter_clip, cfg.jitter_clip)

    pts = pts + t
    if s != 1.0:
        c = pts.mean(axis=0)
        pts = c + s * (pts - c)
    pts = pts + jitter
    ids = sample.frame_ids
    if cfg.shuffle:
        perm = rng.permutation(n)
        order = perm[np.argsort(ids[perm], kind="stable")]
        pts, ids = pts[order], ids[order]
    out = sample.replace(points=pts, frame_ids=ids)
    out.meta["augment"] = {"translation": t.tolist(), "scale": float(s)}
    return out
