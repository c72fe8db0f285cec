"""Gesture samples, on-disk formats, and the synthetic gesture generator.

A gesture is stored as a flat ``(n, 3)`` coordinate array plus a parallel
array of frame indices, sorted by frame. Axis convention: ``y`` is the radar
boresight, ``x`` is lateral and ``z`` is vertical.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple, Optional

import numpy as np

GESTURE_CLASSES = (
    "swipe-left",
    "swipe-right",
    "swipe-up",
    "swipe-down",
    "push",
    "pull",
    "circle-cw",
    "circle-ccw",
)

SPLITS = ("train", "validation", "test")

SAMPLE_HEADER = ["frame", "x", "y", "z"]
MANIFEST_HEADER = ["path", "label", "split"]


class LoadError(Exception):
    """Base class for dataset loading failures."""


class MissingFileError(LoadError):
    pass


class MalformedRowError(LoadError):
    pass


class UnknownLabelError(LoadError):
    pass


class EmptySampleError(LoadError):
    pass


class FrameRangeError(LoadError):
    pass


class RadarPoint(NamedTuple):
    x: float
    y: float
    z: float
    frame: int


@dataclass(frozen=True)
class Frame:
    index: int
    points: np.ndarray  # (p, 3), possibly empty


@dataclass
class GestureSample:
    """One gesture: points sorted by frame, with per-point frame indices.

    ``num_frames`` is the declared frame count; trailing or interior frames
    may be empty, but the sample as a whole must hold at least one point.
    """

    points: np.ndarray
    frame_ids: np.ndarray
    num_frames: int = -1
    label: Optional[int] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.points = np.ascontiguousarray(self.points, dtype=np.float64).reshape(-1, 3)
        self.frame_ids = np.ascontiguousarray(self.frame_ids, dtype=np.int64).reshape(-1)
        if self.num_frames < 0:
            self.num_frames = int(self.frame_ids.max()) + 1 if self.frame_ids.size else 0
        self.validate()

    def validate(self) -> None:
        n = self.points.shape[0]
        if self.frame_ids.shape[0] != n:
            raise ValueError("points and frame_ids differ in length")
        if n == 0:
            raise EmptySampleError("gesture sample contains no points")
        if not np.all(np.isfinite(self.points)):
            raise ValueError("non-finite coordinate in gesture sample")
        if self.frame_ids.min() < 0 or self.frame_ids.max() >= self.num_frames:
            raise FrameRangeError(
                f"frame index outside [0, {self.num_frames}) in gesture sample"
            )
        if np.any(np.diff(self.frame_ids) < 0):
            raise ValueError("points must be ordered by non-decreasing frame index")

    @classmethod
    def from_points(cls, points: Iterable[RadarPoint], **kwargs) -> "GestureSample":
        pts = list(points)
        order = sorted(range(len(pts)), key=lambda i: pts[i].frame)
        xyz = np.array([[pts[i].x, pts[i].y, pts[i].z] for i in order], dtype=np.float64)
        fr = np.array([pts[i].frame for i in order], dtype=np.int64)
        return cls(xyz, fr, **kwargs)

    @classmethod
    def from_frames(cls, frames: Iterable[np.ndarray], **kwargs) -> "GestureSample":
        """Build a sample from a list of per-frame ``(p, 3)`` arrays."""
        frames = [np.asarray(f, dtype=np.float64).reshape(-1, 3) for f in frames]
        ids = np.concatenate([np.full(len(f), i, dtype=np.int64) for i, f in enumerate(frames)])
        kwargs.setdefault("num_frames", len(frames))
        return cls(np.concatenate(frames), ids, **kwargs)

    @property
    def n_points(self) -> int:
        return self.points.shape[0]

    @property
    def frames(self) -> list[Frame]:
        bounds = np.searchsorted(self.frame_ids, np.arange(self.num_frames + 1))
        return [
            Frame(i, self.points[bounds[i] : bounds[i + 1]]) for i in range(self.num_frames)
        ]

    def iter_points(self) -> Iterator[RadarPoint]:
        for (x, y, z), f in zip(self.points.tolist(), self.frame_ids.tolist()):
            yield RadarPoint(x, y, z, f)

    def replace(self, points=None, frame_ids=None, num_frames=None) -> "GestureSample":
        return GestureSample(
            self.points if points is None else points,
            self.frame_ids if frame_ids is None else frame_ids,
            self.num_frames if num_frames is None else num_frames,
            self.label,
            dict(self.meta),
        )

    def equals(self, other: "GestureSample") -> bool:
        return (
            self.num_frames == other.num_frames
            and self.label == other.label
            and np.array_equal(self.frame_ids, other.frame_ids)
            and np.array_equal(self.points, other.points)
        )


# --------------------------------------------------------------------------
# sample and manifest files


def save_sample(sample: GestureSample, path) -> None:
    """Write ``sample`` as ``frame,x,y,z`` CSV in (frame, storage) order."""
    lines = [",".join(SAMPLE_HEADER)]
    for (x, y, z), f in zip(sample.points.tolist(), sample.frame_ids.tolist()):
        # repr() is the shortest string that round-trips a double
        lines.append(f"{f},{x!r},{y!r},{z!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def _parse_sample_rows(rows, where: str, num_frames: Optional[int]) -> GestureSample:
    frames, coords = [], []
    for lineno, row in rows:
        if len(row) != 4:
            raise MalformedRowError(f"{where}:{lineno}: expected 4 fields, got {len(row)}")
        try:
            f = int(row[0])
            xyz = [float(v) for v in row[1:]]
        except ValueError as exc:
            raise MalformedRowError(f"{where}:{lineno}: {exc}") from None
        if f < 0 or not all(math.isfinite(v) for v in xyz):
            raise MalformedRowError(f"{where}:{lineno}: invalid point {row}")
        if frames and f < frames[-1]:
            raise MalformedRowError(f"{where}:{lineno}: frame index decreases")
        if num_frames is not None and f >= num_frames:
            raise FrameRangeError(
                f"{where}:{lineno}: frame index {f} exceeds declared {num_frames} frames"
            )
        frames.append(f)
        coords.append(xyz)
    if not frames:
        raise EmptySampleError(f"{where}: sample has no points")
    nf = num_frames if num_frames is not None else frames[-1] + 1
    return GestureSample(np.array(coords), np.array(frames), nf)


def load_sample(path, num_frames: Optional[int] = None, label: Optional[int] = None) -> GestureSample:
    path = Path(path)
    if not path.is_file():
        raise MissingFileError(f"sample file not found: {path}")
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != SAMPLE_HEADER:
            raise MalformedRowError(f"{path}:1: expected header {','.join(SAMPLE_HEADER)}")
        rows = [(i, r) for i, r in enumerate(reader, start=2) if r]
    sample = _parse_sample_rows(rows, str(path), num_frames)
    sample.label = label
    sample.meta["source"] = str(path)
    return sample


def read_classes(path) -> list[str]:
    path = Path(path)
    if not path.is_file():
        raise MissingFileError(f"class table not found: {path}")
    return [ln.strip() for ln in path.read_text().splitlines() if ln.strip()]


def load_dataset(manifest_path) -> dict[str, list[GestureSample]]:
    """Load every sample listed in a ``path,label,split`` manifest.

    Paths are relative to the manifest's directory and labels are resolved
    through the neighbouring ``classes.txt``. An optional fourth column
    ``frames`` declares the sample's frame count.
    """
    manifest_path = Path(manifest_path)
    if not manifest_path.is_file():
        raise MissingFileError(f"manifest not found: {manifest_path}")
    root = manifest_path.parent
    classes = read_classes(root / "classes.txt")
    index = {name: i for i, name in enumerate(classes)}
    dataset: dict[str, list[GestureSample]] = {s: [] for s in SPLITS}
    seen: dict[str, str] = {}
    with manifest_path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return dataset
        if header[:3] != MANIFEST_HEADER or len(header) > 4:
            raise MalformedRowError(f"{manifest_path}:1: bad manifest header {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            where = f"{manifest_path}:{lineno}"
            if len(row) != len(header):
                raise MalformedRowError(f"{where}: expected {len(header)} fields")
            rel, label, split = row[:3]
            if split not in dataset:
                raise MalformedRowError(f"{where}: unknown split {split!r}")
            if label not in index:
                raise UnknownLabelError(f"{where}: label {label!r} not in class table")
            if seen.setdefault(rel, split) != split:
                raise MalformedRowError(f"{where}: {rel} appears in two splits")
            num_frames = None
            if len(row) == 4:
                try:
                    num_frames = int(row[3])
                except ValueError:
                    raise MalformedRowError(f"{where}: bad frame count {row[3]!r}") from None
            try:
                sample = load_sample(root / rel, num_frames, index[label])
            except LoadError as exc:
                raise type(exc)(f"{where}: {exc}") from None
            dataset[split].append(sample)
    return dataset


def save_dataset(
    splits: dict[str, list[GestureSample]], out_dir, classes: list[str]
) -> Path:
    """Write samples, ``manifest.csv`` and ``classes.txt`` under ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "classes.txt").write_text("".join(c + "\n" for c in classes))
    rows = [",".join(MANIFEST_HEADER + ["frames"])]
    for split in SPLITS:
        samples = splits.get(split, [])
        if samples:
            (out_dir / split).mkdir(exist_ok=True)
        for i, s in enumerate(samples):
            rel = f"{split}/{i:05d}.csv"
            save_sample(s, out_dir / rel)
            rows.append(f"{rel},{classes[s.label]},{split},{s.num_frames}")
    manifest = out_dir / "manifest.csv"
    manifest.write_text("\n".join(rows) + "\n")
    return manifest


# --------------------------------------------------------------------------
# synthetic gestures


@dataclass(frozen=True)
class SyntheticSpec:
    classes: tuple = GESTURE_CLASSES
    frames: int = 24
    points_min: int = 5
    points_max: int = 10
    noise_sigma: float = 0.05
    samples_per_class: int = 50
    seed: int = 0

    def __post_init__(self):
        unknown = set(self.classes) - set(GESTURE_CLASSES) - {"no-gesture"}
        if unknown:
            raise ValueError(f"unknown gesture classes: {sorted(unknown)}")
        if self.points_min < 1 or self.points_max < self.points_min:
            raise ValueError("need 1 <= points_min <= points_max")
        if self.frames < 2:
            raise ValueError("need at least 2 frames per gesture")
        if self.noise_sigma < 0 or self.samples_per_class < 0:
            raise ValueError("noise_sigma and samples_per_class must be non-negative")


# each mirrored class is generated as its partner with x negated
_MIRRORED = {"swipe-right": "swipe-left", "circle-ccw": "circle-cw"}


def _centroid_path(name: str, u: np.ndarray, amp: float) -> np.ndarray:
    """Centroid offsets for motion parameter ``u`` running from -1 to 1."""
    path = np.zeros((u.size, 3))
    half = 0.5 * amp
    if name == "swipe-left":
        path[:, 0] = -half * u
    elif name == "swipe-up":
        path[:, 2] = half * u
    elif name == "swipe-down":
        path[:, 2] = -half * u
    elif name == "push":
        path[:, 1] = half * u
    elif name == "pull":
        path[:, 1] = -half * u
    elif name == "circle-cw":
        # clockwise as seen by the radar, starting at the top of the circle
        phi = np.pi * (u + 1.0)
        path[:, 0] = half * np.sin(phi)
        path[:, 2] = half * np.cos(phi)
    else:
        raise ValueError(name)
    return path


def synth_sample(name: str, spec: SyntheticSpec, rng: np.random.Generator, label=None) -> GestureSample:
    """Draw one gesture of class ``name`` from ``rng``.

    The draws consumed from ``rng`` do not depend on ``name``, so two classes
    generated from identically seeded generators share pose, counts and scatter.
    """
    rng_range = rng.uniform(1.0, 2.0)
    azimuth = rng.uniform(-np.pi / 6, np.pi / 6)
    height = rng.uniform(-0.2, 0.2)
    amp = rng.uniform(0.3, 0.5)
    counts = rng.integers(spec.points_min, spec.points_max + 1, size=spec.frames)
    scatter = rng.normal(0.0, spec.noise_sigma, size=(int(counts.sum()), 3))
    wander = rng.normal(0.0, 0.05, size=(spec.frames, 3))

    base = np.array([rng_range * np.sin(azimuth), rng_range * np.cos(azimuth), height])
    if name == "no-gesture":
        # random walk of the centroid, no class-specific trajectory
        path = np.cumsum(wander, axis=0)
        path -= path.mean(axis=0)
    else:
        u = np.linspace(-1.0, 1.0, spec.frames)
        path = _centroid_path(_MIRRORED.get(name, name), u, amp)
    frame_ids = np.repeat(np.arange(spec.frames), counts)
    points = base + path[frame_ids] + scatter
    if name in _MIRRORED:
        points[:, 0] = -points[:, 0]
    return GestureSample(points, frame_ids, spec.frames, label, {"source": "synthetic", "class": name})


def sample_rng(seed: int, class_index: int, sample_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, class_index, sample_index]))


def synth_generate(spec: SyntheticSpec) -> list[GestureSample]:
    """Generate ``samples_per_class`` gestures for every class, class-major.

    Labels index into ``spec.classes``. Every sample has its own RNG substream
    keyed on (seed, class, index), so it is reproducible in isolation.
    """
    out = []
    for ci, name in enumerate(spec.classes):
        for si in range(spec.samples_per_class):
            s = synth_sample(name, spec, sample_rng(spec.seed, GESTURE_CLASSES.index(name)
                                                   if name in GESTURE_CLASSES else len(GESTURE_CLASSES), si), ci)
            s.meta["index"] = si
            out.append(s)
    return out


def split_samples(samples: list[GestureSample], sizes: tuple, seed: int = 0) -> dict[str, list[GestureSample]]:
    """Deterministically shuffle and cut ``samples`` into train/validation/test."""
    if sum(sizes) > len(samples):
        raise ValueError(f"requested {sum(sizes)} samples, only {len(samples)} available")
    order = np.random.default_rng(seed).permutation(len(samples))
    out, start = {}, 0
    for split, size in zip(SPLITS, sizes):
        out[split] = [samples[i] for i in order[start : start + size]]
        start += size
    return out
