"""Real-time gesture segmentation and recognition over a frame stream.

Frames with at most ``idle_frame_threshold`` points are idle. Active frames
accumulate in a buffer; once at least ``min_frames`` are buffered and
``idle_frame_delimiter`` consecutive idle frames have passed, the arrival of
the next frame hands the buffer to the classifier.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Iterator, Optional

import numpy as np

from .core import GestureSample, MalformedRowError, MissingFileError, load_sample
from .net import ModelParameters, classify_forward, log_softmax
from .preprocess import PreprocessConfig, preprocess


@dataclass(frozen=True)
class StreamConfig:
    min_frames: int = 2
    idle_frame_delimiter: int = 10
    idle_frame_threshold: int = 3
    fps: float = 30.0
    checkpoint: Optional[str] = None
    no_gesture_class: Optional[int] = None

    def __post_init__(self):
        if min(self.min_frames, self.idle_frame_delimiter, self.idle_frame_threshold) < 0:
            raise ValueError("stream thresholds must be non-negative")
        if self.fps <= 0:
            raise ValueError("fps must be positive")


@dataclass(frozen=True)
class SegmenterState:
    buffer: tuple = ()
    idle_count: int = 0
    frame_counter: int = 0


@dataclass
class StreamEvent:
    kind: str  # "recognition", "rejection" or "heartbeat"
    frame_span: tuple  # (first, last) stream frame numbers of the buffered frames
    frames: list = field(default_factory=list, repr=False)
    label: Optional[int] = None
    scores: Optional[list] = None
    timestamp: float = 0.0
    latency_s: float = 0.0
    trigger_frame: int = -1

    def to_json(self, with_timing: bool = True) -> str:
        doc = {
            "kind": self.kind,
            "label": self.label,
            "scores": self.scores,
            "frame_span": list(self.frame_span),
        }
        if with_timing:
            doc["latency_s"] = self.latency_s
        return json.dumps(doc)


def segmenter_step(state: SegmenterState, frame: np.ndarray, cfg: StreamConfig = StreamConfig()):
    """Advance the segmenter by one frame; returns ``(state, event or None)``.

    The emitted event carries the buffered frames (kind ``"segment"``) and has
    not been classified yet.
    """
    frame = np.asarray(frame, dtype=np.float64).reshape(-1, 3)
    event = None
    buffer, idle = state.buffer, state.idle_count
    if len(buffer) >= cfg.min_frames and idle >= cfg.idle_frame_delimiter:
        numbers = [num for num, _ in buffer]
        event = StreamEvent("segment", (numbers[0], numbers[-1]), [f for _, f in buffer],
                            trigger_frame=state.frame_counter)
        buffer, idle = (), 0
    if frame.shape[0] <= cfg.idle_frame_threshold:
        idle += 1
    else:
        idle = 0
        buffer = buffer + ((state.frame_counter, frame),)
    return SegmenterState(buffer, idle, state.frame_counter + 1), event


def segment_stream(frames: Iterable[np.ndarray], cfg: StreamConfig = StreamConfig()) -> Iterator[StreamEvent]:
    state = SegmenterState()
    for frame in frames:
        state, ev = segmenter_step(state, frame, cfg)
        if ev is not None:
            yield ev


# --------------------------------------------------------------------------
# replay


def write_stream(frames: Iterable[np.ndarray], path) -> None:
    """Recorded-stream file: ``frame,x,y,z`` rows, every frame closed by a blank line."""
    parts = ["frame,x,y,z\n"]
    for i, f in enumerate(frames):
        for x, y, z in np.asarray(f).reshape(-1, 3).tolist():
            parts.append(f"{i},{x!r},{y!r},{z!r}\n")
        parts.append("\n")
    Path(path).write_text("".join(parts))


def read_stream(path) -> list[np.ndarray]:
    path = Path(path)
    if not path.is_file():
        raise MissingFileError(f"stream file not found: {path}")
    lines = path.read_text().split("\n")
    if lines[0].strip() != "frame,x,y,z":
        raise MalformedRowError(f"{path}:1: expected header frame,x,y,z")
    body = lines[1:-1] if lines[-1] == "" else lines[1:]
    frames, cur = [], []
    for lineno, line in enumerate(body, start=2):
        if not line.strip():
            frames.append(np.array(cur, dtype=np.float64).reshape(-1, 3))
            cur = []
            continue
        parts = line.split(",")
        if len(parts) != 4:
            raise MalformedRowError(f"{path}:{lineno}: expected 4 fields")
        try:
            cur.append([float(v) for v in parts[1:]])
        except ValueError as exc:
            raise MalformedRowError(f"{path}:{lineno}: {exc}") from None
    if cur:
        frames.append(np.array(cur, dtype=np.float64).reshape(-1, 3))
    return frames


def sample_frames(sample: GestureSample) -> list[np.ndarray]:
    return [f.points for f in sample.frames]


def replay_source(
    sources: Iterable,
    fps: float = 30.0,
    idle_padding: int = 0,
    fast_forward: bool = True,
) -> Iterator[np.ndarray]:
    """Yield frames from samples, sample files or recorded-stream files.

    ``idle_padding`` empty frames follow every source so consecutive gestures
    are separated by a delimiter. Unless ``fast_forward`` is set, frames are
    paced at ``1/fps`` seconds.
    """
    period = 1.0 / fps
    next_t = time.monotonic()

    def pace():
        nonlocal next_t
        if not fast_forward:
            delay = next_t - time.monotonic()
            if delay > 0:
                time.sleep(delay)
            next_t += period

    for src in sources:
        if isinstance(src, GestureSample):
            frames = sample_frames(src)
        else:
            path = Path(src)
            if not path.is_file():
                raise MissingFileError(f"replay source not found: {path}")
            # sample files never contain blank lines; recorded streams do
            is_stream = "\n\n" in path.read_text()
            frames = read_stream(path) if is_stream else sample_frames(load_sample(path))
        for f in frames:
            pace()
            yield f
        for _ in range(idle_padding):
            pace()
            yield np.zeros((0, 3))


# --------------------------------------------------------------------------
# recognition loop


def classify_segment(frames: list[np.ndarray], params: ModelParameters, pcfg: PreprocessConfig) -> np.ndarray:
    sample = GestureSample.from_frames(frames)
    logits, _ = classify_forward(preprocess(sample, pcfg), params.config, params)
    return np.exp(log_softmax(logits))


def stream_recognize(
    source: Iterable[np.ndarray],
    params: ModelParameters,
    cfg: StreamConfig = StreamConfig(),
    pcfg: PreprocessConfig = PreprocessConfig(),
) -> list[StreamEvent]:
    """Segment the stream and classify every emitted gesture in trigger order."""
    c = params.config.num_classes
    if cfg.no_gesture_class is not None and not 0 <= cfg.no_gesture_class < c:
        raise ValueError(f"no-gesture class {cfg.no_gesture_class} outside model's {c} classes")
    events = []
    for seg in segment_stream(source, cfg):
        t0 = time.perf_counter()
        total = sum(f.shape[0] for f in seg.frames)
        if total < pcfg.frames:
            # too few points to divide into frames; treat as non-gesture
            ev = replace(seg, kind="rejection", frames=[])
        else:
            scores = classify_segment(seg.frames, params, pcfg)
            label = int(np.argmax(scores))
            kind = "rejection" if label == cfg.no_gesture_class else "recognition"
            ev = replace(seg, kind=kind, label=label, scores=scores.tolist(), frames=[])
        ev.latency_s = time.perf_counter() - t0
        ev.timestamp = time.time()
        events.append(ev)
    return events


def write_event_log(events: list[StreamEvent], path, with_timing: bool = True) -> None:
    Path(path).write_text("".join(e.to_json(with_timing) + "\n" for e in events))
