import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tesla_rapture.core import GestureSample, save_sample
from tesla_rapture.net import init_params, tiny_config
from tesla_rapture.preprocess import PreprocessConfig
from tesla_rapture.stream import (
    SegmenterState,
    StreamConfig,
    read_stream,
    replay_source,
    segment_stream,
    segmenter_step,
    stream_recognize,
    write_event_log,
    write_stream,
)


def frames_of(sizes, rng=None):
    rng = rng or np.random.default_rng(0)
    return [rng.normal(size=(n, 3)) for n in sizes]


class TestSegmenter:
    def test_scripted_two_active_then_delimiter(self):
        frames = frames_of([5, 5] + [2] * 10 + [5])
        state, events = SegmenterState(), []
        for i, f in enumerate(frames):
            state, ev = segmenter_step(state, f)
            if ev:
                events.append((i, ev))
        assert len(events) == 1
        i, ev = events[0]
        assert i == 12 and ev.frame_span == (0, 1) and len(ev.frames) == 2
        assert ev.frames[0] is not None and np.array_equal(ev.frames[1], frames[1])
        # the triggering active frame opens the next buffer
        assert len(state.buffer) == 1 and state.buffer[0][0] == 12

    def test_single_active_frame_never_fires(self):
        assert list(segment_stream(frames_of([5] + [0] * 20))) == []

    def test_all_active_never_fires(self):
        state = SegmenterState()
        for f in frames_of([4] * 50):
            state, ev = segmenter_step(state, f)
            assert ev is None and state.idle_count == 0
        assert len(state.buffer) == 50

    def test_nine_idle_frames_do_not_delimit(self):
        assert list(segment_stream(frames_of([5, 5] + [0] * 9 + [5]))) == []

    def test_idle_threshold_is_inclusive(self):
        state, _ = segmenter_step(SegmenterState(), np.zeros((3, 3)))
        assert state.idle_count == 1 and state.buffer == ()
        state, _ = segmenter_step(SegmenterState(), np.zeros((4, 3)))
        assert state.idle_count == 0 and len(state.buffer) == 1

    def test_step_is_pure(self):
        s0 = SegmenterState()
        a = segmenter_step(s0, np.ones((5, 3)))
        b = segmenter_step(s0, np.ones((5, 3)))
        assert a[0].frame_counter == b[0].frame_counter == 1 and s0.buffer == ()


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 8), max_size=120))
def test_segmenter_invariants(sizes):
    cfg = StreamConfig()
    frames = frames_of(sizes)
    events = list(segment_stream(frames, cfg))
    again = list(segment_stream(frames, cfg))
    assert [(e.frame_span, e.trigger_frame) for e in events] == [(e.frame_span, e.trigger_frame) for e in again]
    last_trigger = -1
    for ev in events:
        assert len(ev.frames) >= cfg.min_frames
        assert all(f.shape[0] > cfg.idle_frame_threshold for f in ev.frames)
        # a run of delimiter idle frames precedes every trigger
        run = sizes[ev.trigger_frame - cfg.idle_frame_delimiter : ev.trigger_frame]
        assert len(run) == cfg.idle_frame_delimiter and max(run) <= cfg.idle_frame_threshold
        assert ev.trigger_frame > last_trigger
        last_trigger = ev.trigger_frame


class TestReplay:
    def test_stream_file_round_trip(self, tmp_path):
        frames = frames_of([3, 0, 5, 0, 0, 1])
        write_stream(frames, tmp_path / "s.csv")
        back = read_stream(tmp_path / "s.csv")
        assert len(back) == 6
        assert all(np.array_equal(a, b) for a, b in zip(frames, back))

    def test_stream_file_yields_n_frames_in_order(self, tmp_path):
        frames = frames_of([4, 0, 2, 7])
        write_stream(frames, tmp_path / "s.csv")
        out = list(replay_source([tmp_path / "s.csv"]))
        assert [f.shape[0] for f in out] == [4, 0, 2, 7]

    def test_sample_files_and_padding(self, tmp_path):
        s = GestureSample.from_frames(frames_of([5, 6, 7]))
        save_sample(s, tmp_path / "a.csv")
        out = list(replay_source([tmp_path / "a.csv", s], idle_padding=2))
        assert [f.shape[0] for f in out] == [5, 6, 7, 0, 0, 5, 6, 7, 0, 0]

    def test_padding_30_gives_two_events(self):
        g = [GestureSample.from_frames(frames_of([6] * 8)) for _ in range(2)]
        events = list(segment_stream(replay_source(g, idle_padding=30)))
        assert [e.frame_span for e in events] == [(0, 7), (38, 45)]

    def test_paced_replay(self):
        import time
        g = GestureSample.from_frames(frames_of([4] * 4))
        t0 = time.monotonic()
        list(replay_source([g], fps=100, fast_forward=False))
        assert time.monotonic() - t0 >= 0.025


class TestRecognize:
    def params(self, classes=3):
        return init_params(tiny_config(num_classes=classes), seed=0)

    def test_pure_idle_stream(self):
        frames = frames_of([0, 1, 2, 3] * 50)
        assert stream_recognize(frames, self.params()) == []

    def test_event_per_gesture(self):
        g = [GestureSample.from_frames(frames_of([8] * 8, np.random.default_rng(i))) for i in range(3)]
        pcfg = PreprocessConfig(frames=4, points=16)
        events = stream_recognize(replay_source(g, idle_padding=12), self.params(), pcfg=pcfg)
        assert [e.kind for e in events] == ["recognition"] * 3
        assert all(abs(sum(e.scores) - 1) < 1e-12 and e.latency_s >= 0 for e in events)

    def test_no_gesture_class_rejects(self):
        params = self.params()
        params.tensors["cls2.b"][:] = [0.0, 0.0, 50.0]
        g = GestureSample.from_frames(frames_of([8] * 8))
        events = stream_recognize(
            replay_source([g], idle_padding=12), params, StreamConfig(no_gesture_class=2),
            PreprocessConfig(frames=4, points=16),
        )
        assert [e.kind for e in events] == ["rejection"] and events[0].label == 2

    def test_no_gesture_class_out_of_range(self):
        with pytest.raises(ValueError):
            stream_recognize([], self.params(), StreamConfig(no_gesture_class=5))

    def test_event_log_is_deterministic_without_timing(self, tmp_path):
        g = GestureSample.from_frames(frames_of([8] * 8))
        pcfg = PreprocessConfig(frames=4, points=16)
        for name in ("a", "b"):
            ev = stream_recognize(replay_source([g], idle_padding=11), self.params(), pcfg=pcfg)
            write_event_log(ev, tmp_path / name, with_timing=False)
        assert (tmp_path / "a").read_bytes() == (tmp_path / "b").read_bytes()
        doc = json.loads((tmp_path / "a").read_text().splitlines()[0])
        assert set(doc) == {"kind", "label", "scores", "frame_span"}
