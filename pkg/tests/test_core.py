import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tesla_rapture.core import (
    EmptySampleError,
    FrameRangeError,
    GESTURE_CLASSES,
    GestureSample,
    MalformedRowError,
    MissingFileError,
    RadarPoint,
    SyntheticSpec,
    UnknownLabelError,
    load_dataset,
    load_sample,
    sample_rng,
    save_dataset,
    save_sample,
    split_samples,
    synth_generate,
    synth_sample,
)

from conftest import random_sample


def _write(path, text):
    path.write_text(text)
    return path


class TestSampleFile:
    def test_minimal_file(self, tmp_path):
        s = GestureSample(np.zeros((1, 3)), [0])
        save_sample(s, tmp_path / "a.csv")
        assert (tmp_path / "a.csv").read_text() == "frame,x,y,z\n0,0.0,0.0,0.0\n"

    def test_rows_in_frame_then_storage_order(self, tmp_path):
        pts = [RadarPoint(3.0, 0, 0, 1), RadarPoint(1.0, 0, 0, 0), RadarPoint(2.0, 0, 0, 1)]
        save_sample(GestureSample.from_points(pts), tmp_path / "a.csv")
        rows = (tmp_path / "a.csv").read_text().splitlines()[1:]
        assert [r.split(",")[:2] for r in rows] == [["0", "1.0"], ["1", "3.0"], ["1", "2.0"]]

    def test_round_trip_is_bit_exact(self, tmp_path, rng):
        for i in range(100):
            s = random_sample(rng, scale=10 ** rng.uniform(-6, 3))
            p = tmp_path / f"{i}.csv"
            save_sample(s, p)
            back = load_sample(p, s.num_frames)
            assert back.equals(s)

    def test_double_round_trip_is_byte_identical(self, tmp_path, rng):
        for i in range(20):
            s = random_sample(rng)
            save_sample(s, tmp_path / "a.csv")
            save_sample(load_sample(tmp_path / "a.csv"), tmp_path / "b.csv")
            assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_frame_beyond_declared_count(self, tmp_path):
        p = _write(tmp_path / "s.csv", "frame,x,y,z\n0,0,0,0\n7,1,1,1\n")
        with pytest.raises(FrameRangeError, match=r"s.csv:3"):
            load_sample(p, num_frames=4)

    @pytest.mark.parametrize("body", ["0,1,2\n", "0,a,0,0\n", "1,0,0,0\n0,0,0,0\n", "0,nan,0,0\n"])
    def test_malformed_rows(self, tmp_path, body):
        p = _write(tmp_path / "s.csv", "frame,x,y,z\n" + body)
        with pytest.raises(MalformedRowError):
            load_sample(p)

    def test_empty_sample(self, tmp_path):
        with pytest.raises(EmptySampleError):
            load_sample(_write(tmp_path / "s.csv", "frame,x,y,z\n"))

    def test_empty_frames_are_legal(self):
        s = GestureSample.from_frames([np.zeros((0, 3)), np.ones((2, 3)), np.zeros((0, 3))])
        assert s.num_frames == 3
        assert [len(f.points) for f in s.frames] == [0, 2, 0]


class TestManifest:
    def _dataset(self, tmp_path, rows, classes=("a", "b")):
        (tmp_path / "classes.txt").write_text("\n".join(classes) + "\n")
        return _write(tmp_path / "manifest.csv", "path,label,split\n" + "".join(r + "\n" for r in rows))

    def test_empty_manifest(self, tmp_path):
        data = load_dataset(self._dataset(tmp_path, []))
        assert all(v == [] for v in data.values())

    def test_labels_resolved_by_line_number(self, tmp_path):
        save_sample(GestureSample(np.ones((2, 3)), [0, 1]), tmp_path / "x.csv")
        data = load_dataset(self._dataset(tmp_path, ["x.csv,b,test"]))
        assert data["test"][0].label == 1

    def test_declared_frames_violation_names_row(self, tmp_path):
        _write(tmp_path / "x.csv", "frame,x,y,z\n0,0,0,0\n7,0,0,1\n")
        (tmp_path / "classes.txt").write_text("a\n")
        m = _write(tmp_path / "manifest.csv", "path,label,split,frames\nx.csv,a,train,4\n")
        with pytest.raises(FrameRangeError, match=r"manifest.csv:2"):
            load_dataset(m)

    def test_unknown_label(self, tmp_path):
        save_sample(GestureSample(np.ones((1, 3)), [0]), tmp_path / "x.csv")
        with pytest.raises(UnknownLabelError, match="manifest.csv:2"):
            load_dataset(self._dataset(tmp_path, ["x.csv,zzz,train"]))

    def test_missing_sample_file(self, tmp_path):
        with pytest.raises(MissingFileError, match="nope.csv"):
            load_dataset(self._dataset(tmp_path, ["nope.csv,a,train"]))

    def test_path_in_two_splits(self, tmp_path):
        save_sample(GestureSample(np.ones((1, 3)), [0]), tmp_path / "x.csv")
        with pytest.raises(MalformedRowError, match="two splits"):
            load_dataset(self._dataset(tmp_path, ["x.csv,a,train", "x.csv,a,test"]))

    def test_row_order_does_not_matter(self, tmp_path, rng):
        spec = SyntheticSpec(classes=("push", "pull"), samples_per_class=6, seed=3)
        splits = split_samples(synth_generate(spec), (6, 3, 3))
        manifest = save_dataset(splits, tmp_path, list(spec.classes))
        lines = manifest.read_text().splitlines()
        body = lines[1:]
        (tmp_path / "shuffled.csv").write_text("\n".join([lines[0]] + [body[i] for i in rng.permutation(len(body))]) + "\n")
        a, b = load_dataset(manifest), load_dataset(tmp_path / "shuffled.csv")
        for split in a:
            key = lambda s: s.points.tobytes()
            assert sorted(map(key, a[split])) == sorted(map(key, b[split]))


class TestSynthetic:
    def test_seeded_determinism(self):
        spec = SyntheticSpec(samples_per_class=3, seed=11)
        a, b = synth_generate(spec), synth_generate(spec)
        assert all(x.equals(y) for x, y in zip(a, b))

    def test_default_points_per_frame_between_5_and_10(self):
        for s in synth_generate(SyntheticSpec(samples_per_class=5)):
            counts = np.bincount(s.frame_ids, minlength=s.num_frames)
            assert counts.min() >= 5 and counts.max() <= 10

    @pytest.mark.parametrize("left,right", [("swipe-left", "swipe-right"), ("circle-cw", "circle-ccw")])
    def test_mirror_construction(self, left, right):
        spec = SyntheticSpec()
        a = synth_sample(left, spec, sample_rng(0, 0, 0))
        b = synth_sample(right, spec, sample_rng(0, 0, 0))
        np.testing.assert_array_equal(b.points, a.points * [-1, 1, 1])
        np.testing.assert_array_equal(b.frame_ids, a.frame_ids)

    def test_trajectory_axes(self):
        spec = SyntheticSpec(noise_sigma=0.0)
        def motion(name):
            s = synth_sample(name, spec, sample_rng(0, 0, 0))
            c = np.array([f.points.mean(axis=0) for f in s.frames])
            return c[-1] - c[0]
        assert motion("swipe-left")[0] < 0 < motion("swipe-right")[0]
        assert motion("swipe-down")[2] < 0 < motion("swipe-up")[2]
        assert motion("pull")[1] < 0 < motion("push")[1]

    def test_time_collapsed_mirror_pair_is_spatially_confusable(self):
        # swipe-left with x negated is a swipe-right: same point multiset without time
        spec = SyntheticSpec()
        a = synth_sample("swipe-left", spec, sample_rng(0, 0, 5))
        b = synth_sample("swipe-right", spec, sample_rng(0, 0, 5))
        key = lambda p: sorted(map(tuple, p.tolist()))
        assert key(a.points * [-1, 1, 1]) == key(b.points)

    def test_per_sample_substreams(self):
        spec = SyntheticSpec(classes=GESTURE_CLASSES[:2], samples_per_class=4, seed=5)
        full = synth_generate(spec)
        alone = synth_sample("swipe-right", spec, sample_rng(5, 1, 2), 1)
        assert full[4 + 2].equals(alone)

    def test_invalid_spec(self):
        with pytest.raises(ValueError):
            SyntheticSpec(points_min=0)
        with pytest.raises(ValueError):
            SyntheticSpec(frames=1)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31), pmin=st.integers(1, 6), extra=st.integers(0, 6), frames=st.integers(2, 40))
def test_generated_samples_are_valid(seed, pmin, extra, frames):
    spec = SyntheticSpec(frames=frames, points_min=pmin, points_max=pmin + extra, samples_per_class=1, seed=seed)
    for s in synth_generate(spec):
        s.validate()
        counts = np.bincount(s.frame_ids, minlength=frames)
        assert counts.min() >= pmin and counts.max() <= pmin + extra


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 5), st.floats(-1e6, 1e6), st.floats(-1e6, 1e6), st.floats(-1e6, 1e6)), max_size=20))
def test_fuzzed_files_load_or_fail_cleanly(tmp_path_factory, rows):
    p = tmp_path_factory.mktemp("fz") / "s.csv"
    p.write_text("frame,x,y,z\n" + "".join(f"{f},{x!r},{y!r},{z!r}\n" for f, x, y, z in rows))
    try:
        s = load_sample(p)
    except (MalformedRowError, EmptySampleError):
        frames = [r[0] for r in rows]
        assert not rows or frames != sorted(frames)
        return
    s.validate()
    assert s.n_points == len(rows)
