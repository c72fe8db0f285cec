import math

import numpy as np
import pytest

from tesla_rapture.core import GestureSample
from tesla_rapture.graph import (
    FeatureRow,
    GraphConfig,
    knn_oracle,
    masked_distance,
    minmax_normalize,
    scale_temporal,
    temporal_knn,
)

from conftest import random_sample, shuffled


def same_graph(a, b):
    return (
        np.array_equal(a.src, b.src)
        and np.array_equal(a.dst, b.dst)
        and np.array_equal(a.distance, b.distance)
    )


class TestNormalization:
    def test_constant_column(self):
        out = minmax_normalize(np.array([[1.0, 5], [2, 5], [3, 5]]))
        assert np.array_equal(out[:, 1], [0, 0, 0])

    def test_two_points(self):
        assert minmax_normalize(np.array([[0.0], [2.0]]))[:, 0].tolist() == [0.0, 1.0]

    def test_against_per_column_recomputation(self, rng):
        x = rng.normal(size=(64, 4))
        out = minmax_normalize(x)
        assert out.min() >= 0 and out.max() <= 1
        for d in range(4):
            col = x[:, d].tolist()
            lo, hi = min(col), max(col)
            assert out[:, d].tolist() == [(v - lo) / (hi - lo) for v in col]

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            minmax_normalize(np.array([[np.inf, 0, 0, 0]]))

    def test_scale_temporal(self, rng):
        x = rng.uniform(size=(10, 4))
        assert not scale_temporal(x, 0.0)[:, 3].any()
        assert np.array_equal(scale_temporal(x, 1.0), x)
        out = scale_temporal(x, 7.0)
        assert np.array_equal(out[:, :3], x[:, :3])


class TestMaskedDistance:
    def test_later_frame_masked(self):
        a = FeatureRow((0, 0, 0), 0.0, 1, 0)
        b = FeatureRow((0, 0, 0), 0.0, 2, 1)
        assert masked_distance(a, b) == math.inf

    def test_three_four_five(self):
        a = FeatureRow((0, 0, 0), 0.2, 1, 0)
        b = FeatureRow((0.3, 0.4, 0), 0.2, 1, 1)
        assert masked_distance(a, b) == pytest.approx(0.5, abs=1e-15)

    def test_matches_direct_norm(self, rng):
        for _ in range(200):
            u, v = rng.uniform(size=4), rng.uniform(size=4)
            a = FeatureRow(tuple(u[:3]), u[3], 3, 0)
            b = FeatureRow(tuple(v[:3]), v[3], 2, 1)
            assert masked_distance(a, b) == pytest.approx(np.linalg.norm(u - v), rel=1e-14)


class TestTemporalKnn:
    def test_single_point(self):
        g = temporal_knn(GestureSample(np.zeros((1, 3)), [0]), GraphConfig(4, 1))
        assert g.src.size == 0

    def test_two_frames_one_point_each(self):
        s = GestureSample([[0.0, 0, 0], [1.0, 1, 1]], [0, 1])
        g = temporal_knn(s, GraphConfig(1, 10))
        assert list(zip(g.src, g.dst)) == [(0, 1)]

    def test_matches_oracle(self, rng):
        s = random_sample(rng, n=64, frames=8)
        cfg = GraphConfig(4, 10)
        assert same_graph(temporal_knn(s, cfg), knn_oracle(s, cfg))

    def test_single_frame_complete_digraph(self, rng):
        s = random_sample(rng, n=7, frames=1)
        g = knn_oracle(s, GraphConfig(6, 3))
        assert g.edge_set() == {(i, j) for i in range(7) for j in range(7) if i != j}
        assert same_graph(g, temporal_knn(s, GraphConfig(9, 3)))

    def test_alpha_zero_is_masked_spatial_knn(self, rng):
        s = random_sample(rng, n=30, frames=4)
        g = temporal_knn(s, GraphConfig(3, 0))
        feats = minmax_normalize(np.column_stack([s.points, s.frame_ids]))[:, :3]
        for i, nbrs in enumerate(g.neighbor_lists()):
            ok = [j for j in range(30) if j != i and s.frame_ids[j] <= s.frame_ids[i]]
            d = {j: np.linalg.norm(feats[i] - feats[j]) for j in ok}
            best = sorted(ok, key=lambda j: d[j])[: len(nbrs)]
            assert sorted(d[j] for j in nbrs) == pytest.approx(sorted(d[j] for j in best))

    def test_invariants(self, rng):
        for _ in range(50):
            s = random_sample(rng)
            k = int(rng.integers(1, 9))
            g = temporal_knn(s, GraphConfig(k, float(rng.choice([0, 1, 10, 100]))))
            assert not np.any(g.src == g.dst)
            assert np.all(s.frame_ids[g.src] <= s.frame_ids[g.dst])
            assert g.in_degree.max(initial=0) <= k
            cand = np.array([np.sum(s.frame_ids <= s.frame_ids[i]) - 1 for i in range(s.n_points)])
            assert np.array_equal(g.in_degree, np.minimum(cand, k))

    def test_permutation_maps_edges(self, rng):
        for _ in range(30):
            s = random_sample(rng)
            t, order = shuffled(s, rng)
            cfg = GraphConfig(int(rng.integers(1, 9)), 10.0)
            a, b = temporal_knn(s, cfg), temporal_knn(t, cfg)
            assert {(order[i], order[j]) for i, j in b.edge_set()} == a.edge_set()

    def test_large_alpha_prefers_nearest_earlier_frame(self, rng):
        # one point per populated frame: the admissible candidates are all
        # earlier, and alpha=100 makes the nearest populated one win
        for _ in range(20):
            frames = np.sort(rng.choice(20, size=8, replace=False))
            s = GestureSample(rng.uniform(size=(8, 3)), frames, 20)
            g = temporal_knn(s, GraphConfig(1, 100))
            for src, dst in zip(g.src, g.dst):
                assert src == dst - 1

    def test_alpha_increases_adjacent_frame_edges(self, rng):
        fractions = []
        for alpha in (0, 1, 10, 100):
            tot = hit = 0
            r = np.random.default_rng(3)
            for _ in range(20):
                s = random_sample(r, n=80, frames=8)
                g = temporal_knn(s, GraphConfig(4, alpha))
                gap = s.frame_ids[g.dst] - s.frame_ids[g.src]
                tot += gap.size
                hit += np.sum(gap <= 1)
            fractions.append(hit / tot)
        assert fractions == sorted(fractions)

    def test_dump_csv(self, tmp_path):
        s = GestureSample([[0.0, 0, 0], [1.0, 1, 1]], [0, 1])
        temporal_knn(s, GraphConfig(1, 1)).dump_csv(tmp_path / "e.csv")
        lines = (tmp_path / "e.csv").read_text().splitlines()
        assert lines[0] == "src,dst,distance" and lines[1].startswith("0,1,")


def test_oracle_equivalence_sweep(rng):
    for _ in range(100):
        s = random_sample(rng, n=int(rng.integers(1, 129)))
        cfg = GraphConfig(int(rng.integers(1, 9)), float(rng.choice([0, 1, 10, 100])))
        assert same_graph(temporal_knn(s, cfg), knn_oracle(s, cfg))


def test_oracle_handles_duplicate_points(rng):
    pts = np.repeat(rng.normal(size=(5, 3)), 3, axis=0)
    s = GestureSample(pts, np.sort(rng.integers(0, 3, 15)), 3)
    cfg = GraphConfig(4, 1)
    assert same_graph(temporal_knn(s, cfg), knn_oracle(s, cfg))
