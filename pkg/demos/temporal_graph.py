"""
Temporal neighbours and the alpha trade-off
===========================================

Builds the directed temporal KNN graph of one synthetic swipe and shows how
the temporal weight ``alpha`` moves neighbours between the current frame and
earlier ones. Edges never point backwards in time.
"""

import numpy as np

from tesla_rapture.core import SyntheticSpec, synth_generate
from tesla_rapture.graph import GraphConfig, temporal_knn
from tesla_rapture.preprocess import PreprocessConfig, preprocess

# one swipe, reduced to 16 frames x 16 points
raw = synth_generate(SyntheticSpec(classes=("swipe-left",), samples_per_class=1, seed=0))[0]
sample = preprocess(raw, PreprocessConfig(frames=16, points=256))
print(sample.n_points, "points in", sample.num_frames, "frames")

# frame gap of every edge, as a histogram, for a few alphas; with k=24 and
# 16 points per frame every node needs at least 9 neighbours from the past
for alpha in (0.0, 1.0, 10.0, 100.0):
    g = temporal_knn(sample, GraphConfig(k=24, alpha=alpha))
    gap = sample.frame_ids[g.dst] - sample.frame_ids[g.src]
    assert gap.min() >= 0
    hist = np.bincount(gap, minlength=4)[:4] / gap.size
    print(f"alpha={alpha:>5}: gap 0/1/2/3 fractions {np.round(hist, 3)}  max gap {gap.max()}")

# incoming neighbours of one point in frame 2, nearest first
g = temporal_knn(sample, GraphConfig(k=4, alpha=10.0))
print(f"point 40 (frame {sample.frame_ids[40]}) <-", g.neighbor_lists()[40])
