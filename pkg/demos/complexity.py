"""
Cost of the two presets
=======================

Compares analytic FLOPs and measured forward latency of the ``tesla`` and
``tesla-v`` presets on the same 1024-point gesture. The edge-dependent terms
scale with the neighbour count, so their ratio is exactly k_tesla / k_tesla-v.
"""

import numpy as np

from tesla_rapture.cli import bench
from tesla_rapture.core import SyntheticSpec, synth_generate
from tesla_rapture.net import PRESETS, ModelConfig, init_params
from tesla_rapture.preprocess import PreprocessConfig, preprocess

raw = synth_generate(SyntheticSpec(classes=("circle-cw",), samples_per_class=1, seed=0))[0]
sample = preprocess(raw, PreprocessConfig(frames=16, points=1024))

rows = {}
for name in ("tesla", "tesla-v"):
    cfg = ModelConfig(**PRESETS[name])
    rows[name] = bench(cfg, sample, init_params(cfg), passes=1)
    r = rows[name]
    print(f"{name:8s} k={cfg.k:2d}  flops {r['flops']:>14,}  edge terms {r['edge']:>14,}  "
          f"latency {1e3 * r['latency_b1_s']:.0f} ms")

print("edge-term ratio", rows["tesla"]["edge"] / rows["tesla-v"]["edge"])
print("speed-up", np.round(rows["tesla"]["latency_b1_s"] / rows["tesla-v"]["latency_b1_s"], 2))
