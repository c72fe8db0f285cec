"""
Segmenting a replayed radar stream
==================================

Replays synthetic gestures frame by frame with idle gaps in between, and
prints the gestures the idle-frame segmenter cuts out. Each segment would be
classified by a trained model in a live loop.
"""

import numpy as np

from tesla_rapture.core import SyntheticSpec, synth_generate
from tesla_rapture.stream import StreamConfig, replay_source, segment_stream

gestures = synth_generate(SyntheticSpec(classes=("push", "pull"), samples_per_class=2, seed=3))
frames = list(replay_source(gestures, idle_padding=15))
print(len(frames), "frames,", sum(f.shape[0] == 0 for f in frames), "of them empty")

# a segment closes after 10 frames with at most 3 points
for ev in segment_stream(frames, StreamConfig()):
    n = sum(f.shape[0] for f in ev.frames)
    print(f"gesture frames {ev.frame_span}, {n} points, emitted at frame {ev.trigger_frame}")

# a stream with only sparse clutter never triggers
clutter = [np.zeros((k, 3)) for k in np.random.default_rng(0).integers(0, 4, 300)]
print("events on clutter:", list(segment_stream(clutter)))
