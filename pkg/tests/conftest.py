import sys

import numpy as np
import pytest

from tesla_rapture.core import GestureSample


def random_sample(rng, n=None, frames=None, scale=1.0):
    """Random gesture with every frame index drawn uniformly."""
    n = n or int(rng.integers(1, 64))
    frames = frames or int(rng.integers(1, 9))
    ids = np.sort(rng.integers(0, frames, n))
    return GestureSample(rng.normal(scale=scale, size=(n, 3)), ids, frames)


def shuffled(sample, rng):
    """Same gesture with point storage order permuted within frames."""
    perm = rng.permutation(sample.n_points)
    order = perm[np.argsort(sample.frame_ids[perm], kind="stable")]
    return sample.replace(points=sample.points[order], frame_ids=sample.frame_ids[order]), order


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
