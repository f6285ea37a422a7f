import sys

import numpy as np
import pytest

from chunglu.degrees import DegreeSequence, moments
from chunglu.sampler import SampleSeed, sample_fast


@pytest.fixture
def small_seq():
    return DegreeSequence(np.array([2.0, 2.0, 3.0, 3.0]))


def random_graphical(rng, n, low=2, high=None):
    """Integer degrees in [low, high] with m_inf^2 <= m1."""
    high = high or max(low, int(np.sqrt(low * n)))
    while True:
        d = rng.integers(low, high + 1, size=n).astype(float)
        if d.max() ** 2 <= d.sum():
            return DegreeSequence(d)


def sampled(seq, seed=0, replica=0, self_loops=True):
    return sample_fast(seq, moments(seq), self_loops, SampleSeed(seed, replica))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for k in sorted(results):
            terminalreporter.write_line(results[k])
