"""Shared helpers for the test suite.

Channels used in unit tests are drawn through these factories so every test
that needs "some integer-grid channel" gets a reproducible one without
repeating the path-construction boilerplate.
"""

import numpy as np
import pytest

from ddwave.channel import ChannelRealization, DdPath
from ddwave.core import crandn, rng_stream


def make_channel(rng, n_paths, l_max, k_max, integer_doppler=True):
    """Random channel with distinct (doppler, delay) support inside the box."""
    support = set()
    while len(support) < n_paths:
        l = int(rng.integers(0, l_max + 1))
        if integer_doppler:
            k = float(rng.integers(-k_max, k_max + 1))
        else:
            k = float(rng.uniform(-k_max, k_max))
        support.add((k, l))
    gains = crandn(rng, n_paths) / np.sqrt(n_paths)
    paths = tuple(
        DdPath(gain=g, delay=l, doppler=k)
        for g, (k, l) in zip(gains, sorted(support))
    )
    return ChannelRealization(paths=paths, l_max=l_max, k_max=float(k_max))


@pytest.fixture
def rng():
    return rng_stream(20240817)


@pytest.fixture
def channel_factory(rng):
    def factory(n_paths=2, l_max=2, k_max=1, integer_doppler=True):
        return make_channel(rng, n_paths, l_max, k_max, integer_doppler)

    return factory
