import math

import numpy as np
import pytest

from crlbstat import RSS, TOA, Annulus, Bearing, Disk

# channel measured in the field: path-loss exponent 2.3, shadowing 3.92 dB, R0 = 1 m
FIELD_RSS = RSS(2.3, 3.92)


@pytest.fixture
def rss():
    return FIELD_RSS


@pytest.fixture
def toa():
    return TOA(1.0)


@pytest.fixture
def bearing():
    return Bearing(0.05)


@pytest.fixture
def annulus10():
    return Annulus(1.0, 10.0)


@pytest.fixture
def disk10():
    return Disk(10.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240521)


def random_instances(rng, count, n_lo=3, n_hi=12, r0=1.0, r=10.0):
    """Independent random anchor sets (numpy RNG, not the package sampler)."""
    from crlbstat import AnchorSet

    for _ in range(count):
        n = int(rng.integers(n_lo, n_hi + 1))
        d = np.sqrt(r0**2 + rng.random(n) * (r**2 - r0**2))
        yield AnchorSet(d, rng.random(n) * 2 * math.pi)
