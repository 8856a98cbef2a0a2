import numpy as np
import pytest

from junctionflow.geometry import JunctionConfig

ACCEPTANCE_SEED = 20250810


def random_normalized_config(rng, n=2, q=None, m=None) -> JunctionConfig:
    """Random configuration already in the normalized frame: the first
    two slopes lie in span(e_1) with a separated leading component, the
    rest are free in [-2, 2]^m."""
    q = int(rng.integers(3, 6)) if q is None else q
    m = int(rng.integers(1, 4)) if m is None else m
    s = int(rng.integers(2, q))
    theta = tuple(int(t) for t in rng.integers(1, 4, size=q))
    slopes = rng.uniform(-2.0, 2.0, size=(q, m))
    if m > 1:
        slopes[0, 1:] = 0.0
        slopes[1, 1:] = 0.0
    while abs(slopes[0, 0] - slopes[1, 0]) < 0.05:
        slopes[0, 0], slopes[1, 0] = rng.uniform(-2.0, 2.0, size=2)
    if slopes[0, 0] < slopes[1, 0]:
        slopes[[0, 1]] = slopes[[1, 0]]
    return JunctionConfig(n=n, m=m, q=q, s=s, theta=theta,
                          slopes=tuple(tuple(row) for row in slopes))


def random_equal_slope_config(rng, n=2) -> JunctionConfig:
    """All sheets share one slope along e_1 (the frame in which the
    determinant formulas are defined)."""
    q = int(rng.integers(3, 6))
    m = int(rng.integers(1, 4))
    s = int(rng.integers(2, q))
    theta = tuple(int(t) for t in rng.integers(1, 4, size=q))
    slope = np.zeros(m)
    slope[0] = rng.uniform(-2.0, 2.0)
    return JunctionConfig(n=n, m=m, q=q, s=s, theta=theta,
                          slopes=tuple(tuple(slope) for _ in range(q)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
