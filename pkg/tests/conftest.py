"""Shared instance generators for the test suite."""

import numpy as np
import pytest

from flexcon.model import MarketParams, TypeDistribution


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def sample_instance(rng, n_types=None, n_min=2, n_max=6):
    """Random valid market instance over the empirical parameter ranges."""
    n = int(rng.integers(n_min, n_max + 1)) if n_types is None else n_types
    means = [rng.uniform(1.0, 10.0)]
    for _ in range(n - 1):
        means.append(rng.uniform(means[-1] * 1.000001, means[-1] * 10.0))
    probs = rng.dirichlet(np.ones(n))
    dist = TypeDistribution(tuple(means), tuple(float(h) for h in probs))
    p0 = rng.uniform(1.0, 100.0)
    params = MarketParams(
        p0=p0,
        k=rng.uniform(p0 * 1.000001, 10.0 * p0),
        c0=rng.uniform(0.0, 0.99 * p0),
        c_hat=rng.uniform(0.001 * p0, 0.5 * p0),
        N=int(rng.integers(1, 21)),
    )
    return params, dist


@pytest.fixture
def two_type():
    params = MarketParams(p0=10.0, k=20.0, c0=1.0, c_hat=2.0, N=1)
    dist = TypeDistribution((1.0, 1.2), (0.5, 0.5))
    return params, dist
