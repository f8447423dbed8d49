import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


def random_spd(rng, dim, count=None, scale=1.0):
    """Well-conditioned random SPD matrices."""
    shape = (dim, dim) if count is None else (count, dim, dim)
    a = rng.standard_normal(shape)
    eye = np.eye(dim)
    return scale * (a @ np.swapaxes(a, -1, -2) / dim + 0.2 * eye)


def random_unit(rng, dim, count):
    x = rng.standard_normal((count, dim))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def random_hyperboloid(rng, count, spread=1.0):
    xy = spread * rng.standard_normal((count, 2))
    return np.column_stack([xy, np.sqrt(1.0 + np.sum(xy * xy, axis=1))])


def random_density(rng, m, count):
    f = rng.gamma(2.0, size=(count, m)) + 0.01
    h = 1.0 / (m - 1)
    w = np.full(m, h)
    w[0] = w[-1] = h / 2
    return f / (f @ w)[:, None]


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)
