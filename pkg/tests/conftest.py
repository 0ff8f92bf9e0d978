import numpy as np
import pytest

from hkflow import Generator, line_space, measure, new_space


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_space(rng, n, dim=2):
    """Random metric space from points embedded in the plane."""
    pts = rng.uniform(-2.0, 2.0, (n, dim))
    pts += np.arange(n)[:, None] * 1e-3  # avoid coincident points
    dist = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)
    m = rng.uniform(0.2, 1.5, n)
    return new_space(dist, m)


def random_measure(rng, n, zeros=0.0, total=None):
    w = rng.uniform(0.05, 2.0, n)
    if zeros > 0:
        mask = rng.random(n) < zeros
        w[mask] = 0.0
        if w.sum() == 0:
            w[int(rng.integers(0, n))] = 1.0
    if total is not None:
        w *= total / w.sum()
    return measure(w)


def random_reversible_generator(rng, n, unit_scale=True):
    m = rng.uniform(0.3, 1.7, n)
    m /= m.sum()
    cond = rng.uniform(0.2, 1.2, (n, n))
    cond = 0.5 * (cond + cond.T)
    L = cond / m[:, None]
    np.fill_diagonal(L, 0.0)
    np.fill_diagonal(L, -L.sum(axis=1))
    if unit_scale:
        L /= np.abs(np.diag(L)).max()
    x = np.sort(rng.uniform(0.0, 3.0, n)) + np.arange(n) * 0.05
    return Generator(line_space(x, m), L)
