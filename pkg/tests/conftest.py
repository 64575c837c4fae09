"""Shared generators for random operators and frames."""
import numpy as np
import pytest


def haar_orthogonal(n, rng):
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def operator_with_spectrum(values, rng):
    """Q diag(values) Q^T with Haar-random Q."""
    values = np.asarray(values, dtype=float)
    q = haar_orthogonal(len(values), rng)
    t = (q * values) @ q.T
    return (t + t.T) / 2


def random_low_rank_spectrum(rng, n, lo=1.0, hi=10.0):
    k = int(rng.integers(1, n // 2 + 1))
    vals = np.zeros(n)
    vals[:k] = rng.uniform(lo, hi, size=k)
    return vals


def random_oblique_projection(n, k, rng):
    """Projection onto a random k-plane along a random complementary plane."""
    while True:
        a = rng.standard_normal((n, k))
        b = rng.standard_normal((n, n - k))
        m = np.hstack([a, b])
        if abs(np.linalg.det(m)) > 1e-3:
            break
    d = np.diag([1.0] * k + [0.0] * (n - k))
    return m @ d @ np.linalg.inv(m)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
