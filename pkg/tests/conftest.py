import numpy as np
import pytest

from convcover.bodies import Ellipsoid, HPolytope, LpBall, VPolytope


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def box(n=2, half=1.0):
    return HPolytope(np.vstack([np.eye(n), -np.eye(n)]), np.full(2 * n, float(half)))


@pytest.fixture
def square():
    return box(2)


@pytest.fixture
def disk():
    return Ellipsoid.ball(2)


@pytest.fixture
def triangle():
    return VPolytope([[-1.0, -1.0], [2.0, -1.0], [-1.0, 2.0]])


@pytest.fixture
def diamond():
    return LpBall(2, 1)


def random_hpoly(n, rng, m=None):
    m = m or 4 * n + 2
    A = rng.standard_normal((m, n))
    A /= np.linalg.norm(A, axis=1)[:, None]
    return HPolytope(A, rng.uniform(0.6, 1.4, m))
