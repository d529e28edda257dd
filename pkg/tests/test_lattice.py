import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from convcover.bodies import Ellipsoid, LpBall
from convcover.errors import InputError, PreconditionError
from convcover.lattice import (CvpInstance, ExactGapSolver, Lattice, approx_cvp, approx_ip, build_norm_cover,
                               exact_cvp, gap_cvp, lll_reduce, search_steps_cap)
from convcover.macbeath import Covering, CoveringElement

from conftest import box

EPS = 0.1


def random_basis(n, rng):
    while True:
        B = rng.integers(-3, 4, size=(n, n)).astype(float)
        if abs(np.linalg.det(B)) >= 1:
            return B


def brute_cvp(B, t, K, dist_bound):
    """Scan original-basis coefficients in a box twice as wide as needed.

    If |x - t| <= D in K's gauge then |x - t|_2 <= D * r_outer, and each
    coefficient of B^-1 (x - t) is at most |row_i(B^-1)|_2 times that.
    """
    Binv = np.linalg.inv(B)
    c0 = Binv @ t
    half = 2 * dist_bound * K.r_outer * np.linalg.norm(Binv, axis=1) + 1
    ranges = [range(math.floor(c - h), math.ceil(c + h) + 1) for c, h in zip(c0, half)]
    Z = np.array(list(itertools.product(*ranges)), dtype=float)
    d = K.gauge(Z @ B.T - t)
    return float(d.min())


@pytest.fixture(scope="module")
def square_cover():
    return build_norm_cover(box(2), EPS / 7, np.random.default_rng(11))


def test_lattice_basics():
    L = Lattice([[2.0, 1.0], [0.0, 3.0]])
    assert L.determinant == pytest.approx(6.0)
    assert np.allclose(L.point([1, 1]), [3, 3])
    assert np.allclose(L.coefficients([3, 3]), [1, 1])
    with pytest.raises(InputError):
        Lattice([[1.0, 2.0], [2.0, 4.0]])
    with pytest.raises(InputError):
        Lattice([[1.0, 2.0, 3.0]])


def test_lll_reduces_and_is_unimodular(rng):
    for _ in range(20):
        B = random_basis(3, rng) @ random_basis(3, rng)
        R, U = lll_reduce(B)
        assert abs(round(np.linalg.det(U))) == 1
        assert np.allclose(B @ U, R)
        # size reduction and the product of column norms stays near the volume
        assert np.prod(np.linalg.norm(R, axis=0)) <= 2 ** 1.5 * abs(np.linalg.det(B)) * (1 + 1e-9)


def test_exact_cvp_zinf():
    inst = CvpInstance(Lattice(np.eye(2)), [0.4, 0.3], LpBall(2, math.inf))
    v, d = exact_cvp(inst)
    assert np.allclose(v, [0, 0]) and d == pytest.approx(0.4)


def test_exact_cvp_tie_break():
    inst = CvpInstance(Lattice(np.eye(2)), [0.5, 0.0], Ellipsoid.ball(2))
    v, d = exact_cvp(inst)
    assert np.allclose(v, [0, 0]) and d == pytest.approx(0.5)
    inst = CvpInstance(Lattice(np.eye(2)), [-0.5, 0.0], Ellipsoid.ball(2))
    v, d = exact_cvp(inst)
    assert np.allclose(v, [-1, 0])


def test_exact_cvp_matches_brute_force(rng):
    K = box(2)
    for n, norm in ((2, K), (2, Ellipsoid(np.zeros(2), np.array([[2.0, 0.5], [0.5, 1.0]]))),
                    (3, box(3)), (3, LpBall(3, 1))):
        for _ in range(15):
            B = random_basis(n, rng)
            t = rng.uniform(-5, 5, n)
            v, d = exact_cvp(CvpInstance(Lattice(B), t, norm))
            assert np.allclose(np.linalg.solve(B, v), np.round(np.linalg.solve(B, v)))
            assert norm.gauge(v - t) == pytest.approx(d)
            assert d == pytest.approx(brute_cvp(B, t, norm, d), abs=1e-12)


def test_exact_cvp_radius_limit():
    inst = CvpInstance(Lattice(np.eye(2)), [0.4, 0.3], LpBall(2, math.inf))
    assert exact_cvp(inst, radius=0.3) == (None, math.inf)
    with pytest.raises(InputError):
        exact_cvp(CvpInstance(Lattice(np.eye(5)), np.zeros(5), Ellipsoid.ball(5)))


def _instances(rng, count, n=2):
    for _ in range(count):
        L = Lattice(random_basis(n, rng))
        yield CvpInstance(L, rng.uniform(-4, 4, n), box(n), EPS)


def test_gap_found_and_empty(square_cover, rng):
    for inst in _instances(rng, 25):
        _, dstar = exact_cvp(inst)
        for f in (1.0, 1.3):
            ans = gap_cvp(inst, f * dstar, square_cover)
            assert ans.found
            assert inst.norm_body.gauge(ans.point - inst.target) <= f * dstar * (1 + EPS) + 1e-12
        assert not gap_cvp(inst, 0.5 * dstar, square_cover).found


def test_gap_inner_oracle_agrees_with_sweep(square_cover, rng):
    for inst in _instances(rng, 3):
        _, dstar = exact_cvp(inst)
        for f in (0.7, 1.0, 1.2):
            a = gap_cvp(inst, f * dstar, square_cover)
            b = gap_cvp(inst, f * dstar, square_cover, inner=ExactGapSolver())
            assert a.found == b.found
            if a.found:
                assert a.element == b.element and np.allclose(a.point, b.point)


def test_gap_preconditions(square_cover, square):
    inst = CvpInstance(Lattice(np.eye(2)), [0.4, 0.3], square, EPS)
    degenerate = Covering(square, square, 1.0, EPS, [CoveringElement(np.zeros(2), 1.0, 0)], verified=True)
    with pytest.raises(PreconditionError):
        gap_cvp(inst, 1.0, degenerate)
    unverified = Covering(square_cover.ambient, square, 2.0, EPS, square_cover.elements)
    with pytest.raises(PreconditionError):
        gap_cvp(inst, 1.0, unverified)
    with pytest.raises(PreconditionError):
        gap_cvp(inst, 1.0, None)
    with pytest.raises(InputError):
        gap_cvp(inst, 0.0, square_cover)


def test_approx_cvp_example(square_cover):
    inst = CvpInstance(Lattice(np.eye(2)), [0.4, 0.3], box(2), EPS)
    v, d, trace = approx_cvp(inst, cover=square_cover, return_trace=True)
    assert d <= 1.1 * 0.4 + 1e-12
    assert trace["steps"] <= search_steps_cap(EPS)


def test_approx_cvp_lattice_target(square_cover):
    L = Lattice([[2.0, 1.0], [1.0, 3.0]])
    t = L.point([2, -1])
    v, d = approx_cvp(CvpInstance(L, t, box(2), EPS), cover=square_cover)
    assert d == 0 and np.allclose(v, t)


def test_approx_cvp_within_factor(square_cover, rng):
    for inst in _instances(rng, 20):
        v, d, trace = approx_cvp(inst, cover=square_cover, return_trace=True)
        _, dstar = exact_cvp(inst)
        assert d <= (1 + EPS) * dstar + 1e-12
        assert inst.norm_body.gauge(v - inst.target) == pytest.approx(d)
        assert trace["steps"] <= search_steps_cap(EPS)


def test_approx_cvp_finer_eps_within_coarse_bound(rng):
    # what the approximation contract implies across eps: the finer answer
    # also satisfies the coarser factor
    K = box(2)
    covs = {e: build_norm_cover(K, e / 7, np.random.default_rng(3)) for e in (0.5, 0.25)}
    for inst in _instances(rng, 10):
        _, dstar = exact_cvp(inst)
        d = {e: approx_cvp(CvpInstance(inst.lattice, inst.target, K, e), cover=covs[e])[1] for e in covs}
        assert d[0.25] <= 1.25 * dstar + 1e-12 and d[0.5] <= 1.5 * dstar + 1e-12
        assert d[0.25] <= 1.5 * dstar + 1e-12


@settings(max_examples=30, deadline=None)
@given(eps=st.floats(1e-3, 1.0))
def test_search_steps_cap_grows_logarithmically(eps):
    k = math.ceil(40 * math.log(2) / math.log1p(eps / 4))
    assert 2 ** (search_steps_cap(eps) - 2) >= k + 1


def test_ip_examples():
    Z2 = Lattice(np.eye(2))
    ans = approx_ip(box(2, 0.4).translated([5.5, 5.5]), Z2, 0.01, np.random.default_rng(0))
    assert not ans.found
    disk = Ellipsoid(np.array([2.1, 2.9]), np.eye(2) / 0.64)
    ans = approx_ip(disk, Z2, 0.1, np.random.default_rng(0))
    assert ans.found and np.allclose(ans.point, [2, 3]) and not ans.margin


def test_ip_input_checks():
    with pytest.raises(InputError):
        approx_ip(Ellipsoid.ball(3), Lattice(np.eye(2)), 0.1)
