import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chisquare

from convcover.bodies import Ellipsoid, HPolytope, Hyperplane, LpBall, random_directions, sample_uniform
from convcover.caps import (cap_contains, cap_from_plane, cap_min_linear, cap_sample, cap_volume,
                            cap_with_width, expand_cap, min_width_cap, ray_distance, representative_cap,
                            shell_sample, similar_caps)
from convcover.errors import EmptyCapError, InputError

from conftest import box, random_hpoly


def test_cap_from_plane_examples(square, disk):
    c = cap_from_plane(disk, Hyperplane([1, 0], 0.6))
    assert c.absolute_width == pytest.approx(0.4) and c.relative_width == pytest.approx(0.4)
    c = cap_from_plane(square, Hyperplane([1, 0], 0.5))
    assert c.relative_width == pytest.approx(0.5) and c.apex[0] == pytest.approx(1.0)
    c = cap_from_plane(Ellipsoid.axis_aligned([2, 1]), Hyperplane([1, 0], 1.0))
    assert c.relative_width == pytest.approx(0.5)


def test_cap_from_plane_missing_body(disk):
    with pytest.raises(EmptyCapError):
        cap_from_plane(disk, Hyperplane([1, 0], 1.5))


@pytest.mark.parametrize("K", [box(2), Ellipsoid.axis_aligned([2, 0.5]), LpBall(3, 1), LpBall(3, 3.0)])
def test_cap_invariants(K, rng):
    for u in random_directions(rng, K.dim, 50):
        c = cap_with_width(K, u, rng.uniform(0.01, 0.99))
        assert np.allclose(c.base_plane.normal, c.support_plane.normal)
        assert 0 < c.absolute_width <= c.support_value * c.relative_width * (1 + 1e-9)
        assert c.normal @ c.apex == pytest.approx(c.support_value, abs=1e-9)
        assert K.gauge(c.apex) == pytest.approx(1.0, abs=1e-9)
        assert 0 < c.relative_width < 1


def test_ray_distance_examples(square, disk):
    assert ray_distance(disk, [0.5, 0]) == pytest.approx(0.5)
    assert ray_distance(disk, [2, 0]) == pytest.approx(0.5)
    assert ray_distance(square, [0.75, 0.75]) == pytest.approx(0.25)
    with pytest.raises(InputError):
        ray_distance(disk, [0, 0])


def test_min_width_cap_examples(square, disk):
    c = min_width_cap(disk, [0.5, 0])
    assert np.allclose(c.normal, [1, 0]) and c.offset == pytest.approx(0.5) and c.relative_width == pytest.approx(0.5)
    c = min_width_cap(square, [0, 0.9])
    assert np.allclose(c.normal, [0, 1]) and c.offset == pytest.approx(0.9) and c.relative_width == pytest.approx(0.1)


def test_min_width_cap_matches_ray_distance(rng):
    K = Ellipsoid(np.array([0.1, -0.2]), np.array([[1.0, 0.4], [0.4, 2.0]]))
    for p in sample_uniform(K, rng, 200):
        assert min_width_cap(K, p).relative_width == pytest.approx(float(ray_distance(K, p)), abs=1e-9)


def test_expand_cap_examples(disk):
    c = cap_with_width(disk, [1, 0], 0.2)
    e = expand_cap(c, 2.0)
    assert e.relative_width == pytest.approx(0.4) and not e.full_body
    assert expand_cap(c, 1.0) is c
    # planes through or past the origin give the whole body
    e = expand_cap(cap_with_width(disk, [1, 0], 0.6), 2.0)
    assert e.full_body and e.base_plane is None and e.offset == pytest.approx(-0.2)
    # clamped at the far side
    assert expand_cap(cap_with_width(disk, [1, 0], 0.6), 4.0).offset == pytest.approx(-1.0)
    with pytest.raises(InputError):
        expand_cap(c, 0.5)


def test_representative_cap_self_dual_disk(disk):
    rc = representative_cap(disk, disk.polar(), [0.5, 0], 0.1)
    assert np.allclose(rc.cap.normal, [1, 0])
    assert rc.cap.offset == pytest.approx(0.9) and rc.cap.relative_width == pytest.approx(0.1)


def test_representative_cap_square_axis(square):
    # polar of the square is the diamond; z on the axis maps to the plane x = 1 - eps
    rc = representative_cap(square, square.polar(), [0.3, 0], 0.1)
    assert np.allclose(rc.cap.normal, [1, 0])
    assert rc.cap.offset == pytest.approx(0.9) and rc.cap.relative_width == pytest.approx(0.1)


def test_representative_cap_width_sweep(rng):
    bodies = [box(2), Ellipsoid.axis_aligned([2, 0.5]), LpBall(3, 1), random_hpoly(3, rng), LpBall(2, 3.0)]
    for k in range(100):
        K = bodies[k % len(bodies)]
        Ks = K.polar()
        eps = rng.uniform(0.005, 0.125)
        z = sample_uniform(Ks, rng, 1)[0]
        w = representative_cap(K, Ks, z, eps).cap.relative_width
        assert w / eps == pytest.approx(1.0, abs=1e-6)


def test_representative_cap_rejects_large_eps(disk):
    with pytest.raises(InputError):
        representative_cap(disk, disk, [0.5, 0], 0.2)


def test_shell_sample_disk(disk, rng):
    eps = 0.1
    assert 0.6 <= disk.gauge(shell_sample(disk, eps, rng)) <= 1.0
    X = shell_sample(disk, eps, rng, 10000)
    g = disk.gauge(X)
    assert np.all((g >= 1 - 4 * eps - 1e-12) & (g <= 1 + 1e-12))
    ang = np.arctan2(X[:, 1], X[:, 0])
    counts, _ = np.histogram(ang, bins=20, range=(-math.pi, math.pi))
    assert chisquare(counts).pvalue > 0.01


def test_shell_sample_square(square, rng):
    X = shell_sample(square, 0.05, rng, 5000)
    g = square.gauge(X)
    assert np.all((g >= 0.8 - 1e-12) & (g <= 1.0 + 1e-12))


def test_cap_sample_disk(disk, rng):
    c = cap_from_plane(disk, Hyperplane([1, 0], 0.5))
    X = cap_sample(disk, c, rng, 2000)
    assert np.all(disk.contains(X)) and np.all(X[:, 0] >= 0.5)


def test_cap_sample_square_mean(square, rng):
    c = cap_from_plane(square, Hyperplane([1, 0], 1e-12))
    X = cap_sample(square, c, rng, 10000)
    assert abs(X[:, 0].mean() - 0.5) < 0.02


def test_cap_sample_thin_cap_fallback(rng):
    K = Ellipsoid.ball(3)
    c = cap_with_width(K, [0.3, 0.4, 0.5], 0.01)
    X = cap_sample(K, c, rng, 200, budget=2000)
    assert np.all(c.contains(X))
    X = cap_sample(K, c, rng, 50)
    assert np.all(c.contains(X))


def test_similar_caps_examples(square, disk):
    c = cap_with_width(disk, [0, 1], 0.1)
    assert similar_caps(c, c, 1.0)
    assert similar_caps(cap_with_width(disk, [0, 1], 0.1), cap_with_width(disk, [0, 1], 0.2), 2.0)
    a, b = cap_with_width(square, [1, 0], 0.05), cap_with_width(square, [0, 1], 0.05)
    # (1, -0.5) lies in a but not in b
    assert a.contains([1.0, -0.5]) and not b.contains([1.0, -0.5])
    assert not similar_caps(a, b, 1.0)


def test_cap_min_linear_dual_matches_polygon_lp(rng):
    # dual route on the ellipse vs LP on a fine circumscribed polygon
    E = Ellipsoid.axis_aligned([1.0, 0.5])
    t = np.linspace(0, 2 * math.pi, 4000, endpoint=False)
    N = np.column_stack([np.cos(t), np.sin(t)])
    P = HPolytope(N, E.support_values(N))
    for _ in range(30):
        u, v = random_directions(rng, 2, 2)
        w = rng.uniform(0.05, 0.9)
        a = cap_min_linear(cap_with_width(E, u, w), v)
        b = cap_min_linear(cap_with_width(P, u, w), v)
        assert a == pytest.approx(b, abs=2e-4)


def test_cap_contains_brute_force(rng):
    # oracle: sampled points of the inner cap vs the outer half-space
    K = Ellipsoid(np.array([0.1, 0.0, -0.1]), np.diag([1.0, 2.0, 0.5]))
    agree = 0
    for _ in range(60):
        u, v = random_directions(rng, 3, 2)
        inner = cap_with_width(K, u, rng.uniform(0.02, 0.3))
        outer = cap_with_width(K, u + 0.3 * v, rng.uniform(0.1, 0.9))
        got = cap_contains(outer, inner)
        X = cap_sample(K, inner, rng, 3000)
        sampled = bool(np.all(X @ outer.normal >= outer.offset - 1e-12))
        if got:
            assert sampled
        agree += got == sampled
    assert agree >= 55


def test_cap_volume_exact_examples(disk, square):
    # disk cap x >= 0.5: area acos(h) - h sqrt(1 - h^2)
    h = 0.5
    assert cap_volume(cap_with_width(disk, [1, 0], 0.5)) == pytest.approx(math.acos(h) - h * math.sqrt(1 - h * h))
    assert cap_volume(cap_with_width(square, [1, 0], 0.25)) == pytest.approx(0.5)
    ball = Ellipsoid.ball(3)
    # spherical cap of height 0.3: pi h^2 (3 - h) / 3
    assert cap_volume(cap_with_width(ball, [0, 0, 1], 0.3)) == pytest.approx(math.pi * 0.09 * 2.7 / 3)


def test_cap_volume_matches_monte_carlo(rng):
    E = Ellipsoid(np.array([0.2, -0.1]), np.array([[1.0, 0.3], [0.3, 2.0]]))
    c = cap_with_width(E, [0.4, 0.9], 0.3)
    lo, hi = E.bounding_box()
    X = lo + (hi - lo) * rng.random((400000, 2))
    p = c.contains(X).mean()
    se = np.prod(hi - lo) * math.sqrt(p * (1 - p) / len(X))
    assert abs(cap_volume(c) - np.prod(hi - lo) * p) <= 3 * se


@settings(max_examples=40, deadline=None)
@given(theta=st.floats(0, 2 * math.pi), w=st.floats(0.01, 0.95), frac=st.floats(0, 1))
def test_ray_distance_at_most_cap_width(theta, w, frac):
    K = LpBall(2, 3.0)
    c = cap_with_width(K, [math.cos(theta), math.sin(theta)], w)
    # a point of the cap on the segment from the base to the apex
    base = c.apex * (c.offset / c.support_value)
    p = base + frac * (c.apex - base)
    assert float(ray_distance(K, p)) <= c.relative_width + 1e-9
