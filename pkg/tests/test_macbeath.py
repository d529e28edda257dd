import itertools

import numpy as np
import pytest

from convcover.bodies import Ellipsoid, sample_uniform
from convcover.caps import shell_sample
from convcover.errors import InputError
from convcover.macbeath import (Covering, CoveringElement, MacbeathRegion, build_mnet, covered_mask,
                                hitting_to_cover, mac_as_hpoly, mac_contains, mac_disjoint, mac_membership,
                                verify_covering, verify_packing)

from conftest import random_hpoly


def test_membership_symmetric_center_is_body(rng):
    K = Ellipsoid.axis_aligned([2.0, 0.5])
    X = 2.5 * rng.uniform(-1, 1, (500, 2))
    assert np.array_equal(mac_membership(MacbeathRegion(K, [0, 0], 1.0), X), K.contains(X))


def test_membership_square_examples(square):
    m = MacbeathRegion(square, [0.5, 0], 1.0)
    assert mac_membership(m, [0.1, 0.9]) and not mac_membership(m, [-0.1, 0])
    s = m.rescaled(0.2)
    assert mac_membership(s, [0.55, 0.1]) and not mac_membership(s, [0.75, 0])


def test_as_hpoly_examples(square):
    P = mac_as_hpoly(square, [0, 0], 1.0)
    assert np.allclose(np.sort(P.vertices, axis=0), np.sort(square.vertices, axis=0))
    V = mac_as_hpoly(square, [0.5, 0], 1.0).vertices
    assert np.allclose(V.min(axis=0), [0, -1]) and np.allclose(V.max(axis=0), [1, 1])


def test_as_hpoly_matches_membership(rng):
    K = random_hpoly(3, rng)
    x = 0.3 * sample_uniform(K, rng, 1)[0]
    lam = 0.6
    P = mac_as_hpoly(K, x, lam)
    m = MacbeathRegion(K, x, lam)
    lo, hi = P.bounding_box()
    Y = lo - 0.1 + (hi - lo + 0.2) * rng.random((1000, 3))
    inside = m.contains(Y)
    assert 0 < inside.sum() < 1000
    # skip points within round-off of the boundary
    g = np.asarray(m.gauge(Y))
    keep = np.abs(g - 1) > 1e-9
    assert np.array_equal(P.contains(Y)[keep], inside[keep])


def test_as_hpoly_rejects_smooth(disk):
    with pytest.raises(InputError):
        mac_as_hpoly(disk, [0, 0], 1.0)


def test_disjoint_examples(square):
    a = MacbeathRegion(square, [0.5, 0.5], 0.05)
    b = MacbeathRegion(square, [-0.5, -0.5], 0.05)
    assert mac_disjoint(a, b)
    assert not mac_disjoint(a, a)


def test_disjoint_tangent_faces(square):
    # M^lam((x, 0)) = box of half-width lam*(1-|x|) in the first coordinate
    a = MacbeathRegion(square, [0.0, 0.0], 0.25)  # [-0.25, 0.25] x [-0.25, 0.25]
    b = MacbeathRegion(square, [0.5, 0.0], 0.5)   # [0.25, 0.75] x [-0.5, 0.5]
    assert not mac_disjoint(a, b)
    b2 = MacbeathRegion(square, [0.51, 0.0], 0.5)
    assert mac_disjoint(a, b2)


def test_disjoint_smooth_against_sampling(rng):
    # oracle: a sampled common point proves intersection
    K = Ellipsoid.axis_aligned([1.0, 0.6])
    for _ in range(40):
        x, y = sample_uniform(K, rng, 2)
        m1, m2 = MacbeathRegion(K, x, 0.3), MacbeathRegion(K, y, 0.3)
        P = m1.boundary_points(64)
        Z = x + (P - x) * rng.random((len(P), 1))
        if np.any(m2.contains(Z)):
            assert not mac_disjoint(m1, m2)


def test_contains_examples(square, disk):
    for K in (square, disk):
        x = np.array([0.3, -0.2])
        assert mac_contains(MacbeathRegion(K, x, 1.0), MacbeathRegion(K, x, 0.2))
        assert not mac_contains(MacbeathRegion(K, x, 0.2), MacbeathRegion(K, x, 1.0))
        assert not mac_contains(MacbeathRegion(K, [0.5, 0.5], 0.05), MacbeathRegion(K, [-0.5, -0.5], 0.05))


def test_overlapping_fifth_regions_nest(rng):
    # two meeting M^{1/5} regions: the second lies in M^{4/5} of the first
    trials = 0
    while trials < 100:
        K = random_hpoly(2, rng)
        x = sample_uniform(K, rng, 1)[0]
        m = MacbeathRegion(K, x, 0.2)
        y = x + 2.2 * (m.vertices()[rng.integers(len(m.vertices()))] - x) * rng.random()
        if not K.contains(y) or K.gauge(y) >= 1:
            continue
        my = MacbeathRegion(K, y, 0.2)
        if mac_disjoint(m, my):
            continue
        trials += 1
        assert mac_contains(MacbeathRegion(K, x, 0.8), my)


def test_build_mnet_trivial(disk):
    assert len(build_mnet(disk, [], 2).centers) == 0
    net = build_mnet(disk, [[0.1, 0.2]], 2)
    assert np.allclose(net.centers, [[0.1, 0.2]])
    net = build_mnet(disk, [[0.1, 0.2], [3.0, 0.0]], 2)
    assert len(net.centers) == 1 and net.skipped == 1
    with pytest.raises(InputError):
        build_mnet(disk, [], 1.5)


def _disk_regions_meet(x, y, lam):
    # in the unit disk M^lam(x) is the lens disk(x - lam x, lam) & disk(x + lam x, lam);
    # a nonempty intersection of disks has its leftmost point at a disk's leftmost
    # point or at a crossing of two circles
    D = [(x - lam * x, lam), (x + lam * x, lam), (y - lam * y, lam), (y + lam * y, lam)]
    cand = [c - r * np.array([1.0, 0.0]) for c, r in D]
    for (c1, r1), (c2, r2) in itertools.combinations(D, 2):
        d = np.linalg.norm(c2 - c1)
        if d == 0 or d > r1 + r2 or d < abs(r1 - r2):
            continue
        a = (r1 * r1 - r2 * r2 + d * d) / (2 * d)
        h = np.sqrt(max(r1 * r1 - a * a, 0.0))
        m = c1 + a * (c2 - c1) / d
        p = np.array([c1[1] - c2[1], c2[0] - c1[0]]) / d
        cand += [m + h * p, m - h * p]
    return any(all(np.linalg.norm(z - c) <= r + 1e-12 for c, r in D) for z in cand)


def _shell_net(disk, seed):
    return build_mnet(disk, shell_sample(disk, 0.1, np.random.default_rng(seed), 1000), 2)


def test_build_mnet_disk_shell_matches_lens_oracle(disk):
    X = shell_sample(disk, 0.1, np.random.default_rng(7), 1000)
    kept = []
    for x in X:
        if not any(_disk_regions_meet(x, k, 1.0 / 8) for k in kept):
            kept.append(x)
    net = build_mnet(disk, X, 2)
    assert np.array_equal(net.centers, np.array(kept))
    assert len(net.centers) == 283  # frozen from the oracle run
    assert np.array_equal(net.centers, _shell_net(disk, 7).centers)
    assert verify_packing(net)


@pytest.mark.xfail(strict=True, reason="exact lens-geometry greedy gives 283-295 centres on seeds 7-9; "
                                       "the quoted band [5, 200] is not reachable with this shell sampler")
def test_build_mnet_disk_shell_size_band(disk):
    assert 5 <= len(_shell_net(disk, 7).centers) <= 200


def test_mnet_centers_cover_inner_target(disk, rng):
    # maximal net over dense candidates: its 1/c regions cover a compact sub-body
    net = build_mnet(disk, sample_uniform(disk, rng, 4000), 2)
    target = Ellipsoid.ball(2, 0.5)
    cov = hitting_to_cover(disk, net.centers, 2, target=target)
    rep = verify_covering(cov, rng, 20000, threshold=0.99)
    assert rep["pass"], rep


def test_hitting_to_cover_empty(disk, rng):
    cov = hitting_to_cover(disk, np.empty((0, 2)), 2)
    rep = verify_covering(cov, rng, 2000)
    assert len(cov) == 0 and rep["coverage"] == 0 and not rep["pass"] and rep["failed"] == ["coverage_pass"]


def test_hitting_to_cover_rejects_outside(disk):
    with pytest.raises(InputError):
        hitting_to_cover(disk, [[1.2, 0]], 2)


def test_verify_tiny_target(rng):
    big = Ellipsoid.ball(2, 100.0)
    cov = hitting_to_cover(big, [[0.0, 0.0]], 2, target=Ellipsoid.ball(2, 0.01))
    rep = verify_covering(cov, rng, 5000)
    assert rep["coverage"] == 1.0 and rep["buffering_pass"] and rep["pass"]


def test_verify_detects_deleted_element(square, rng):
    # four quadrant boxes exactly tile the square; drop one
    C = np.array([[0.5, 0.5], [-0.5, 0.5], [-0.5, -0.5], [0.5, -0.5]])
    els = [CoveringElement(c, 1.0, 0) for c in C]
    full = Covering(square, square, 1.0, 0.0, els)
    # c = 1 makes the buffering region the region itself, still inside K
    assert verify_covering(full, rng, 5000)["coverage"] == 1.0
    cut = Covering(square, square, 1.0, 0.0, els[:3])
    rep = verify_covering(cut, rng, 5000)
    assert 0.7 < rep["coverage"] < 0.8 and not rep["pass"]


def test_verify_detects_buffering_violation(square, rng):
    # centre near the boundary with c * scale > 1: the expanded region leaves K
    cov = Covering(square, Ellipsoid.ball(2, 0.01), 2.0, 0.0,
                   [CoveringElement(np.zeros(2), 0.5, 0), CoveringElement(np.array([0.0, 0.9]), 0.9, 0)])
    rep = verify_covering(cov, rng, 2000)
    assert rep["coverage_pass"] and not rep["buffering_pass"] and "buffering_pass" in rep["failed"]


def test_covered_mask_matches_brute_force(rng):
    K = random_hpoly(2, rng)
    C = 0.8 * sample_uniform(K, rng, 30)
    cov = Covering(K, K, 2.0, 0.0, [CoveringElement(c, 0.5, 0) for c in C])
    X = sample_uniform(K, rng, 3000)
    brute = np.zeros(len(X), dtype=bool)
    for m in cov.regions():
        brute |= m.contains(X)
    assert np.array_equal(covered_mask(cov, X), brute)
