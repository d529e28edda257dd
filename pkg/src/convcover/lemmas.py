"""
Property suites for the geometric facts the covering construction relies on.

Each check draws random configurations over a fixed family of bodies
(square, disk, random polytopes, ellipse, l1 ball; n = 2, 3) and counts
violations.  Polytope cases are decided exactly (LP or vertex enumeration);
smooth bodies use closed forms where they exist and dense boundary sampling
otherwise.
"""
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.special import comb

from .bodies import (Ellipsoid, HPolytope, LpBall, VPolytope, difference_body,
                     random_directions, sample_uniform)
from .caps import (cap_sample, cap_volume, cap_with_width, expand_cap,
                   min_width_cap, ray_distance, representative_cap, similar_caps)
from .macbeath import MacbeathBody, MacbeathRegion, build_mnet, mac_contains
from .errors import InputError

TOL = 1e-9
VOL_RTOL = 1e-8   # relative float slack for exact-volume comparisons

# frozen after one calibration run: the 2-D value sits just below the triangle's
# 27 / (4 pi^2), the 3-D one below the simplex's 256 / (36 omega_3^2); the cap
# product minimum over 6 x 200 configurations was 0.068
MAHLER_KAPPA = {2: 0.68, 3: 0.40}
CAP_PRODUCT_KAPPA = 0.03


@dataclass
class CheckResult:
    name: str
    trials: int = 0
    violations: int = 0
    worst_margin: float = math.inf
    method: str = "exact"
    seconds: float = 0.0
    notes: dict = field(default_factory=dict)

    @property
    def passed(self):
        return self.violations == 0 and self.trials > 0

    def record(self, margin):
        """Margin >= 0 means the property holds for this trial."""
        self.trials += 1
        self.worst_margin = min(self.worst_margin, float(margin))
        if margin < -TOL:
            self.violations += 1

    def to_json(self):
        return {"name": self.name, "trials": self.trials, "violations": self.violations,
                "worst_margin": self.worst_margin, "method": self.method,
                "seconds": round(self.seconds, 3), "pass": self.passed}


# --- body family -----------------------------------------------------------------

def random_polytope(n, rng, centered=False):
    """Hull of random points around the origin (origin strictly inside)."""
    while True:
        k = int(rng.integers(n + 3, 4 * n + 6))
        P = rng.standard_normal((k, n)) * rng.uniform(0.5, 1.5, n)
        if centered:
            P -= P.mean(axis=0)
        try:
            V = VPolytope(P)
        except Exception:
            continue
        H = V.to_hpoly()
        if np.all(H.b > 0.05 * np.abs(H.A).sum(axis=1)):
            if centered:
                H = H.translated(-H.centroid())
            return H


def random_ellipse(n, rng, centered=True):
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    S = Q @ np.diag(rng.uniform(0.3, 2.0, n)) @ Q.T
    c = np.zeros(n) if centered else rng.uniform(-0.3, 0.3, n) / np.sqrt(np.diag(S))
    return Ellipsoid(c, S)


def body_family(n, rng, centered=False):
    """(name, body) pairs; random members are redrawn on every call."""
    return [
        ("square", HPolytope(np.vstack([np.eye(n), -np.eye(n)]), np.ones(2 * n))),
        ("disk", Ellipsoid.ball(n)),
        ("polytope", random_polytope(n, rng, centered)),
        ("ellipse", random_ellipse(n, rng, centered=centered)),
        ("l1", LpBall(n, 1).as_polytope()),
    ]


def _configs(rng, trials, dims=(2, 3), centered=False):
    """Round-robin over (n, body) so every family member gets trials."""
    names = ["square", "disk", "polytope", "ellipse", "l1"]
    k = 0
    while k < trials:
        for n in dims:
            fam = dict(body_family(n, rng, centered))
            for name in names:
                if k >= trials:
                    return
                yield n, name, fam[name]
                k += 1


def _is_poly(body):
    return isinstance(body, (HPolytope, VPolytope))


def _random_cap(body, rng, lo, hi):
    u = random_directions(rng, body.dim, 1)[0]
    return cap_with_width(body, u, rng.uniform(lo, hi))


def _point_near(region_body, target, scale, rng, attempts=200):
    """A center x with target in M^scale(x): bisect outward from target along a random direction."""
    d = random_directions(rng, region_body.dim, 1)[0]
    lo, hi = 0.0, float(region_body.r_outer) * 2
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        x = target + mid * d
        if region_body.contains(x) and MacbeathRegion(region_body, x, scale).contains(target):
            lo = mid
        else:
            hi = mid
    x = target + lo * rng.random() * d
    return x


def _region_extreme(region, u):
    """max <u, y> over a Macbeath region: vertices for polytopes, else boundary samples and SLSQP."""
    if region._poly is not None:
        return float(np.max(region.vertices() @ u))
    P = region.boundary_points(2000 if region.body.dim == 3 else 720)
    best = float(np.max(P @ u))
    try:
        val, pt = MacbeathBody(region.body, region.center, region.scale).support_point(u)
        best = max(best, float(val + u @ region.center))
    except Exception:
        pass
    return best


def _region_points(region):
    if region._poly is not None:
        return region.vertices()
    return region.boundary_points(2000 if region.body.dim == 3 else 720)


# --- bodies ---------------------------------------------------------------------

def check_rogers_shephard(rng, trials=500):
    """vol(K - K) <= binom(2n, n) vol(K) <= 4^n vol(K), exact volumes of random hulls."""
    res = CheckResult("difference_body_volume")
    for k in range(trials):
        n = 2 + k % 2
        K = VPolytope(rng.standard_normal((int(rng.integers(n + 1, 12)), n)))
        ratio = difference_body(K).exact_volume() / K.exact_volume()
        res.record(comb(2 * n, n) - ratio)
        res.notes["max_ratio_n%d" % n] = max(res.notes.get("max_ratio_n%d" % n, 0.0), ratio)
    return res


def check_mahler_bound(rng, trials=500):
    """vol(K) vol(K*) >= kappa_n omega_n^2 for an arbitrary interior origin."""
    from .bodies import unit_ball_volume
    res = CheckResult("volume_product_lower_bound")
    for n, name, K in _configs(rng, trials):
        if name == "ellipse":
            K = random_ellipse(n, rng, centered=True)
        prod = K.exact_volume() * K.polar().exact_volume() / unit_ball_volume(n) ** 2
        res.record(prod - MAHLER_KAPPA[n])
        key = "min_n%d" % n
        res.notes[key] = min(res.notes.get(key, math.inf), prod)
    return res


# --- caps -----------------------------------------------------------------------

def check_ray_width(rng, trials=500):
    """ray(p) <= width(C) for p in a cap C avoiding the origin."""
    res = CheckResult("ray_at_most_width")
    for n, name, K in _configs(rng, trials):
        C = _random_cap(K, rng, 0.01, 0.95)
        P = cap_sample(K, C, rng, 20)
        res.record(C.relative_width - float(np.max(ray_distance(K, P))))
    return res


def check_min_width_cap(rng, trials=500):
    """The cap through p parallel to the support plane above p has width ray(p) and is the thinnest through p."""
    res = CheckResult("min_width_cap")
    for n, name, K in _configs(rng, trials):
        p = sample_uniform(K, rng, 1)[0]
        C = min_width_cap(K, p)
        r = float(ray_distance(K, p))
        U = random_directions(rng, n, 100)
        U = U[U @ p > 0]
        h = K.support_values(U)
        widths = (h - U @ p) / h
        res.record(min(TOL - abs(C.relative_width - r), float(np.min(widths)) - C.relative_width))
    return res


def _section_area(body, cap):
    """(n-1)-volume of the base of the cap."""
    n = body.dim
    u = cap.normal
    Q, _ = np.linalg.qr(np.column_stack([u, np.eye(n)]))
    T = Q[:, 1:]
    x0 = cap.offset * u
    if _is_poly(body):
        A, b = body.A @ T, body.b - body.A @ x0
        if n == 2:
            # segment: interval of s with A s <= b
            lo = np.max(np.where(A[:, 0] < 0, b / np.where(A[:, 0] < 0, A[:, 0], 1), -np.inf))
            hi = np.min(np.where(A[:, 0] > 0, b / np.where(A[:, 0] > 0, A[:, 0], 1), np.inf))
            return max(0.0, hi - lo)
        return HPolytope(A, b).exact_volume()
    if isinstance(body, Ellipsoid):
        Q2 = body.shape
        d0 = x0 - body.center
        M = T.T @ Q2 @ T
        g = T.T @ Q2 @ d0
        k = d0 @ Q2 @ d0 - g @ np.linalg.solve(M, g)
        if k >= 1:
            return 0.0
        from .bodies import unit_ball_volume
        return unit_ball_volume(n - 1) * (1 - k) ** ((n - 1) / 2) / math.sqrt(np.linalg.det(M))
    raise InputError("no exact section for %s" % type(body).__name__)


def check_cap_volume_bounds(rng, trials=500):
    """a w / n <= vol(C) <= 2^(n-1) a w for half-shallow caps."""
    res = CheckResult("cap_volume_bounds")
    for n, name, K in _configs(rng, trials):
        C = _random_cap(K, rng, 0.01, 0.5)
        a = _section_area(K, C)
        w = C.absolute_width
        v = cap_volume(C)
        scale = max(v, 1e-300)
        res.record(min(v - a * w / n, 2 ** (n - 1) * a * w - v) / scale + VOL_RTOL)
    return res


def check_cap_expansion_volume(rng, trials=500):
    """vol(C^lam) <= lam^n vol(C) for lam in {2, 4}."""
    res = CheckResult("cap_expansion_volume")
    for k, (n, name, K) in enumerate(_configs(rng, trials)):
        lam = 2.0 if k % 2 == 0 else 4.0
        C = _random_cap(K, rng, 0.005, 0.9)
        v = cap_volume(C)
        res.record((lam ** n * v - cap_volume(expand_cap(C, lam))) / max(v, 1e-300) + VOL_RTOL)
    return res


def _nested_caps(K, rng):
    """Caps C1 inside C2 with different normals; C2 is the largest cap with its normal containing C1."""
    while True:
        C1 = _random_cap(K, rng, 0.02, 0.4)
        u = C1.normal + rng.uniform(0.05, 0.8) * random_directions(rng, K.dim, 1)[0]
        u /= np.linalg.norm(u)
        from .caps import cap_min_linear
        m = cap_min_linear(C1, u)
        h = K.support_point(u)[0]
        off = m - rng.uniform(0.0, 0.3) * (h - m)
        if 0 < off < h:
            from .caps import Cap
            return C1, Cap(K, u, off, h, K.support_point(u)[1])


def check_cap_containment_expansion(rng, trials=500):
    """C1 inside C2 implies C1^lam inside C2^lam."""
    from .caps import cap_min_linear
    res = CheckResult("cap_containment_expansion")
    for k, (n, name, K) in enumerate(_configs(rng, trials)):
        lam = (1.5, 2.0, 4.0)[k % 3]
        C1, C2 = _nested_caps(K, rng)
        E1, E2 = expand_cap(C1, lam), expand_cap(C2, lam)
        if E2.full_body:
            res.record(0.0)
            continue
        res.record(cap_min_linear(E1, E2.normal) - E2.offset)
    return res


def check_representative_similar(rng, trials=500, factor=8):
    """Representative caps of two points in M^{1/5}(y), y shallow in K*, are `factor`-similar."""
    res = CheckResult("representative_caps_%d_similar" % factor)
    for k, (n, name, K) in enumerate(_configs(rng, trials)):
        eps = (1.0 / 32, 1.0 / 64)[k % 2]
        Ks = K.polar()
        u = random_directions(rng, n, 1)[0]
        y = u / Ks.gauge(u) * (1.0 - eps * rng.random())
        region = MacbeathRegion(Ks, y, 0.2)
        P = _region_points(region)
        x, z = P[rng.integers(len(P))], P[rng.integers(len(P))]
        Cz = representative_cap(K, Ks, z, eps).cap
        if factor == 8:
            Cx = representative_cap(K, Ks, x, eps).cap
        else:
            # a cap of width in [eps/2, 2 eps] whose normal ray passes through x
            Cx = cap_with_width(K, x, eps * 2.0 ** rng.uniform(-1, 1))
        ok = similar_caps(Cx, Cz, factor)
        res.record(0.0 if ok else -1.0)
    return res


# --- Macbeath regions -----------------------------------------------------------

def check_overlap_proxy(rng, trials=500):
    """M^lam(x) meeting M^lam(y), lam <= 1/5, gives M^lam(y) inside M^{4 lam}(x)."""
    res = CheckResult("overlapping_regions_contained")
    for k, (n, name, K) in enumerate(_configs(rng, trials)):
        lam = (0.2, 0.1)[k % 2]
        x = sample_uniform(K, rng, 1)[0]
        Mx = MacbeathRegion(K, x, lam)
        P = _region_points(Mx)
        z = P[rng.integers(len(P))]
        y = _point_near(K, z, lam, rng)
        My = MacbeathRegion(K, y, lam)
        outer = MacbeathRegion(K, x, 4 * lam)
        if _is_poly(K):
            res.record(0.0 if mac_contains(outer, My) else -1.0)
        else:
            res.method = "exact (polytopes) / boundary samples"
            res.record(1.0 - float(np.max(outer.gauge(_region_points(My)))))
    return res


def check_region_in_doubled_cap(rng, trials=500):
    """M^{1/5}(x) meeting a cap C lies in C^2."""
    res = CheckResult("region_in_doubled_cap")
    for n, name, K in _configs(rng, trials):
        C = _random_cap(K, rng, 0.01, 0.45)
        q = cap_sample(K, C, rng)
        x = _point_near(K, q, 0.2, rng)
        E = expand_cap(C, 2.0)
        if E.full_body:
            res.record(0.0)
            continue
        M = MacbeathRegion(K, x, 0.2)
        res.record(-_region_extreme(M, -E.normal) - E.offset)
        if not _is_poly(K):
            res.method = "exact (polytopes) / boundary samples"
    return res


def check_region_in_expanded_cap(rng, trials=500):
    """x in C gives M^lam(x) inside C^{1 + lam}, lam in {1/2, 1}."""
    res = CheckResult("region_in_expanded_cap")
    for k, (n, name, K) in enumerate(_configs(rng, trials)):
        lam = (0.5, 1.0)[k % 2]
        C = _random_cap(K, rng, 0.01, 0.6)
        x = cap_sample(K, C, rng)
        E = expand_cap(C, 1.0 + lam)
        if E.full_body:
            res.record(0.0)
            continue
        M = MacbeathRegion(K, x, lam)
        res.record(-_region_extreme(M, -E.normal) - E.offset)
        if not _is_poly(K):
            res.method = "exact (polytopes) / boundary samples"
    return res


def check_ray_comparability(rng, trials=500):
    """x half-shallow and y in M^{1/5}(x): ray(x)/2 <= ray(y) <= 2 ray(x)."""
    res = CheckResult("ray_comparability")
    for n, name, K in _configs(rng, trials):
        u = random_directions(rng, n, 1)[0]
        r = 0.5 * 10 ** rng.uniform(-3, 0)
        x = u / K.gauge(u) * (1.0 - r)
        rx = float(ray_distance(K, x))
        M = MacbeathRegion(K, x, 0.2)
        ry = ray_distance(K, _region_points(M))
        res.record(min(float(np.min(ry)) - rx / 2, 2 * rx - float(np.max(ry))) / rx)
        if not _is_poly(K):
            res.method = "exact (polytopes) / boundary samples"
    return res


def check_mnet_packing_buffering(rng, trials=500, candidates=24, c=2.0):
    """Greedy MNets: 1/(4c) regions pairwise disjoint; unit regions inside the body.

    Disjointness is re-checked independently of the predicate used by the
    greedy pass: sampled points of each region must avoid every other region.
    """
    res = CheckResult("mnet_packing_buffering", method="sampled (packing) / exact (buffering)")
    for n, name, K in _configs(rng, trials):
        Ke = K.scaled(1.1)
        X = sample_uniform(K, rng, candidates)
        net = build_mnet(Ke, X, c)
        regs = net.regions()
        margin = 1.0
        for i, m in enumerate(regs):
            P = m.boundary_points(64) if m._poly is None else m.vertices()
            inner = m.center + 0.999 * (P - m.center)
            for j, o in enumerate(regs):
                if i != j and np.any(o.contains(inner)):
                    margin = -1.0
        for x in net.centers:
            full = MacbeathRegion(Ke, x, 1.0)
            pts = full.vertices() if full._poly is not None else full.boundary_points(256)
            margin = min(margin, 1.0 - float(np.max(Ke.gauge(pts))) + 1e-12)
        res.record(margin)
        res.notes["mean_net_size"] = res.notes.get("mean_net_size", 0.0) + len(regs) / trials
    return res


# --- cap product ----------------------------------------------------------------

def cap_product_configs(eps, count, rng):
    """Minimum of vol_K(C) vol_{K*}(D) / eps^3 over random plane configurations.

    C: cap of K with width in [eps, 2 eps].  D: cap of K* with width in
    [eps, 2 eps] whose base is crossed in its relative interior by the ray
    along C's normal.  Bodies are well-centered (origin at the centroid).
    """
    n = 2
    stats = []
    names = ["square", "disk", "polytope", "ellipse", "l1"]
    k = 0
    while len(stats) < count:
        name = names[k % len(names)]
        k += 1
        K = dict(body_family(n, rng, centered=True))[name]
        Ks = K.polar()
        u = random_directions(rng, n, 1)[0]
        C = cap_with_width(K, u, eps * rng.uniform(1, 2))
        for _ in range(100):
            v = u + rng.uniform(0, 1.5) * random_directions(rng, n, 1)[0]
            v /= np.linalg.norm(v)
            if v @ u <= 0:
                continue
            D = cap_with_width(Ks, v, eps * rng.uniform(1, 2))
            q = u * (D.offset / (v @ u))
            if Ks.gauge(q) < 1.0 - 1e-9:
                break
        else:
            continue
        val = cap_volume(C) / K.exact_volume() * cap_volume(D) / Ks.exact_volume() / eps ** (n + 1)
        stats.append((val, name))
    vals = np.array([s[0] for s in stats])
    j = int(np.argmin(vals))
    return {"eps": eps, "min": float(vals[j]), "argmin_body": stats[j][1],
            "median": float(np.median(vals)), "count": len(vals)}


def check_cap_product(rng, trials=200, eps_pair=(0.1, 0.05), kappa=CAP_PRODUCT_KAPPA):
    res = CheckResult("cap_volume_product", method="exact volumes")
    out = [cap_product_configs(e, trials, rng) for e in eps_pair]
    for o in out:
        res.trials += o["count"]
        res.worst_margin = min(res.worst_margin, o["min"] - kappa)
        if o["min"] < kappa:
            res.violations += 1
    shrink = out[0]["min"] / out[1]["min"]
    res.notes = {"per_eps": out, "shrink": shrink, "kappa": kappa}
    if shrink > 2.0:
        res.violations += 1
    return res


SUITES = {
    "bodies": [check_rogers_shephard],
    "caps": [check_ray_width, check_min_width_cap, check_cap_volume_bounds,
             check_cap_expansion_volume, check_cap_containment_expansion,
             check_representative_similar,
             lambda rng, trials: check_representative_similar(rng, trials, factor=16)],
    "macbeath": [check_overlap_proxy, check_region_in_doubled_cap, check_region_in_expanded_cap,
                 check_ray_comparability, check_mnet_packing_buffering],
    "mahler": [check_mahler_bound, check_cap_product],
}


def run_suite(suite="all", trials=500, seed=0):
    """Run a named suite; returns the list of CheckResult."""
    if suite == "all":
        fns = [f for k in ("bodies", "caps", "macbeath", "mahler") for f in SUITES[k]]
    elif suite in SUITES:
        fns = SUITES[suite]
    else:
        raise InputError("unknown suite %r" % suite)
    streams = np.random.SeedSequence(seed).spawn(len(fns))
    results = []
    for f, s in zip(fns, streams):
        t0 = time.perf_counter()
        r = f(np.random.default_rng(s), trials)
        r.seconds = time.perf_counter() - t0
        results.append(r)
    return results
