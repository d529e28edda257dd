"""
Macbeath regions, their predicates, greedy MNets and covering verification.

M^lam(x) = x + lam * ((K - x) & (x - K)).  For polytopes every predicate is
an exact LP / vertex computation; for smooth bodies the region is handled
through its gauge, which the body answers in closed form.
"""
import logging
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize
from scipy.spatial import HalfspaceIntersection

from .bodies import (FEAS_TOL, LP_TOL, ConvexBody, HPolytope, LpBall, _Polytope,
                     fibonacci_directions, sample_uniform)
from .errors import InputError

logger = logging.getLogger(__name__)


def polytope_form(body):
    """The body as a polytope if it has an exact polyhedral form, else None."""
    if isinstance(body, _Polytope):
        return body
    if isinstance(body, LpBall) and body.as_polytope() is not None:
        return body.as_polytope()
    return None


class MacbeathRegion:
    """M^scale(center) of ``body``."""

    def __init__(self, body, center, scale):
        center = np.asarray(center, dtype=float)
        if center.shape != (body.dim,):
            raise InputError("dimension mismatch")
        if not scale > 0:
            raise InputError("scale must be positive")
        self.body = body
        self.center = center
        self.scale = float(scale)
        self._poly = polytope_form(body)

    def contains(self, y, tol=FEAS_TOL):
        y = np.asarray(y, dtype=float)
        d = (y - self.center) / self.scale
        return self.body.contains(self.center + d, tol) & self.body.contains(self.center - d, tol)

    def gauge(self, y):
        """Gauge of the region about its own center (<= 1 iff inside)."""
        v = np.asarray(y, dtype=float) - self.center
        g1 = self.body.gauge_from(self.center, v)
        g2 = self.body.gauge_from(self.center, -v)
        return np.maximum(g1, g2) / self.scale

    def rescaled(self, scale):
        return MacbeathRegion(self.body, self.center, scale)

    def halfspaces(self):
        """(A, b) of the region for polytope bodies."""
        if self._poly is None:
            raise InputError("region has no polyhedral form")
        A, b = self._poly.A, self._poly.b
        s = self.scale * (b - A @ self.center)
        Ax = A @ self.center
        return np.vstack([A, -A]), np.concatenate([s + Ax, s - Ax])

    def vertices(self):
        A, b = self.halfspaces()
        hs = HalfspaceIntersection(np.column_stack([A, -b]), self.center)
        return hs.intersections

    def extents(self):
        """Half-widths of an axis-aligned box about the center containing the region."""
        eye = np.eye(self.body.dim)
        hp = self.body.support_values(eye)
        hm = self.body.support_values(-eye)
        return self.scale * np.minimum(hp - self.center, hm + self.center)

    def centered_body(self):
        """The region translated so its center is the origin, as a ConvexBody."""
        if self._poly is not None:
            A, b = self._poly.A, self._poly.b
            s = self.scale * (b - A @ self.center)
            return HPolytope(np.vstack([A, -A]), np.concatenate([s, s]), config=self.body.config)
        return MacbeathBody(self.body, self.center, self.scale)

    def boundary_points(self, count=512):
        D = fibonacci_directions(self.body.dim, count)
        g = self.gauge(self.center + D)
        return self.center + D / g[:, None]

    def __repr__(self):
        return "MacbeathRegion(center=%s, scale=%.4g)" % (np.array2string(self.center, precision=4), self.scale)


class MacbeathBody(ConvexBody):
    """Origin-centred copy of a Macbeath region of a non-polyhedral body."""

    kind = "macbeath"

    def __init__(self, body, center, scale):
        super().__init__(body.dim, config=body.config)
        self.body = body
        self.center = np.asarray(center, dtype=float)
        self.scale = float(scale)

    def gauge_from(self, x, v):
        if np.any(x):
            return self._bisect_gauge(x, v)
        v = np.asarray(v, dtype=float)
        return np.maximum(self.body.gauge_from(self.center, v),
                          self.body.gauge_from(self.center, -v)) / self.scale

    def contains(self, x, tol=FEAS_TOL):
        return self.gauge(x) <= 1.0 + tol

    def support_bound(self, u):
        u = np.asarray(u, dtype=float)
        hp = self.body.support_point(u)[0]
        hm = self.body.support_point(-u)[0]
        return self.scale * min(hp - u @ self.center, hm + u @ self.center)

    def support_point(self, u):
        u = np.asarray(u, dtype=float)
        c, lam, body = self.center, self.scale, self.body
        cons = [{"type": "ineq", "fun": lambda v: 1.0 - body.gauge_from(c, v) / lam},
                {"type": "ineq", "fun": lambda v: 1.0 - body.gauge_from(c, -v) / lam}]
        # start from a boundary point in direction u
        v0 = u / self.gauge(u) if np.any(u) else np.zeros(self.dim)
        res = optimize.minimize(lambda v: -(u @ v), 0.99 * v0, constraints=cons, method="SLSQP",
                                options={"ftol": 1e-13, "maxiter": 500})
        v = res.x
        v = v / max(float(self.gauge(v)), 1e-300)
        return float(u @ v), v

    def normal_at(self, p):
        # gradient of the active half by central differences
        h = 1e-7 * max(1.0, np.linalg.norm(p))
        g = np.array([(self.gauge(p + h * e) - self.gauge(p - h * e)) / (2 * h) for e in np.eye(self.dim)])
        return g

    def polar(self):
        from .bodies import PolarBody
        return PolarBody(self)


def mac_membership(region, y):
    res = region.contains(y)
    return bool(res) if np.ndim(res) == 0 else res


def mac_as_hpoly(body, x, lam):
    """Exact H-form of M^lam(x) for a polytope body (origin need not be inside)."""
    poly = polytope_form(body)
    if poly is None:
        raise InputError("body is not a polytope")
    A, b = MacbeathRegion(poly, x, lam).halfspaces()
    return HPolytope(A, b, config=body.config)


def _boxes_disjoint(r1, r2, e1=None, e2=None):
    e1 = r1.extents() if e1 is None else e1
    e2 = r2.extents() if e2 is None else e2
    return bool(np.any(np.abs(r1.center - r2.center) > e1 + e2 + 1e-12))


def mac_disjoint(m1, m2, e1=None, e2=None):
    """True iff the closed regions do not meet.

    Polytope bodies: LP feasibility.  Otherwise a small convex program on the
    region gauges; any doubt reports "not disjoint".
    """
    if _boxes_disjoint(m1, m2, e1, e2):
        return True
    if bool(m1.contains(m2.center)) or bool(m2.contains(m1.center)):
        return False
    if m1._poly is None or m2._poly is None:
        if _separated(m1, m2):
            return True
        if _segment_meets(m1, m2):
            return False
    if m1._poly is not None and m2._poly is not None:
        A1, b1 = m1.halfspaces()
        A2, b2 = m2.halfspaces()
        A = np.vstack([A1, A2])
        b = np.concatenate([b1, b2])
        # closed-region convention: relax by the LP tolerance so touching counts
        b = b + LP_TOL * np.maximum(1.0, np.abs(b))
        res = optimize.linprog(np.zeros(A.shape[1]), A_ub=A, b_ub=b,
                               bounds=[(None, None)] * A.shape[1], method="highs")
        return res.status == 2
    return _min_joint_gauge(m1, m2) > 1.0 + 1e-7


_SEP_DIRS = {}


def _separated(m1, m2):
    """Certificate of disjointness: a direction u whose support bounds separate the regions.

    The support of M^lam(x) in direction u is at most
    <u, x> + lam * min(h(u) - <u, x>, h(-u) + <u, x>).
    """
    n = m1.body.dim
    if n not in _SEP_DIRS:
        _SEP_DIRS[n] = fibonacci_directions(n, 64 if n == 2 else 256)
    d = m2.center - m1.center
    U = np.vstack([d / np.linalg.norm(d), _SEP_DIRS[n]])
    U = np.vstack([U, -U])
    hp1 = m1.body.support_values(U)
    hm1 = m1.body.support_values(-U)
    ux1 = U @ m1.center
    ux2 = U @ m2.center
    top1 = ux1 + m1.scale * np.minimum(hp1 - ux1, hm1 + ux1)
    hp2 = hp1 if m2.body is m1.body else m2.body.support_values(U)
    hm2 = hm1 if m2.body is m1.body else m2.body.support_values(-U)
    bot2 = ux2 - m2.scale * np.minimum(hm2 + ux2, hp2 - ux2)
    return bool(np.any(top1 < bot2 - 1e-12 * (1 + np.abs(bot2))))


def _segment_meets(m1, m2, steps=60):
    """Certificate of intersection: a point of the center segment inside both regions."""
    x1, x2 = m1.center, m2.center
    lo, hi = 0.0, 1.0
    for _ in range(steps):
        t = 0.5 * (lo + hi)
        y = x1 + t * (x2 - x1)
        if float(m1.gauge(y)) < float(m2.gauge(y)):
            lo = t
        else:
            hi = t
    y = x1 + 0.5 * (lo + hi) * (x2 - x1)
    return float(m1.gauge(y)) <= 1.0 and float(m2.gauge(y)) <= 1.0


def _min_joint_gauge(m1, m2):
    """min over y of max(gauge_1(y), gauge_2(y))."""
    n = m1.body.dim
    x1, x2 = m1.center, m2.center
    # initial point on the segment weighted by scale
    t = m1.scale / (m1.scale + m2.scale)
    y0 = x1 + t * (x2 - x1)
    s0 = float(max(m1.gauge(y0), m2.gauge(y0)))
    fns = []
    for m in (m1, m2):
        for sgn in (1.0, -1.0):
            fns.append((m, sgn))

    def con(z):
        y, s = z[:n], z[n]
        return np.array([s - m.body.gauge_from(m.center, sgn * (y - m.center)) / m.scale for m, sgn in fns])

    res = optimize.minimize(lambda z: z[n], np.append(y0, s0), method="SLSQP",
                            constraints=[{"type": "ineq", "fun": con}],
                            options={"ftol": 1e-12, "maxiter": 300})
    y = res.x[:n]
    val = float(max(m1.gauge(y), m2.gauge(y)))
    return min(val, s0)


def mac_contains(outer, inner, count=1000):
    """Whether ``inner`` lies in ``outer`` (same body).

    Exact for polytopes (vertices of ``inner`` against the constraints of
    ``outer``); otherwise ``count`` boundary points of ``inner``.
    """
    if outer._poly is not None and inner._poly is not None:
        A, b = outer.halfspaces()
        V = inner.vertices()
        return bool(np.all(V @ A.T <= b + LP_TOL * np.maximum(1.0, np.abs(b))))
    P = inner.boundary_points(count)
    return bool(np.all(outer.gauge(P) <= 1.0 + 1e-9))


# --- MNets and coverings ---------------------------------------------------------

@dataclass
class MNet:
    ambient: ConvexBody
    centers: np.ndarray
    c: float
    skipped: int = 0

    @property
    def packing_scale(self):
        return 1.0 / (4.0 * self.c)

    @property
    def covering_scale(self):
        return 1.0 / self.c

    def regions(self, scale=None):
        s = self.packing_scale if scale is None else scale
        return [MacbeathRegion(self.ambient, x, s) for x in self.centers]


def build_mnet(ambient, candidates, c):
    """Greedy MNet: keep a candidate iff its 1/(4c) region misses all kept ones."""
    if c < 2:
        raise InputError("c must be >= 2")
    lam = 1.0 / (4.0 * c)
    n = ambient.dim
    kept, kept_ext = [], []
    K_c = np.empty((0, n))
    K_e = np.empty((0, n))
    skipped = 0
    for x in candidates:
        x = np.asarray(x, dtype=float)
        if not float(ambient.gauge(x)) < 1.0:
            skipped += 1
            continue
        m = MacbeathRegion(ambient, x, lam)
        e = m.extents()
        near = np.flatnonzero(np.all(np.abs(K_c - x) <= K_e + e + 1e-12, axis=1))
        if all(mac_disjoint(m, kept[j], e, kept_ext[j]) for j in near):
            kept.append(m)
            kept_ext.append(e)
            K_c = np.vstack([K_c, x])
            K_e = np.vstack([K_e, e])
    if skipped:
        logger.warning("build_mnet skipped %d candidates outside the ambient body", skipped)
    centers = np.array([k.center for k in kept]).reshape(-1, ambient.dim)
    return MNet(ambient, centers, float(c), skipped)


@dataclass
class CoveringElement:
    center: np.ndarray
    scale: float
    layer: int = 0


@dataclass
class Covering:
    ambient: ConvexBody
    target: ConvexBody
    c: float
    eps: float
    elements: list
    mnet: MNet = None
    verified: bool = False
    report: dict = field(default=None, repr=False)

    def __len__(self):
        return len(self.elements)

    def regions(self, expansion=1.0):
        return [MacbeathRegion(self.ambient, e.center, e.scale * expansion) for e in self.elements]

    @property
    def centers(self):
        return np.array([e.center for e in self.elements]).reshape(-1, self.ambient.dim)

    @property
    def scales(self):
        return np.array([e.scale for e in self.elements], dtype=float)

    def layer_histogram(self):
        return dict(sorted(Counter(int(e.layer) for e in self.elements).items()))


def hitting_to_cover(ambient, hits, c, target=None, eps=None, layers=None):
    """Covering {M^{1/c}(y) : y in hits}."""
    if c < 2:
        raise InputError("c must be >= 2")
    hits = np.asarray(hits, dtype=float).reshape(-1, ambient.dim)
    if len(hits):
        g = ambient.gauge(hits)
        if np.any(g >= 1.0):
            raise InputError("hit point outside the ambient body")
    layers = np.zeros(len(hits), dtype=int) if layers is None else np.asarray(layers, dtype=int)
    elements = [CoveringElement(h.copy(), 1.0 / c, int(l)) for h, l in zip(hits, layers)]
    return Covering(ambient, ambient if target is None else target, float(c),
                    0.0 if eps is None else float(eps), elements)


def element_boxes(body, centers, scales):
    """(lo, hi) corners of axis-aligned boxes containing M^scale(center) for each row."""
    C = np.asarray(centers, dtype=float).reshape(-1, body.dim)
    eye = np.eye(body.dim)
    hp = body.support_values(eye)
    hm = body.support_values(-eye)
    E = np.asarray(scales, dtype=float)[:, None] * np.minimum(hp - C, hm + C)
    return C - E, C + E


def covered_mask(cov, points, expansion=1.0):
    """Boolean mask of points lying in at least one (expanded) element."""
    P = np.asarray(points, dtype=float)
    covered = np.zeros(len(P), dtype=bool)
    if not cov.elements or not len(P):
        return covered
    K = cov.ambient
    C = cov.centers
    lam = cov.scales * expansion
    lo, hi = element_boxes(K, C, lam)
    order = np.argsort(P[:, 0], kind="stable")
    xs = P[order, 0]
    first = np.searchsorted(xs, lo[:, 0], "left")
    last = np.searchsorted(xs, hi[:, 0], "right")
    for j in np.flatnonzero(first < last):
        cand = order[first[j]:last[j]]
        cand = cand[~covered[cand]]
        if not len(cand):
            continue
        Q = P[cand]
        cand = cand[np.all((Q >= lo[j]) & (Q <= hi[j]), axis=1)]
        if len(cand):
            D = (P[cand] - C[j]) / lam[j]
            covered[cand[K.contains(C[j] + D) & K.contains(C[j] - D)]] = True
    return covered


def verify_covering(cov, rng, samples=100000, threshold=0.999, packing=None):
    """Coverage rate, buffering and (for MNet provenance) packing of a covering."""
    if samples < 1000:
        raise InputError("need at least 1000 samples")
    X = sample_uniform(cov.target, rng, samples)
    mask = covered_mask(cov, X)
    rate = float(mask.mean())

    # M^lam(x) lies in x + lam (K - x), inside K for interior x and lam <= 1
    buffering_ok = True
    worst = -np.inf
    if cov.elements:
        centers = cov.centers
        lam_all = cov.c * np.array([e.scale for e in cov.elements])
        g = np.asarray(cov.ambient.gauge(centers), dtype=float)
        if np.any(g >= 1.0):
            buffering_ok = False
        worst = float(np.max(np.where(lam_all <= 1.0, (g - 1.0) * lam_all, -np.inf)))
        for k in np.flatnonzero((lam_all > 1.0) & (g < 1.0)):
            m = MacbeathRegion(cov.ambient, centers[k], lam_all[k])
            if m._poly is not None:
                A, b = m._poly.A, m._poly.b
                viol = float(np.max((m.vertices() @ A.T - b) / np.maximum(1.0, np.abs(b))))
            else:
                viol = float(np.max(cov.ambient.gauge(m.boundary_points(64)) - 1.0))
            worst = max(worst, viol)
            if viol > 1e-9:
                buffering_ok = False

    check_packing = cov.mnet is not None if packing is None else packing
    packing_ok = None
    if check_packing and cov.mnet is not None:
        packing_ok = verify_packing(cov.mnet)

    report = {
        "elements": len(cov.elements),
        "layers": {str(k): v for k, v in cov.layer_histogram().items()},
        "coverage": rate,
        "coverage_samples": int(samples),
        "coverage_threshold": threshold,
        "coverage_pass": bool(rate >= threshold),
        "buffering_pass": bool(buffering_ok),
        "buffering_max_violation": worst if np.isfinite(worst) else 0.0,
        "packing_pass": packing_ok,
    }
    report["pass"] = bool(report["coverage_pass"] and report["buffering_pass"] and packing_ok is not False)
    failed = [k for k in ("coverage_pass", "buffering_pass", "packing_pass") if report[k] is False]
    report["failed"] = failed
    cov.verified = report["pass"]
    cov.report = report
    return report


def verify_packing(mnet):
    """Pairwise disjointness of the 1/(4c) regions of an MNet."""
    regions = mnet.regions()
    if not regions:
        return True
    C = np.array([m.center for m in regions])
    E = np.array([m.extents() for m in regions])
    for i in range(len(regions)):
        near = np.flatnonzero(np.all(np.abs(C[i + 1:] - C[i]) <= E[i + 1:] + E[i] + 1e-12, axis=1)) + i + 1
        for j in near:
            if not mac_disjoint(regions[i], regions[j], E[i], E[j]):
                return False
    return True
