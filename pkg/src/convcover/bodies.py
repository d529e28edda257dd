"""
Convex bodies and the oracle contract used by every other module.

A body is immutable.  All of them answer ``contains``, ``gauge_from`` (the
gauge about an arbitrary interior point), ``support`` and
``normal_at``; everything else (gauge about the origin, boundary
rays, chords, sampling) is derived from those.  Native representations
answer exactly; only the generic fallbacks bisect.

Points may be passed one at a time (shape ``(n,)``) or stacked
(shape ``(m, n)``); results follow the same convention.
"""
import itertools
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize
from scipy.spatial import ConvexHull, HalfspaceIntersection
from scipy.special import gamma as gamma_fn

from .errors import InputError, SamplingError, UnsupportedRepresentationError

logger = logging.getLogger(__name__)

FEAS_TOL = 1e-12
LP_TOL = 1e-9


def unit_ball_volume(n):
    """Volume of the Euclidean unit ball in R^n."""
    return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)


_OMEGA = {}


def omega(n):
    if n not in _OMEGA:
        _OMEGA[n] = unit_ball_volume(n)
    return _OMEGA[n]


@dataclass(frozen=True)
class OracleConfig:
    """Slack and search parameters for the oracle fallbacks.

    ``membership_tolerance`` is the Euclidean slack of a weak oracle; exact
    representations ignore it.
    """
    membership_tolerance: float = 1e-10
    ray_search_tolerance: float = 1e-13
    max_bisection_steps: int = 200

    def __post_init__(self):
        if not (self.membership_tolerance > 0 and self.ray_search_tolerance > 0
                and self.max_bisection_steps > 0):
            raise InputError("oracle parameters must be positive")


DEFAULT_CONFIG = OracleConfig()


class Hyperplane:
    """The plane <normal, x> = offset with a unit normal and offset > 0."""

    __slots__ = ("normal", "offset")

    def __init__(self, normal, offset):
        normal = np.asarray(normal, dtype=float)
        nrm = np.linalg.norm(normal)
        if nrm == 0 or not np.all(np.isfinite(normal)):
            raise InputError("hyperplane normal must be a finite nonzero vector")
        if abs(nrm - 1.0) > 1e-12:
            raise InputError("hyperplane normal must have unit length")
        if not offset > 0:
            raise InputError("hyperplane must not pass through or behind the origin")
        self.normal = normal
        self.offset = float(offset)

    @classmethod
    def from_vector(cls, w, offset):
        """Plane <w, x> = offset, renormalised to a unit normal."""
        w = np.asarray(w, dtype=float)
        nrm = np.linalg.norm(w)
        if nrm == 0:
            raise InputError("zero normal")
        return cls(w / nrm, offset / nrm)

    def side(self, x):
        return np.asarray(x, dtype=float) @ self.normal - self.offset

    def __repr__(self):
        return "Hyperplane(normal=%s, offset=%.6g)" % (np.array2string(self.normal, precision=6), self.offset)


def _as_points(x, n):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != n or x.ndim > 2:
        raise InputError("dimension mismatch: expected points in R^%d, got shape %s" % (n, x.shape))
    return x


def fibonacci_directions(n, count):
    """Roughly uniform unit vectors (deterministic)."""
    if n == 2:
        t = 2 * np.pi * (np.arange(count) + 0.5) / count
        return np.column_stack([np.cos(t), np.sin(t)])
    if n == 3:
        i = np.arange(count) + 0.5
        phi = np.arccos(1 - 2 * i / count)
        theta = np.pi * (1 + 5 ** 0.5) * i
        return np.column_stack([np.cos(theta) * np.sin(phi), np.sin(theta) * np.sin(phi), np.cos(phi)])
    rng = np.random.default_rng(12345)
    u = rng.standard_normal((count, n))
    return u / np.linalg.norm(u, axis=1, keepdims=True)


def random_directions(rng, n, count):
    u = rng.standard_normal((count, n))
    return u / np.linalg.norm(u, axis=1, keepdims=True)


class ConvexBody:
    """Base class.  Subclasses implement the exact primitives."""

    kind = "body"

    def __init__(self, dim, r=None, r_outer=None, config=None):
        if dim < 1:
            raise InputError("dimension must be positive")
        self.dim = int(dim)
        self.config = config or DEFAULT_CONFIG
        self._r = r
        self._r_outer = r_outer
        self._cache = {}

    # -- primitives ---------------------------------------------------------
    def contains(self, x, tol=FEAS_TOL):
        raise NotImplementedError

    def support_point(self, u):
        """Return (h(u), argmax) for a single direction."""
        raise NotImplementedError

    def support_values(self, U):
        U = np.atleast_2d(np.asarray(U, dtype=float))
        return np.array([self.support_point(u)[0] for u in U])

    def normal_at(self, p):
        """An outward normal of a supporting hyperplane at the boundary point p."""
        raise NotImplementedError

    def supporting_normal(self, p0):
        """Vector g with <g, p0> = 1 and <g, x> <= 1 on the body (p0 on the boundary)."""
        g = self.normal_at(np.asarray(p0, dtype=float))
        return g / (g @ p0)

    def gauge_from(self, x, v):
        """inf{s > 0 : x + v/s in K} for an interior point x.

        Generic fallback: bisection along the chord using ``contains``.
        """
        return self._bisect_gauge(x, v)

    # -- derived ------------------------------------------------------------
    def gauge(self, x):
        x = _as_points(x, self.dim)
        return self.gauge_from(np.zeros(self.dim), x)

    def interior_point(self):
        return np.zeros(self.dim)

    def chord(self, x, d):
        """Parameter interval [t0, t1] with x + t d in K."""
        g_plus = self.gauge_from(x, d)
        g_minus = self.gauge_from(x, -np.asarray(d))
        with np.errstate(divide="ignore"):
            return -1.0 / g_minus, 1.0 / g_plus

    def scaled(self, s):
        return AffineImage(self, s * np.eye(self.dim))

    def translated(self, t):
        return AffineImage(self, np.eye(self.dim), t)

    def polar(self):
        return PolarBody(self)

    def exact_volume(self):
        return None

    def bounding_box(self):
        if "bbox" not in self._cache:
            eye = np.eye(self.dim)
            hi = self.support_values(eye)
            lo = -self.support_values(-eye)
            self._cache["bbox"] = (lo, hi)
        return self._cache["bbox"]

    @property
    def r(self):
        if self._r is None:
            self._r = self._cached_radii()[0]
        return self._r

    @property
    def r_outer(self):
        if self._r_outer is None:
            self._r_outer = self._cached_radii()[1]
        return self._r_outer

    def _cached_radii(self):
        if "radii" not in self._cache:
            self._cache["radii"] = self._radii()
        return self._cache["radii"]

    def _radii(self):
        # inradius about O is min_u h(u), circumradius is max_u h(u)
        U = fibonacci_directions(self.dim, 4000 if self.dim <= 3 else 20000)
        h = self.support_values(U)
        lo = self._refine_extreme(U[np.argmin(h)], +1)
        hi = self._refine_extreme(U[np.argmax(h)], -1)
        return min(lo, h.min()) * (1 - 1e-9), max(hi, h.max()) * (1 + 1e-9)

    def _refine_extreme(self, u0, sign):
        def f(w):
            nrm = np.linalg.norm(w)
            return sign * self.support_point(w / nrm)[0] if nrm > 0 else np.inf
        res = optimize.minimize(f, u0, method="Nelder-Mead",
                                options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 2000})
        return sign * res.fun

    def _bisect_gauge(self, x, v):
        x = np.asarray(x, dtype=float)
        V = np.atleast_2d(np.asarray(v, dtype=float))
        single = np.asarray(v).ndim == 1
        vn = np.linalg.norm(V, axis=1)
        out = np.zeros(len(V))
        nz = vn > 0
        if np.any(nz):
            D = V[nz] / vn[nz, None]
            lo = np.zeros(len(D))
            hi = np.full(len(D), 2.0 * (self.r_outer + np.linalg.norm(x)) + 1.0)
            while True:
                inside = self.contains(x + hi[:, None] * D)
                if not np.any(inside):
                    break
                hi = np.where(inside, 2 * hi, hi)
            tol = self.config.ray_search_tolerance
            for _ in range(self.config.max_bisection_steps):
                mid = 0.5 * (lo + hi)
                inside = self.contains(x + mid[:, None] * D)
                lo = np.where(inside, mid, lo)
                hi = np.where(inside, hi, mid)
                if np.all(hi - lo <= tol * np.maximum(hi, 1.0)):
                    break
            out[nz] = vn[nz] / (0.5 * (lo + hi))
        return out[0] if single else out

    def validate(self, samples=256):
        """Check that the origin is interior and r, r' bracket the boundary."""
        if not bool(self.contains(np.zeros(self.dim))):
            raise InputError("origin is not inside the body")
        if not self.r > 0:
            raise InputError("origin is not interior (inner radius %.3g)" % self.r)
        if self.config.membership_tolerance > self.r / 100:
            raise InputError("membership tolerance exceeds r/100")
        U = fibonacci_directions(self.dim, samples)
        d = 1.0 / self.gauge(U)
        if np.any(d < self.r * (1 - 1e-9)) or np.any(d > self.r_outer * (1 + 1e-9)):
            raise InputError("centering radii do not bracket the boundary")
        return True

    def to_json(self):
        raise UnsupportedRepresentationError("%s has no JSON form" % type(self).__name__)


class _Polytope(ConvexBody):
    """Shared machinery for polytopes; holds whichever representation it was given."""

    def _h_rep(self):
        raise NotImplementedError

    def _vertices(self):
        raise NotImplementedError

    @property
    def A(self):
        return self._h_rep()[0]

    @property
    def b(self):
        return self._h_rep()[1]

    @property
    def vertices(self):
        return self._vertices()

    def contains(self, x, tol=FEAS_TOL):
        x = _as_points(x, self.dim)
        A, b = self._h_rep()
        slack = x @ A.T - b
        scale = np.linalg.norm(A, axis=1)
        return np.all(slack <= tol * scale * (1 + np.abs(b) / scale), axis=-1)

    def gauge_from(self, x, v):
        A, b = self._h_rep()
        x = np.asarray(x, dtype=float)
        denom = b - A @ x
        if np.any(denom <= 0):
            raise InputError("gauge requested about a point that is not interior")
        ratios = np.asarray(v, dtype=float) @ A.T / denom
        return np.maximum(ratios.max(axis=-1), 0.0)

    def support_point(self, u):
        V = self._vertices()
        vals = V @ u
        top = vals.max()
        cand = np.flatnonzero(vals >= top - 1e-12 * max(1.0, abs(top)))
        # deterministic: lexicographically smallest maximiser
        pick = cand[np.lexsort(V[cand].T[::-1])[0]]
        return float(vals[pick]), V[pick].copy()

    def support_values(self, U):
        U = np.atleast_2d(np.asarray(U, dtype=float))
        return (U @ self._vertices().T).max(axis=1)

    def normal_at(self, p):
        A, b = self._h_rep()
        units = A / np.linalg.norm(A, axis=1, keepdims=True)
        dist = (A @ p - b) / np.linalg.norm(A, axis=1)
        cand = np.flatnonzero(dist >= dist.max() - 1e-9 * max(1.0, np.abs(b).max()))
        # several facets may be active at a lower-dimensional face: take the
        # lexicographically smallest unit normal
        pick = cand[np.lexsort(np.round(units[cand], 12).T[::-1])[0]]
        return units[pick]

    def _radii(self):
        A, b = self._h_rep()
        r = float(np.min(b / np.linalg.norm(A, axis=1)))
        r_out = float(np.max(np.linalg.norm(self._vertices(), axis=1)))
        return r, r_out

    def bounding_box(self):
        V = self._vertices()
        return V.min(axis=0), V.max(axis=0)

    def exact_volume(self):
        return float(ConvexHull(self._vertices()).volume)

    def interior_point(self):
        A, b = self._h_rep()
        if np.all(b > 0):
            return np.zeros(self.dim)
        return chebyshev_center(A, b)[0]

    def chord(self, x, d):
        A, b = self._h_rep()
        ad = A @ d
        slack = b - A @ x
        with np.errstate(divide="ignore", invalid="ignore"):
            t = slack / ad
        hi = np.min(t[ad > 0]) if np.any(ad > 0) else np.inf
        lo = np.max(t[ad < 0]) if np.any(ad < 0) else -np.inf
        return lo, hi

    def centroid(self):
        """Exact centroid via a triangulation of the hull."""
        V = self._vertices()
        hull = ConvexHull(V)
        base = V.mean(axis=0)
        tot = 0.0
        acc = np.zeros(self.dim)
        for simplex in hull.simplices:
            P = np.vstack([V[simplex], base])
            vol = abs(np.linalg.det(P[:-1] - P[-1])) / math.factorial(self.dim)
            tot += vol
            acc += vol * P.mean(axis=0)
        return acc / tot


def chebyshev_center(A, b):
    """Centre and radius of the largest ball inside {A x <= b}."""
    n = A.shape[1]
    norms = np.linalg.norm(A, axis=1)
    c = np.zeros(n + 1)
    c[-1] = -1.0
    res = optimize.linprog(c, A_ub=np.column_stack([A, norms]), b_ub=b,
                           bounds=[(None, None)] * n + [(0, None)], method="highs")
    if res.status != 0 or res.x[-1] <= 0:
        raise InputError("polytope has empty interior")
    return res.x[:n], res.x[-1]


def _dedupe_rows(A, b, decimals=9):
    nrm = np.linalg.norm(A, axis=1)
    key = np.round(np.column_stack([A / nrm[:, None], b / nrm]), decimals)
    _, idx = np.unique(key, axis=0, return_index=True)
    idx = np.sort(idx)
    return A[idx], b[idx]


def _hull_vertices(points):
    points = np.asarray(points, dtype=float)
    hull = ConvexHull(points)
    V = points[hull.vertices]
    # deterministic ordering
    return V[np.lexsort(V.T[::-1])]


class HPolytope(_Polytope):
    """{x : A x <= b}.  Rows are kept as given."""

    kind = "hpoly"

    def __init__(self, A, b, r=None, r_outer=None, config=None):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        b = np.asarray(b, dtype=float).ravel()
        if A.shape[0] != b.shape[0]:
            raise InputError("A and b disagree in the number of rows")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise InputError("non-finite H-polytope data")
        if np.any(np.linalg.norm(A, axis=1) == 0):
            raise InputError("zero row in A")
        super().__init__(A.shape[1], r, r_outer, config)
        self._A = A
        self._b = b

    def _h_rep(self):
        return self._A, self._b

    def _vertices(self):
        if "V" not in self._cache:
            A, b = self._A, self._b
            p = self.interior_point()
            hs = HalfspaceIntersection(np.column_stack([A, -b]), p)
            V = hs.intersections
            # merge numerically duplicated vertices from degenerate facets
            V = np.unique(np.round(V, 12), axis=0)
            self._cache["V"] = _hull_vertices(V) if len(V) > self.dim else V
        return self._cache["V"]

    def polar(self):
        if np.any(self._b <= 0):
            raise UnsupportedRepresentationError("polar needs the origin strictly inside")
        A, b = _dedupe_rows(self._A, self._b)
        return VPolytope(A / b[:, None], r=1.0 / self.r_outer, r_outer=1.0 / self.r, config=self.config)

    def scaled(self, s):
        return HPolytope(self._A, self._b * s, config=self.config)

    def translated(self, t):
        return HPolytope(self._A, self._b + self._A @ np.asarray(t, dtype=float), config=self.config)

    def linear_image(self, M):
        M = np.asarray(M, dtype=float)
        return HPolytope(self._A @ np.linalg.inv(M), self._b, config=self.config)

    def to_json(self):
        return {"type": "hpoly", "A": self._A.tolist(), "b": self._b.tolist()}


class VPolytope(_Polytope):
    """Convex hull of a finite point set; the vertex list is pruned to the hull."""

    kind = "vpoly"

    def __init__(self, vertices, r=None, r_outer=None, config=None, prune=True):
        V = np.atleast_2d(np.asarray(vertices, dtype=float))
        if not np.all(np.isfinite(V)):
            raise InputError("non-finite vertex data")
        super().__init__(V.shape[1], r, r_outer, config)
        if len(V) <= self.dim:
            raise InputError("need at least n+1 vertices for a full-dimensional polytope")
        if prune:
            try:
                V = _hull_vertices(V)
            except Exception as exc:  # qhull raises its own error type
                raise InputError("degenerate vertex set: %s" % exc) from None
        self._V = V

    def _vertices(self):
        return self._V

    def _h_rep(self):
        if "H" not in self._cache:
            hull = ConvexHull(self._V)
            A = hull.equations[:, :-1]
            b = -hull.equations[:, -1]
            self._cache["H"] = _dedupe_rows(A, b)
        return self._cache["H"]

    def polar(self):
        A, b = self._h_rep()
        if np.any(b <= 0):
            raise UnsupportedRepresentationError("polar needs the origin strictly inside")
        return HPolytope(self._V, np.ones(len(self._V)), r=1.0 / self.r_outer, r_outer=1.0 / self.r,
                         config=self.config)

    def to_hpoly(self):
        A, b = self._h_rep()
        return HPolytope(A, b, config=self.config)

    def scaled(self, s):
        return VPolytope(self._V * s, config=self.config, prune=False)

    def translated(self, t):
        return VPolytope(self._V + np.asarray(t, dtype=float), config=self.config, prune=False)

    def to_json(self):
        return {"type": "vpoly", "vertices": self._V.tolist()}


class Ellipsoid(ConvexBody):
    """{x : (x - c)^T Q (x - c) <= 1} with Q symmetric positive definite."""

    kind = "ellipsoid"

    def __init__(self, center, shape, r=None, r_outer=None, config=None):
        c = np.asarray(center, dtype=float).ravel()
        Q = np.atleast_2d(np.asarray(shape, dtype=float))
        if Q.shape != (len(c), len(c)):
            raise InputError("shape matrix must be n x n")
        if not np.allclose(Q, Q.T, atol=1e-12):
            raise InputError("shape matrix must be symmetric")
        Q = 0.5 * (Q + Q.T)
        try:
            np.linalg.cholesky(Q)
        except np.linalg.LinAlgError:
            raise InputError("shape matrix must be positive definite") from None
        super().__init__(len(c), r, r_outer, config)
        self.center = c
        self.shape = Q
        self.shape_inv = np.linalg.inv(Q)

    @classmethod
    def ball(cls, n, radius=1.0, center=None):
        c = np.zeros(n) if center is None else center
        return cls(c, np.eye(n) / radius ** 2)

    @classmethod
    def axis_aligned(cls, semi_axes, center=None):
        a = np.asarray(semi_axes, dtype=float)
        c = np.zeros(len(a)) if center is None else center
        return cls(c, np.diag(1.0 / a ** 2))

    def contains(self, x, tol=FEAS_TOL):
        d = _as_points(x, self.dim) - self.center
        return np.einsum("...i,ij,...j->...", d, self.shape, d) <= 1.0 + tol

    def gauge_from(self, x, v):
        # positive root of (t v + x - c)^T Q (t v + x - c) = 1, gauge = 1/t
        v = np.asarray(v, dtype=float)
        e = np.asarray(x, dtype=float) - self.center
        gam = e @ self.shape @ e - 1.0
        if gam >= 0:
            raise InputError("gauge requested about a point that is not interior")
        Qe = self.shape @ e
        alpha = np.einsum("...i,ij,...j->...", v, self.shape, v)
        beta = v @ Qe
        disc = np.sqrt(np.maximum(beta * beta - alpha * gam, 0.0))
        return (disc + beta) / (-gam)

    def support_point(self, u):
        u = np.asarray(u, dtype=float)
        w = self.shape_inv @ u
        s = math.sqrt(max(u @ w, 0.0))
        if s == 0:
            return float(u @ self.center), self.center.copy()
        return float(u @ self.center + s), self.center + w / s

    def support_values(self, U):
        U = np.atleast_2d(np.asarray(U, dtype=float))
        return U @ self.center + np.sqrt(np.einsum("ij,jk,ik->i", U, self.shape_inv, U))

    def normal_at(self, p):
        return self.shape @ (p - self.center)

    def interior_point(self):
        return self.center.copy()

    def exact_volume(self):
        return omega(self.dim) / math.sqrt(np.linalg.det(self.shape))

    def centroid(self):
        return self.center.copy()

    def polar(self):
        if np.any(self.center != 0):
            return PolarBody(self)
        return Ellipsoid(np.zeros(self.dim), self.shape_inv, r=1.0 / self.r_outer, r_outer=1.0 / self.r,
                         config=self.config)

    def scaled(self, s):
        return Ellipsoid(self.center * s, self.shape / s ** 2, config=self.config)

    def translated(self, t):
        return Ellipsoid(self.center + np.asarray(t, dtype=float), self.shape, config=self.config)

    def _radii(self):
        if np.all(self.center == 0):
            ev = np.linalg.eigvalsh(self.shape)
            return 1.0 / math.sqrt(ev.max()), 1.0 / math.sqrt(ev.min())
        return super()._radii()

    def to_json(self):
        return {"type": "ellipsoid", "center": self.center.tolist(), "shape": self.shape.tolist()}


class LpBall(ConvexBody):
    """{x : ||x||_p <= radius} for p in [1, inf]."""

    kind = "lpball"

    def __init__(self, dim, p, radius=1.0, r=None, r_outer=None, config=None):
        p = float(p)
        if not p >= 1:
            raise InputError("p must lie in [1, inf]")
        if not radius > 0:
            raise InputError("radius must be positive")
        super().__init__(dim, r, r_outer, config)
        self.p = p
        self.radius = float(radius)
        self.q = math.inf if p == 1 else (1.0 if math.isinf(p) else p / (p - 1))
        self._poly = None
        if p == 1:
            signs = np.array(list(itertools.product([-1.0, 1.0], repeat=dim)))
            self._poly = HPolytope(signs, np.full(len(signs), self.radius), config=self.config)
        elif math.isinf(p):
            eye = np.eye(dim)
            self._poly = HPolytope(np.vstack([eye, -eye]), np.full(2 * dim, self.radius), config=self.config)

    def norm(self, x):
        return np.linalg.norm(np.asarray(x, dtype=float), ord=self.p, axis=-1)

    def contains(self, x, tol=FEAS_TOL):
        x = _as_points(x, self.dim)
        return self.norm(x) <= self.radius * (1 + tol)

    def gauge(self, x):
        return self.norm(_as_points(x, self.dim)) / self.radius

    def gauge_from(self, x, v):
        if self._poly is not None:
            return self._poly.gauge_from(x, v)
        if not np.any(x):
            return self.norm(v) / self.radius
        return self._bisect_gauge(x, v)

    def support_point(self, u):
        u = np.asarray(u, dtype=float)
        R = self.radius
        if self.p == 1:
            j = int(np.argmax(np.abs(u)))
            x = np.zeros(self.dim)
            x[j] = R * (1.0 if u[j] >= 0 else -1.0)
            return float(R * np.abs(u).max()), x
        if math.isinf(self.p):
            return float(R * np.abs(u).sum()), R * np.sign(u)
        qn = np.linalg.norm(u, ord=self.q)
        if qn == 0:
            return 0.0, np.zeros(self.dim)
        x = R * np.sign(u) * (np.abs(u) / qn) ** (self.q - 1)
        return float(R * qn), x

    def support_values(self, U):
        U = np.atleast_2d(np.asarray(U, dtype=float))
        return self.radius * np.linalg.norm(U, ord=self.q, axis=1)

    def normal_at(self, p):
        if self._poly is not None:
            return self._poly.normal_at(p)
        return np.sign(p) * np.abs(p) ** (self.p - 1)

    def exact_volume(self):
        n, R = self.dim, self.radius
        if math.isinf(self.p):
            return (2 * R) ** n
        return (2 * gamma_fn(1 + 1 / self.p)) ** n / gamma_fn(1 + n / self.p) * R ** n

    def centroid(self):
        return np.zeros(self.dim)

    def _radii(self):
        n, p, R = self.dim, self.p, self.radius
        spread = n ** abs(0.5 - (0.0 if math.isinf(p) else 1.0 / p))
        return (R, R * spread) if p >= 2 else (R / spread, R)

    def polar(self):
        return LpBall(self.dim, self.q, 1.0 / self.radius, config=self.config)

    def scaled(self, s):
        return LpBall(self.dim, self.p, self.radius * s, config=self.config)

    def as_polytope(self):
        return self._poly

    def to_json(self):
        return {"type": "lpball", "dim": self.dim, "p": "inf" if math.isinf(self.p) else self.p,
                "radius": self.radius}


class AffineImage(ConvexBody):
    """{M y + t : y in inner} for an invertible M."""

    kind = "affine"

    def __init__(self, inner, matrix, translation=None, r=None, r_outer=None, config=None):
        M = np.atleast_2d(np.asarray(matrix, dtype=float))
        n = inner.dim
        if M.shape != (n, n):
            raise InputError("affine map must be n x n")
        if abs(np.linalg.det(M)) < 1e-300 or np.linalg.cond(M) > 1e12:
            raise InputError("affine map must be invertible")
        t = np.zeros(n) if translation is None else np.asarray(translation, dtype=float).ravel()
        super().__init__(n, r, r_outer, config or inner.config)
        self.inner = inner
        self.matrix = M
        self.translation = t
        self.inverse = np.linalg.inv(M)

    def _pull(self, y):
        return (np.asarray(y, dtype=float) - self.translation) @ self.inverse.T

    def contains(self, x, tol=FEAS_TOL):
        return self.inner.contains(self._pull(_as_points(x, self.dim)), tol)

    def gauge_from(self, x, v):
        return self.inner.gauge_from(self._pull(x), np.asarray(v, dtype=float) @ self.inverse.T)

    def support_point(self, u):
        u = np.asarray(u, dtype=float)
        val, y = self.inner.support_point(self.matrix.T @ u)
        return float(val + u @ self.translation), self.matrix @ y + self.translation

    def support_values(self, U):
        U = np.atleast_2d(np.asarray(U, dtype=float))
        return self.inner.support_values(U @ self.matrix) + U @ self.translation

    def normal_at(self, p):
        return self.inverse.T @ self.inner.normal_at(self._pull(p))

    def interior_point(self):
        return self.matrix @ self.inner.interior_point() + self.translation

    def exact_volume(self):
        v = self.inner.exact_volume()
        return None if v is None else abs(np.linalg.det(self.matrix)) * v

    def polar(self):
        if np.any(self.translation):
            return PolarBody(self)
        return AffineImage(self.inner.polar(), self.inverse.T, config=self.config)

    def scaled(self, s):
        return AffineImage(self.inner, s * self.matrix, s * self.translation, config=self.config)

    def translated(self, t):
        return AffineImage(self.inner, self.matrix, self.translation + np.asarray(t, dtype=float),
                           config=self.config)

    def to_json(self):
        return {"type": "affine", "inner": self.inner.to_json(), "matrix": self.matrix.tolist(),
                "translation": self.translation.tolist()}


class PolarBody(ConvexBody):
    """Polar of an arbitrary origin-centred body, answered through its support function.

    The gauge of the polar is the support function of the body and vice
    versa, so no search is needed for the origin-based queries.
    """

    kind = "polar"

    def __init__(self, body, config=None):
        super().__init__(body.dim, None, None, config or body.config)
        self.body = body

    @property
    def r(self):
        return 1.0 / self.body.r_outer

    @property
    def r_outer(self):
        return 1.0 / self.body.r

    def contains(self, x, tol=FEAS_TOL):
        x = _as_points(x, self.dim)
        return self.body.support_values(np.atleast_2d(x)).reshape(x.shape[:-1]) <= 1.0 + tol

    def gauge(self, x):
        x = _as_points(x, self.dim)
        return self.body.support_values(np.atleast_2d(x)).reshape(x.shape[:-1])

    def gauge_from(self, x, v):
        if not np.any(x):
            return np.maximum(self.gauge(v), 0.0)
        return self._bisect_gauge(x, v)

    def support_point(self, u):
        u = np.asarray(u, dtype=float)
        g = float(self.body.gauge(u))
        if g == 0:
            return 0.0, np.zeros(self.dim)
        return g, self.body.supporting_normal(u / g)

    def support_values(self, U):
        return self.body.gauge(np.atleast_2d(np.asarray(U, dtype=float)))

    def normal_at(self, p):
        return self.body.support_point(p)[1]

    def polar(self):
        return self.body

    def scaled(self, s):
        return PolarBody(self.body.scaled(1.0 / s))


# --- module-level oracle functions -------------------------------------------

def membership(body, x):
    """True iff x lies in the body (vectorised over rows)."""
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise InputError("non-finite point")
    res = body.contains(x)
    return bool(res) if np.ndim(res) == 0 else res


def gauge(body, x):
    """Minkowski functional inf{s >= 0 : x in sK}."""
    return body.gauge(x)


def boundary_ray(body, direction):
    """Point where the ray from the origin along ``direction`` leaves the body."""
    d = np.asarray(direction, dtype=float)
    if d.shape != (body.dim,):
        raise InputError("dimension mismatch")
    if not np.any(d):
        raise InputError("zero direction")
    return d / body.gauge(d)


def support(body, direction):
    """(h(u), supporting hyperplane <u/|u|, x> = h(u)/|u|)."""
    u = np.asarray(direction, dtype=float)
    if u.shape != (body.dim,):
        raise InputError("dimension mismatch")
    nrm = np.linalg.norm(u)
    if nrm == 0:
        raise InputError("zero direction")
    val, _ = body.support_point(u)
    if val <= 0:
        raise InputError("origin is not interior to the body")
    return val, Hyperplane(u / nrm, val / nrm)


def support_with_point(body, direction):
    return body.support_point(np.asarray(direction, dtype=float))


def polar(body):
    return body.polar()


def difference_body(body):
    """K + (-K) for a V-polytope."""
    if not isinstance(body, _Polytope):
        raise UnsupportedRepresentationError("difference body needs a polytope")
    V = body.vertices
    diffs = (V[:, None, :] - V[None, :, :]).reshape(-1, body.dim)
    return VPolytope(diffs, config=body.config)


def sample_uniform(body, rng, size=None, burn_in=None, max_proposals=10 ** 7):
    """Uniform samples from the body.

    Exact rejection from the support-function bounding box in dimension
    <= 3, hit-and-run in higher dimension.
    """
    m = 1 if size is None else int(size)
    if body.dim >= 4:
        out = hit_and_run(body, rng, m, burn_in=burn_in)
    else:
        lo, hi = body.bounding_box()
        out = np.empty((0, body.dim))
        proposed = 0
        while len(out) < m:
            batch = max(1024, min(2 * (m - len(out)) + 64, 2 ** 20))
            if len(out) > 0 and proposed > 0:
                rate = len(out) / proposed
                batch = max(batch, min(int(1.2 * (m - len(out)) / rate) + 64, 2 ** 20))
            X = lo + (hi - lo) * rng.random((batch, body.dim))
            proposed += batch
            out = np.vstack([out, X[body.contains(X)]])
            if proposed > max_proposals and len(out) < m:
                raise SamplingError("rejection budget exhausted", len(out) / proposed)
        out = out[:m]
    return out[0] if size is None else out


def uniform_sample(body, rng):
    return sample_uniform(body, rng)


def hit_and_run(body, rng, size, start=None, burn_in=None, thin=None, region=None):
    """Hit-and-run chain.  ``region`` optionally intersects with a halfspace (w, c): w.x >= c."""
    n = body.dim
    x = body.interior_point() if start is None else np.asarray(start, dtype=float)
    burn = 10 * n * n if burn_in is None else burn_in
    thin = max(1, n) if thin is None else thin
    out = np.empty((size, n))
    total = burn + size * thin
    k = 0
    for step in range(total):
        d = rng.standard_normal(n)
        d /= np.linalg.norm(d)
        t0, t1 = body.chord(x, d)
        if region is not None:
            w, c = region
            wd = w @ d
            s = c - w @ x
            if wd > 0:
                t0 = max(t0, s / wd)
            elif wd < 0:
                t1 = min(t1, s / wd)
        if t1 > t0:
            x = x + (t0 + (t1 - t0) * rng.random()) * d
        if step >= burn and (step - burn) % thin == thin - 1:
            out[k] = x
            k += 1
    return out


def estimate_volume(body, rng, samples=100000):
    """Monte Carlo volume by rejection from the bounding box; returns (estimate, stderr)."""
    if samples < 1000:
        raise InputError("need at least 1000 samples")
    lo, hi = body.bounding_box()
    box = float(np.prod(hi - lo))
    hits = 0
    done = 0
    while done < samples:
        k = min(2 ** 18, samples - done)
        X = lo + (hi - lo) * rng.random((k, body.dim))
        hits += int(np.count_nonzero(body.contains(X)))
        done += k
    frac = hits / samples
    return box * frac, box * math.sqrt(max(frac * (1 - frac), 0.0) / samples)


def kb_ratio(body, rng, samples=100000):
    """Monte Carlo estimate of vol(K cap -K) / vol(K)."""
    if samples < 1000:
        raise InputError("need at least 1000 samples")
    X = sample_uniform(body, rng, samples)
    return float(np.mean(body.contains(-X)))


def kb_threshold(n, constant=2.0 / 3.0):
    return constant * 2.0 ** (-n)


def is_well_centered(body, rng, samples=20000, constant=2.0 / 3.0):
    return kb_ratio(body, rng, samples) >= kb_threshold(body.dim, constant)


def estimate_centroid(body, rng, samples=100000):
    if samples < 1000:
        raise InputError("need at least 1000 samples")
    return sample_uniform(body, rng, samples).mean(axis=0)


# --- JSON ----------------------------------------------------------------------

def _num(v):
    if isinstance(v, str):
        if v.strip().lower() in ("inf", "+inf", "infinity"):
            return math.inf
        return float(v)
    return float(v)


def _arr(v):
    return np.array([[_num(x) for x in row] for row in v]) if v and isinstance(v[0], (list, tuple)) \
        else np.array([_num(x) for x in v])


def body_from_json(spec, config=None):
    """Parse the JSON body spec (reals may be decimal strings)."""
    if not isinstance(spec, dict) or "type" not in spec:
        raise InputError("body spec must be an object with a 'type'")
    kind = spec["type"]
    r = _num(spec["r"]) if "r" in spec else None
    ro = _num(spec["r_outer"]) if "r_outer" in spec else None
    try:
        if kind == "hpoly":
            return HPolytope(_arr(spec["A"]), _arr(spec["b"]), r, ro, config)
        if kind == "vpoly":
            return VPolytope(_arr(spec["vertices"]), r, ro, config)
        if kind == "ellipsoid":
            return Ellipsoid(_arr(spec["center"]), _arr(spec["shape"]), r, ro, config)
        if kind == "lpball":
            return LpBall(int(spec["dim"]), _num(spec["p"]), _num(spec.get("radius", 1)), r, ro, config)
        if kind == "affine":
            inner = body_from_json(spec["inner"], config)
            t = _arr(spec["translation"]) if "translation" in spec else None
            return AffineImage(inner, _arr(spec["matrix"]), t, r, ro, config)
    except KeyError as exc:
        raise InputError("missing field %s in %s spec" % (exc, kind)) from None
    raise InputError("unknown body type %r" % kind)
