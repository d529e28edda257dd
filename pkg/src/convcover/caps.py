"""
Caps of a convex body, ray distances and the samplers built on them.

A cap is the part of a body on the far side (away from the origin) of a
cutting hyperplane.  Widths are relative to the parallel supporting plane:
``relative_width = (h(u) - offset) / h(u)``.
"""
import logging
import math

import numpy as np
from scipy import optimize

from .bodies import FEAS_TOL, Ellipsoid, HPolytope, Hyperplane, _Polytope, hit_and_run, sample_uniform
from .errors import EmptyCapError, InputError, SamplingError

logger = logging.getLogger(__name__)

CAP_REJECTION_BUDGET = 10 ** 6


class Cap:
    """Intersection of ``body`` with {x : <normal, x> >= offset}.

    ``offset`` may be <= 0 for an expanded cap that reaches past the origin;
    such caps carry ``full_body = True`` and have no ``base_plane``.
    """

    def __init__(self, body, normal, offset, support_value, apex):
        self.body = body
        self.normal = np.asarray(normal, dtype=float)
        self.offset = float(offset)
        self.support_value = float(support_value)
        self.apex = np.asarray(apex, dtype=float)
        self.absolute_width = self.support_value - self.offset
        self.relative_width = self.absolute_width / self.support_value
        self.full_body = self.offset <= 0

    @property
    def base_plane(self):
        return None if self.full_body else Hyperplane(self.normal, self.offset)

    @property
    def support_plane(self):
        return Hyperplane(self.normal, self.support_value)

    def contains(self, x, tol=FEAS_TOL):
        x = np.asarray(x, dtype=float)
        side = x @ self.normal >= self.offset - tol * max(1.0, abs(self.offset))
        return side & self.body.contains(x, tol)

    def interior_point(self):
        """A point strictly inside the cap (on the segment from O to the apex)."""
        target = 0.5 * (max(self.offset, 0.0) + self.support_value)
        return self.apex * (target / self.support_value)

    def to_json(self):
        return {"normal": self.normal.tolist(), "offset": self.offset,
                "abs_width": self.absolute_width, "rel_width": self.relative_width,
                "apex": self.apex.tolist()}

    def __repr__(self):
        return "Cap(normal=%s, offset=%.6g, rel_width=%.6g%s)" % (
            np.array2string(self.normal, precision=4), self.offset, self.relative_width,
            ", full" if self.full_body else "")


class RepresentativeCap:
    def __init__(self, cap, source_point, epsilon, polar_point):
        self.cap = cap
        self.source_point = np.asarray(source_point, dtype=float)
        self.epsilon = float(epsilon)
        self.polar_point = polar_point


def _unit(u):
    u = np.asarray(u, dtype=float)
    n = np.linalg.norm(u)
    if n == 0:
        raise InputError("zero normal")
    return u / n


def cap_from_plane(body, plane):
    """Cap cut from ``body`` by ``plane`` on the side away from the origin."""
    if not isinstance(plane, Hyperplane):
        raise InputError("expected a Hyperplane")
    if plane.normal.shape != (body.dim,):
        raise InputError("dimension mismatch")
    h, apex = body.support_point(plane.normal)
    if plane.offset >= h:
        raise EmptyCapError("plane misses the body (offset %.6g >= support %.6g)" % (plane.offset, h))
    return Cap(body, plane.normal, plane.offset, h, apex)


def cap_with_width(body, direction, rel_width):
    """Cap with the given normal direction and relative width."""
    u = _unit(direction)
    h, apex = body.support_point(u)
    return Cap(body, u, h * (1.0 - rel_width), h, apex)


def ray_distance(body, p):
    """1 - gauge(p) inside the body, 1 - 1/gauge(p) outside."""
    p = np.asarray(p, dtype=float)
    g = body.gauge(p)
    if np.any(np.asarray(g) == 0):
        raise InputError("ray distance is undefined at the origin")
    return np.where(g <= 1.0, 1.0 - g, 1.0 - 1.0 / g) if np.ndim(g) else (
        1.0 - g if g <= 1.0 else 1.0 - 1.0 / g)


def min_width_cap(body, p):
    """Cap through p parallel to a supporting plane at the boundary point above p."""
    p = np.asarray(p, dtype=float)
    g = float(body.gauge(p))
    if g == 0:
        raise InputError("p must differ from the origin")
    if g >= 1.0:
        raise InputError("p must lie in the interior of the body")
    p0 = p / g
    w = body.supporting_normal(p0)
    u = _unit(w)
    # h(u) = 1/|w| because <w, x> <= 1 on K with equality at p0
    h = 1.0 / np.linalg.norm(w)
    return Cap(body, u, float(u @ p), h, p0)


def expand_cap(cap, lam):
    """The lambda-expansion: same normal, absolute width multiplied by lambda."""
    if lam < 1:
        raise InputError("expansion factor must be >= 1")
    if lam == 1:
        return cap
    offset = cap.support_value - lam * cap.absolute_width
    far = -cap.body.support_point(-cap.normal)[0]
    # never move the plane past the far side of the body
    offset = max(offset, far)
    return Cap(cap.body, cap.normal, offset, cap.support_value, cap.apex)


REPRESENTATIVE_EPS_MAX = 1.0 / 8


def representative_cap(body, polar_body, z, eps):
    """Cap of ``body`` induced by the point on ray Oz at exterior ray distance eps from ``polar_body``."""
    z = np.asarray(z, dtype=float)
    if not 0 < eps <= REPRESENTATIVE_EPS_MAX:
        raise InputError("eps must lie in (0, 1/8]")
    if not np.any(z):
        raise InputError("z must differ from the origin")
    z_hat = z / (polar_body.gauge(z) * (1.0 - eps))
    nrm = np.linalg.norm(z_hat)
    cap = cap_from_plane(body, Hyperplane(z_hat / nrm, 1.0 / nrm))
    return RepresentativeCap(cap, z, eps, z_hat)


def shell_sample(body, eps, rng, size=None, factor=4.0):
    """Two-stage shell sampler on K minus (1 - factor*eps)K.

    Draw p uniformly in K, then a point uniformly on the part of the ray Op
    whose gauge lies in [1 - factor*eps, 1].
    """
    if not 0 < eps < 1.0 / factor:
        raise InputError("eps must lie in (0, 1/%g)" % factor)
    m = 1 if size is None else int(size)
    P = sample_uniform(body, rng, m)
    g = body.gauge(P)
    bad = g <= 0
    while np.any(bad):
        P[bad] = sample_uniform(body, rng, int(bad.sum()))
        g = body.gauge(P)
        bad = g <= 0
    s = 1.0 - factor * eps + factor * eps * rng.random(m)
    out = P * (s / g)[:, None]
    return out[0] if size is None else out


def _cap_proposal_frame(cap):
    """Box in a frame aligned with the cap normal that contains the cap."""
    body = cap.body
    n = body.dim
    u = cap.normal
    # orthonormal completion of u
    Q, _ = np.linalg.qr(np.column_stack([u, np.eye(n)]))
    Q[:, 0] = u
    lo_n = max(cap.offset, -body.support_point(-u)[0])
    hi_n = cap.support_value
    # tangent extents from the support function of the whole body (a valid bound)
    T = Q[:, 1:].T
    lo = np.concatenate([[lo_n], -body.support_values(-T)])
    hi = np.concatenate([[hi_n], body.support_values(T)])
    return Q, lo, hi


def cap_sample(body, cap, rng, size=None, budget=CAP_REJECTION_BUDGET, fallback=True):
    """Uniform points of the cap by rejection; hit-and-run once the budget is spent."""
    if cap.body is not body:
        body = cap.body
    m = 1 if size is None else int(size)
    Q, lo, hi = _cap_proposal_frame(cap)
    out = []
    got = 0
    proposed = 0
    while got < m and proposed < budget:
        k = int(min(budget - proposed, max(256, 4 * (m - got))))
        Y = lo + (hi - lo) * rng.random((k, body.dim))
        X = Y @ Q.T
        ok = cap.contains(X)
        proposed += k
        if np.any(ok):
            out.append(X[ok])
            got += int(ok.sum())
    if got >= m:
        res = np.vstack(out)[:m]
    elif fallback:
        logger.debug("cap rejection budget spent (rate %.3g); hit-and-run fallback", got / max(proposed, 1))
        start = cap.interior_point()
        extra = hit_and_run(body, rng, m - got, start=start, region=(cap.normal, cap.offset))
        res = np.vstack(out + [extra]) if out else extra
    else:
        raise SamplingError("cap rejection budget exhausted", got / max(proposed, 1))
    return res[0] if size is None else res


def cap_min_linear(cap, u):
    """min <u, x> over the cap.

    Polytopes: LP.  Other bodies: the Lagrangian dual
    max_{mu >= 0} mu * offset - h(mu * normal - u), a concave one-dimensional
    problem solved to near machine precision.
    """
    body = cap.body
    u = np.asarray(u, dtype=float)
    if isinstance(body, _Polytope):
        A_ub = np.vstack([body.A, -cap.normal])
        b_ub = np.append(body.b, -cap.offset)
        res = optimize.linprog(u, A_ub=A_ub, b_ub=b_ub, bounds=[(None, None)] * body.dim, method="highs")
        if res.status != 0:
            return math.inf  # empty cap
        return float(res.fun)
    h = body.support_point
    slack = cap.support_value - cap.offset
    if slack <= 0:
        return float(u @ cap.apex) if slack == 0 else math.inf
    hi = (h(u)[0] + h(-u)[0]) / slack

    def dual(mu):
        return mu * cap.offset - h(mu * cap.normal - u)[0]

    # golden-section search: the dual is concave but often has a kink at the
    # optimum, where interpolating solvers stall short of full precision
    g = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = 0.0, hi
    x1, x2 = b - g * (b - a), a + g * (b - a)
    f1, f2 = dual(x1), dual(x2)
    best = max(dual(0.0), dual(hi), f1, f2)
    for _ in range(200):
        if b - a <= 1e-15 * max(1.0, hi):
            break
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + g * (b - a)
            f2 = dual(x2)
            best = max(best, f2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - g * (b - a)
            f1 = dual(x1)
            best = max(best, f1)
    return float(best)


def cap_contains(outer, inner, rng=None, samples=None):
    """Whether cap ``inner`` lies inside cap ``outer`` (same body).

    Compares the minimum of <outer.normal, x> over ``inner`` with the offset
    of ``outer``; see :func:`cap_min_linear`.
    """
    if outer.full_body:
        return True
    m = cap_min_linear(inner, outer.normal)
    return bool(m >= outer.offset - 1e-9 * max(1.0, abs(outer.offset)))


def similar_caps(c1, c2, lam, rng=None):
    """C1 inside C2^lam and C2 inside C1^lam."""
    if c1.body is not c2.body and type(c1.body) is not type(c2.body):
        raise InputError("caps must belong to the same body")
    return cap_contains(expand_cap(c2, lam), c1, rng) and cap_contains(expand_cap(c1, lam), c2, rng)


def cap_volume(cap, rng=None, samples=200000):
    """Exact volume for polytopes and ellipsoids; Monte Carlo otherwise."""
    body = cap.body
    if isinstance(body, _Polytope):
        A = np.vstack([body.A, -cap.normal])
        b = np.append(body.b, -cap.offset)
        try:
            return HPolytope(A, b).exact_volume()
        except Exception:
            return 0.0
    if isinstance(body, Ellipsoid):
        return _ellipsoid_cap_volume(body, cap)
    if rng is None:
        rng = np.random.default_rng(0)
    lo, hi = body.bounding_box()
    X = lo + (hi - lo) * rng.random((samples, body.dim))
    return float(np.prod(hi - lo) * np.mean(cap.contains(X)))


def _ellipsoid_cap_volume(body, cap):
    # map the ellipsoid to the unit ball; caps map to caps with normalised height
    L = np.linalg.cholesky(body.shape_inv)  # x = c + L y, y in unit ball
    w = L.T @ cap.normal
    s = np.linalg.norm(w)
    # plane <u, c + L y> = offset  ->  <w/s, y> = (offset - <u, c>)/s
    t = (cap.offset - cap.normal @ body.center) / s
    n = body.dim
    det = abs(np.linalg.det(L))
    return det * _ball_cap_volume(n, t)


def _ball_cap_volume(n, t):
    """Volume of {y in B^n : y_1 >= t}."""
    from scipy.special import betainc, gamma
    if t >= 1:
        return 0.0
    if t <= -1:
        return math.pi ** (n / 2) / gamma(n / 2 + 1)
    full = math.pi ** (n / 2) / gamma(n / 2 + 1)
    # regularised incomplete beta form of the spherical cap
    half = 0.5 * full * betainc((n + 1) / 2.0, 0.5, 1 - t * t)
    return half if t >= 0 else full - half
