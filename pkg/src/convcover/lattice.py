"""
Lattices, a brute-force CVP oracle in arbitrary norms, covering-boosted
gap-CVP, binary-search (1 + eps)-CVP and approximate integer programming.

Distances are gauges: dist(v, t) = ||v - t||_K for a norm body K that
contains the origin in its interior (K need not be symmetric).
"""
import logging
import math
from dataclasses import dataclass

import numpy as np

from .bodies import ConvexBody, estimate_centroid
from .enumerate import EnumeratorConfig, enumerate_cover
from .errors import InputError, PreconditionError, VerificationError
from .macbeath import MacbeathRegion, verify_covering

logger = logging.getLogger(__name__)

MAX_ENUMERATION = 4_000_000
TIE_TOL = 1e-12
GAP_FACTOR = 2.0


class Lattice:
    """Integer combinations of the columns of ``basis``."""

    def __init__(self, basis):
        B = np.atleast_2d(np.asarray(basis, dtype=float))
        if B.shape[0] != B.shape[1]:
            raise InputError("basis must be square")
        det = float(np.linalg.det(B))
        if abs(det) < 1e-12:
            raise InputError("basis is singular")
        self.basis = B
        self.determinant = det
        self.dim = B.shape[0]
        self._reduced = None

    def point(self, coeffs):
        return np.asarray(coeffs, dtype=float) @ self.basis.T

    def coefficients(self, x):
        return np.linalg.solve(self.basis, np.asarray(x, dtype=float).T).T

    def reduced(self):
        """(R, U) with R = B U LLL-reduced and U unimodular."""
        if self._reduced is None:
            self._reduced = lll_reduce(self.basis)
        return self._reduced

    def to_json(self):
        return {"basis": self.basis.tolist()}


def lll_reduce(B, delta=0.75):
    """Textbook LLL on the columns of B; returns (reduced basis, unimodular U)."""
    B = np.array(B, dtype=float)
    n = B.shape[1]
    U = np.eye(n)

    def gso(M):
        Q = np.zeros_like(M)
        mu = np.zeros((n, n))
        for i in range(n):
            v = M[:, i].copy()
            for j in range(i):
                mu[i, j] = M[:, i] @ Q[:, j] / (Q[:, j] @ Q[:, j])
                v -= mu[i, j] * Q[:, j]
            Q[:, i] = v
        return Q, mu

    Q, mu = gso(B)
    k = 1
    guard = 0
    while k < n:
        guard += 1
        if guard > 10000:
            break
        for j in range(k - 1, -1, -1):
            q = round(mu[k, j])
            if q:
                B[:, k] -= q * B[:, j]
                U[:, k] -= q * U[:, j]
                Q, mu = gso(B)
        if Q[:, k] @ Q[:, k] >= (delta - mu[k, k - 1] ** 2) * (Q[:, k - 1] @ Q[:, k - 1]):
            k += 1
        else:
            B[:, [k, k - 1]] = B[:, [k - 1, k]]
            U[:, [k, k - 1]] = U[:, [k - 1, k]]
            Q, mu = gso(B)
            k = max(k - 1, 1)
    return B, np.round(U)


@dataclass
class CvpInstance:
    lattice: Lattice
    target: np.ndarray
    norm_body: ConvexBody
    eps: float = 0.1

    def __post_init__(self):
        self.target = np.asarray(self.target, dtype=float).ravel()
        if self.target.shape != (self.lattice.dim,) or self.norm_body.dim != self.lattice.dim:
            raise InputError("dimension mismatch between lattice, target and norm")
        if not self.eps > 0:
            raise InputError("eps must be positive")

    @property
    def rho(self):
        return self.norm_body.r_outer / self.norm_body.r


@dataclass
class GapAnswer:
    found: bool
    point: np.ndarray = None
    bound: float = None
    element: int = None
    radius: float = None

    def to_json(self):
        if self.found:
            return {"result": "found", "point": self.point.tolist(), "bound": self.bound,
                    "element": self.element}
        return {"result": "empty", "radius": self.radius}


def _support_bound(body, u):
    if hasattr(body, "support_bound"):
        return body.support_bound(u)
    return body.support_point(u)[0]


def _coefficient_box(body, R, target, radius):
    """Integer box of coefficients (w.r.t. R) of all v with ||v - target|| <= radius."""
    Rinv = np.linalg.inv(R)
    center = Rinv @ target
    lo, hi = [], []
    for i in range(len(center)):
        w = Rinv[i]
        up = _support_bound(body, w)
        dn = _support_bound(body, -w)
        lo.append(math.floor(center[i] - radius * dn - 1e-9))
        hi.append(math.ceil(center[i] + radius * up + 1e-9))
    return np.array(lo), np.array(hi)


def _grid(lo, hi):
    sizes = hi - lo + 1
    total = int(np.prod(sizes.astype(float)))
    if total > MAX_ENUMERATION:
        raise InputError("enumeration box too large (%d points)" % total)
    axes = [np.arange(a, b + 1) for a, b in zip(lo, hi)]
    return np.array(np.meshgrid(*axes, indexing="ij")).reshape(len(axes), -1).T


def _babai_start(lattice, target, body):
    R, U = lattice.reduced()
    z = np.round(np.linalg.solve(R, target))
    v = R @ z
    return v, float(body.gauge(v - target))


def _pick(dist, coeffs):
    """Index of the minimum distance; ties broken by lexicographic coefficient order."""
    best = dist.min()
    cand = np.flatnonzero(dist <= best + TIE_TOL * max(1.0, best))
    if len(cand) == 1:
        return cand[0]
    order = np.lexsort(coeffs[cand].T[::-1])
    return cand[order[0]]


def exact_cvp(inst, radius=None):
    """Closest lattice vector to the target under the norm of ``inst.norm_body``.

    Enumerates every lattice point whose coefficients lie in a box certified
    by the support function, starting from the rounding solution.  Returns
    (point, distance); ties resolve to the lexicographically smallest
    coefficient vector in the original basis.  With ``radius`` the search is
    limited to that distance and (None, inf) is returned if nothing lies
    within it.
    """
    L, t, K = inst.lattice, inst.target, inst.norm_body
    if L.dim > 4:
        raise InputError("exact enumeration is limited to n <= 4")
    v0, d0 = _babai_start(L, t, K)
    bound = d0 if radius is None else min(d0, radius)
    if d0 == 0:
        return v0, 0.0
    R, U = L.reduced()
    lo, hi = _coefficient_box(K, R, t, bound)
    Z = _grid(lo, hi)
    V = Z @ R.T
    dist = K.gauge(V - t)
    keep = dist <= bound * (1 + 1e-12)
    if not np.any(keep):
        return None, math.inf
    V, dist, Z = V[keep], dist[keep], Z[keep]
    coeffs = np.round(np.linalg.solve(L.basis, V.T).T)
    j = _pick(dist, coeffs)
    return L.point(coeffs[j]), float(dist[j])


class ExactGapSolver:
    """Two-gap oracle backed by exact enumeration in the element norm.

    Reports the closest point whenever it lies within ``GAP_FACTOR * radius``;
    this meets the contract (Found if within radius, never beyond twice it).
    """

    def __call__(self, lattice, target, norm_body, radius):
        v, d = exact_cvp(CvpInstance(lattice, target, norm_body), radius=GAP_FACTOR * radius)
        return (v, d) if v is not None and d <= GAP_FACTOR * radius * (1 + 1e-12) else (None, d)


def _check_cover(cover, inst):
    if cover is None:
        raise PreconditionError("gap_cvp needs a covering of the norm body")
    if cover.c < 2:
        raise PreconditionError("covering constant c must be >= 2")
    if not cover.verified:
        raise PreconditionError("covering has not passed verification")
    if cover.ambient.dim != inst.lattice.dim:
        raise PreconditionError("covering dimension does not match the instance")


def gap_cvp(inst, gamma, cover, inner=None):
    """Covering-boosted gap-CVP.

    For every element M = a + S of the covering, ask the inner two-gap
    oracle for a lattice point within gamma of t + gamma a in the norm of S.
    A hit w satisfies w in t + gamma (a + 2S), inside t + gamma (1 + eps) K
    because 2S is a region of scale 2/c <= 1 in (1 + eps) K;
    if every query is empty no lattice point lies in t + gamma K.

    ``inner=None`` runs the same queries in one vectorised sweep (the answers
    coincide with :class:`ExactGapSolver` element by element).
    """
    _check_cover(cover, inst)
    if not gamma > 0:
        raise InputError("gamma must be positive")
    bound = gamma * (1.0 + cover.eps)
    if inner is not None:
        for j, e in enumerate(cover.elements):
            S = MacbeathRegion(cover.ambient, e.center, e.scale).centered_body()
            w, d = inner(inst.lattice, inst.target + gamma * e.center, S, gamma)
            if w is not None:
                return GapAnswer(True, w, bound, j)
        return GapAnswer(False, radius=gamma)
    return _gap_sweep(inst, gamma, cover, bound)


def _gap_sweep(inst, gamma, cover, bound):
    L, t = inst.lattice, inst.target
    Ke = cover.ambient
    R, U = L.reduced()
    # every element lies in K_eps, so candidates are lattice points of t + gamma K_eps
    lo, hi = _coefficient_box(Ke, R, t, gamma)
    Z = _grid(lo, hi)
    W = Z @ R.T
    Y = (W - t) / gamma
    inside = Ke.gauge(Y) <= 1.0 + 1e-12
    if not np.any(inside):
        return GapAnswer(False, radius=gamma)
    W, Y = W[inside], Y[inside]
    C = cover.centers
    # the inner oracle may answer Found up to GAP_FACTOR times the radius
    lam = GAP_FACTOR * cover.scales
    N = len(C)
    first = np.full(len(Y), N)
    for k, y in enumerate(Y):
        D = (y - C) / lam[:, None]
        hit = Ke.contains(C + D) & Ke.contains(C - D)
        idx = np.flatnonzero(hit)
        if len(idx):
            first[k] = idx[0]
    j = int(first.min())
    if j == N:
        return GapAnswer(False, radius=gamma)
    # the inner exact oracle returns the closest point in the element norm
    cand = np.flatnonzero(first <= j)
    m = MacbeathRegion(Ke, C[j], lam[j])
    members = cand[m.contains(Y[cand])]
    dist = m.gauge(Y[members])
    coeffs = np.round(L.coefficients(W[members]))
    pick = members[_pick(dist, coeffs)]
    return GapAnswer(True, W[pick], bound, j)


def build_norm_cover(norm_body, eps_cover, rng, config=None, samples=20000):
    """Verified (2, eps_cover)-covering of a norm body (log factor off by default)."""
    config = config or EnumeratorConfig(c=2.0, log_factor=False)
    cov = enumerate_cover(norm_body, eps_cover, config, rng)
    rep = verify_covering(cov, rng, samples)
    if not rep["pass"]:
        raise VerificationError("norm covering failed verification", rep)
    return cov


def search_steps_cap(eps):
    """Hard cap on binary-search rounds over the grid upper * (1 + eps/4)^-k."""
    k = math.ceil(40 * math.log(2) / math.log1p(eps / 4.0))
    return math.ceil(math.log2(k + 1)) + 2


def approx_cvp(inst, cover=None, rng=None, config=None, return_trace=False):
    """(1 + eps)-approximate CVP via binary search over gap-CVP calls."""
    eps = inst.eps
    if not 0 < eps <= 1:
        raise InputError("eps must lie in (0, 1]")
    if inst.lattice.dim > 4:
        raise InputError("limited to n <= 4")
    L, t, K = inst.lattice, inst.target, inst.norm_body
    v0, upper = _babai_start(L, t, K)
    trace = {"upper": upper, "steps": 0, "queries": []}
    if upper == 0:
        return (v0, 0.0, trace) if return_trace else (v0, 0.0)
    if cover is None:
        if rng is None:
            rng = np.random.default_rng()
        cover = build_norm_cover(K, eps / 7.0, rng, config)
    step = 1.0 + eps / 4.0
    kmax = math.ceil(40 * math.log(2) / math.log(step))
    cap = search_steps_cap(eps)

    def gamma(k):
        return upper * step ** (-k)

    # every Found point is a valid answer; keep the closest one seen
    found = [(upper, v0)]

    def query(k):
        ans = gap_cvp(inst, gamma(k), cover)
        trace["steps"] += 1
        trace["queries"].append((k, ans.found))
        if ans.found:
            found.append((float(K.gauge(ans.point - t)), ans.point))
        return ans.found

    best_k = -1
    if query(0):
        best_k = 0
        lo, hi = 0, kmax + 1          # gamma(lo) found; gamma(hi) treated as empty
        while hi - lo > 1:
            if trace["steps"] >= cap:
                raise RuntimeError("binary search exceeded %d steps" % cap)
            mid = (lo + hi) // 2
            if query(mid):
                lo = best_k = mid
            else:
                hi = mid
    d, v = min(found, key=lambda p: p[0])
    trace["gamma"] = gamma(best_k) if best_k >= 0 else upper
    return (v, d, trace) if return_trace else (v, d)


@dataclass
class IpAnswer:
    found: bool
    point: np.ndarray = None
    distance: float = None
    centroid: np.ndarray = None
    margin: bool = False

    def to_json(self):
        out = {"result": "found" if self.found else "empty", "distance": self.distance,
               "centroid": self.centroid.tolist(), "margin": self.margin}
        if self.found:
            out["point"] = self.point.tolist()
        return out


def approx_ip(body, lattice, eps, rng=None, cover=None, config=None, centroid_samples=20000):
    """Find a lattice point in the (1 + eps)-expansion of ``body`` about its centroid, or report none in ``body``."""
    if lattice.dim > 4 or body.dim != lattice.dim:
        raise InputError("dimension mismatch or n > 4")
    if rng is None:
        rng = np.random.default_rng()
    p = estimate_centroid(body, rng, centroid_samples)
    norm = body.translated(-p)
    try:
        norm.validate()
    except InputError:
        raise InputError("body has empty interior around its centroid") from None
    inst = CvpInstance(lattice, p, norm, eps)
    v, d = approx_cvp(inst, cover=cover, rng=rng, config=config)
    if d <= 1.0 + eps:
        return IpAnswer(True, v, d, p, margin=d > 1.0)
    return IpAnswer(False, None, d, p)
