"""
Polytope approximation in the Banach-Mazur sense: K inside P inside (1 + eps) K.

P is the convex hull of the centers of a covering of (1 + eps/c) K built
with the reduced accuracy eps' = (1 + eps)/(1 + eps/c) - 1, so every center
lies in (1 + eps) K.
"""
import logging

import numpy as np

from .bodies import VPolytope, fibonacci_directions, random_directions
from .enumerate import EnumeratorConfig, enumerate_cover
from .errors import InputError, VerificationError
from .macbeath import polytope_form, verify_covering

logger = logging.getLogger(__name__)

APPROX_C = 2.0


def reduced_eps(eps, c=APPROX_C):
    return (1.0 + eps) / (1.0 + eps / c) - 1.0


def banach_mazur_polytope(body, eps, config=None, rng=None, verify_samples=100000, return_cover=False):
    """V-polytope P with body inside P inside (1 + eps) body."""
    if not 0 < eps < 1:
        raise InputError("eps must lie in (0, 1)")
    if body.dim > 4:
        raise InputError("exact hulls are limited to n <= 4")
    if rng is None:
        rng = np.random.default_rng()
    base = config or EnumeratorConfig()
    if base.c != APPROX_C:
        base = EnumeratorConfig(**{**base.__dict__, "c": APPROX_C})
    inflated = body.scaled(1.0 + eps / APPROX_C)
    cov = enumerate_cover(inflated, reduced_eps(eps), base, rng)
    if verify_samples:
        rep = verify_covering(cov, rng, verify_samples)
        if not rep["pass"]:
            raise VerificationError("covering of the inflated body failed verification", rep)
    P = VPolytope(cov.centers, config=body.config)
    return (P, cov) if return_cover else P


def verify_sandwich(body, P, eps, rng=None, samples=10000):
    """Check body inside P inside (1 + eps) body.

    Outer: gauge of every vertex of P (exact).  Inner: for polytope bodies the
    support of the body on every facet normal of P (exact); otherwise
    ``samples`` boundary points of the body must lie in P.
    """
    V = P.vertices
    g = body.gauge(V)
    outer_margin = float(1.0 + eps - g.max())
    outer_ok = bool(g.max() <= 1.0 + eps + 1e-9)

    A, b = P.A, P.b
    poly = polytope_form(body)
    witness = None
    if poly is not None:
        h = poly.support_values(A)
        slack = (b - h) / np.linalg.norm(A, axis=1)
        inner_margin = float(slack.min())
        inner_ok = bool(inner_margin >= -1e-9)
        if not inner_ok:
            witness = (A[np.argmin(slack)] / np.linalg.norm(A[np.argmin(slack)])).tolist()
        method = "exact"
    else:
        if rng is None:
            rng = np.random.default_rng(0)
        U = np.vstack([fibonacci_directions(body.dim, samples // 2),
                       random_directions(rng, body.dim, samples - samples // 2)])
        B = U / body.gauge(U)[:, None]
        viol = (B @ A.T - b).max(axis=1)
        inner_margin = float(-viol.max())
        inner_ok = bool(viol.max() <= 1e-9)
        if not inner_ok:
            witness = U[np.argmax(viol)].tolist()
        method = "sampled"
    return {
        "pass": outer_ok and inner_ok,
        "outer_pass": outer_ok,
        "outer_margin": outer_margin,
        "max_vertex_gauge": float(g.max()),
        "inner_pass": inner_ok,
        "inner_margin": inner_margin,
        "inner_method": method,
        "witness_direction": witness,
        "vertices": int(len(V)),
        "facets": int(len(A)),
    }


def vertex_bound(n, eps, a_second):
    """A'' * eps^-(n-1)/2 * log(1/eps)."""
    return a_second * eps ** (-(n - 1) / 2.0) * np.log(1.0 / eps)
