"""
Layered decomposition and the randomized covering enumerator.

Points of K are layered by their ray distance in K_eps = (1 + eps) K.  For
each boundary layer the enumerator samples centers from two channels (the
shell of K_eps and caps induced by the shell of the polar); the wide layer is
sampled uniformly.  Every sampled center contributes the element
M^{1/c}_{K_eps}(center).
"""
import logging
import math
from dataclasses import dataclass

import numpy as np

from .bodies import kb_ratio, kb_threshold, sample_uniform
from .caps import cap_sample, expand_cap, representative_cap, shell_sample
from .errors import InputError, PreconditionError, VerificationError
from .macbeath import Covering, CoveringElement, verify_covering

logger = logging.getLogger(__name__)

CHANNEL_SHELL = 0
CHANNEL_POLAR = 1
CHANNEL_WIDE = 2


@dataclass(frozen=True)
class LayeredDecomposition:
    eps: float
    beta: float = 1.0 / 8

    def __post_init__(self):
        if not 0 < self.eps <= 1:
            raise InputError("eps must lie in (0, 1]")
        if not 0 < self.beta < 1:
            raise InputError("beta must lie in (0, 1)")

    @property
    def k0(self):
        return max(0, math.ceil(math.log2(self.beta / self.eps)))

    @property
    def wide_layer(self):
        return self.k0 + 1

    def layer_eps(self, i):
        """eps_i = 2^(i-1) eps, the lower end of layer i."""
        return 2.0 ** (i - 1) * self.eps

    def interval(self, i):
        if i <= self.k0:
            return self.layer_eps(i), 2.0 ** i * self.eps
        return 2.0 ** self.k0 * self.eps, math.inf

    def index(self, ray):
        ray = np.asarray(ray, dtype=float)
        with np.errstate(divide="ignore"):
            i = np.floor(np.log2(ray / self.eps)).astype(int) + 1
        return np.clip(i, 0, self.k0 + 1)


@dataclass(frozen=True)
class EnumeratorConfig:
    c: float = 2.0
    A: float = None            # sample multiplier; None means 8 * 2^n
    log_factor: bool = True
    polar_channel: bool = True
    beta: float = 1.0 / 8
    kappa_prime: float = None  # None means 4^-n
    check_well_centered: bool = True
    kb_constant: float = 2.0 / 3.0
    kb_samples: int = 20000

    def __post_init__(self):
        if self.c < 2:
            raise InputError("c must be >= 2")
        if self.A is not None and not self.A > 0:
            raise InputError("A must be positive")

    def multiplier(self, n):
        return 8.0 * 2 ** n if self.A is None else float(self.A)

    def volume_thresholds(self, n, eps):
        """(t, t') classification thresholds; metadata only."""
        t = eps ** ((n + 1) / 2.0)
        kp = 4.0 ** (-n) if self.kappa_prime is None else self.kappa_prime
        return t, kp * t


def layer_of(body, eps, x):
    """Layer index of x from its ray distance in (1 + eps) K."""
    x = np.asarray(x, dtype=float)
    g = body.gauge(x)
    if np.any(np.asarray(g) > 1.0 + 1e-12):
        raise InputError("point lies outside the body")
    dec = LayeredDecomposition(eps)
    ray = 1.0 - np.asarray(g) / (1.0 + eps)
    out = dec.index(ray)
    return int(out) if np.ndim(out) == 0 else out


def layer_sample_count(config, n, eps, eps_i):
    L = max(1.0, math.log(1.0 / eps)) if config.log_factor else 1.0
    return int(math.ceil(config.multiplier(n) * eps_i ** (-(n - 1) / 2.0) * L))


def plan(body_dim, eps, config):
    """Per-phase sample counts as a list of (layer, channel, eps_i, count)."""
    dec = LayeredDecomposition(eps, config.beta)
    n = body_dim
    phases = []
    for i in range(dec.k0 + 1):
        ei = dec.layer_eps(i)
        # the shell needs 4 eps_i < 1 and the representative cap eps_i <= 1/8
        if ei >= config.beta:
            continue
        m = layer_sample_count(config, n, eps, ei)
        phases.append((i, CHANNEL_SHELL, ei, m))
        if config.polar_channel:
            phases.append((i, CHANNEL_POLAR, ei, m))
    phases.append((dec.k0 + 1, CHANNEL_WIDE, None, int(math.ceil(config.multiplier(n) * 2 ** n))))
    return phases


def _streams(rng, k):
    seed = int(rng.integers(0, 2 ** 63))
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(k)]


def check_well_centered(body, rng, config):
    ratio = kb_ratio(body, rng, config.kb_samples)
    thr = kb_threshold(body.dim, config.kb_constant)
    if ratio < thr:
        raise PreconditionError("body is not well-centered: KB ratio %.4f < %.4f" % (ratio, thr))
    return ratio


def enumerate_cover(body, eps, config=None, rng=None):
    """Randomized (c, eps)-covering of ``body`` by Macbeath regions of (1 + eps) body."""
    config = config or EnumeratorConfig()
    if rng is None:
        rng = np.random.default_rng()
    if not 0 < eps <= 1:
        raise InputError("eps must lie in (0, 1]")
    body.validate()
    streams = _streams(rng, 1 + 64)
    if config.check_well_centered:
        check_well_centered(body, streams[0], config)
    n = body.dim
    K_eps = body.scaled(1.0 + eps)
    polar = K_eps.polar() if config.polar_channel else None
    phases = plan(n, eps, config)
    if len(phases) > 64:
        raise InputError("eps too small for the stream budget")

    elements = []
    for k, (layer, channel, ei, m) in enumerate(phases):
        g = streams[1 + k]
        if channel == CHANNEL_SHELL:
            pts = shell_sample(K_eps, ei, g, m)
        elif channel == CHANNEL_POLAR:
            P = shell_sample(polar, ei, g, m, factor=2.0)
            pts = np.empty((m, n))
            for j, p in enumerate(P):
                cap = expand_cap(representative_cap(K_eps, polar, p, ei).cap, 32.0)
                pts[j] = cap_sample(K_eps, cap, g)
        else:
            pts = sample_uniform(body, g, m)
        gauge = K_eps.gauge(pts)
        pts = pts[gauge < 1.0]
        elements.extend(CoveringElement(p, 1.0 / config.c, layer) for p in pts)
        logger.debug("layer %d channel %d: %d centers", layer, channel, len(pts))
    return Covering(K_eps, body, float(config.c), float(eps), elements)


def size_bound(n, eps, a_prime):
    """A' * eps^-(n-1)/2 * log2(1/eps)."""
    return a_prime * eps ** (-(n - 1) / 2.0) * max(1.0, math.log2(1.0 / eps))


def fit_slope(eps_list, sizes):
    """Least-squares slope of log(size) against log(1/eps)."""
    x = np.log(1.0 / np.asarray(eps_list, dtype=float))
    y = np.log(np.asarray(sizes, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


def scaling_experiment(body, eps_list, config=None, rng=None, samples=100000, threshold=0.999):
    """Covering size against eps with a fitted log-log slope.

    Every covering must pass verification; the first failure aborts with the
    offending eps.
    """
    eps_list = [float(e) for e in eps_list]
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise InputError("eps list must be strictly decreasing")
    if rng is None:
        rng = np.random.default_rng()
    table = []
    for eps in eps_list:
        cov = enumerate_cover(body, eps, config, rng)
        rep = verify_covering(cov, rng, samples, threshold)
        if not rep["pass"]:
            raise VerificationError("covering failed verification at eps=%g" % eps, rep)
        table.append({"eps": eps, "size": len(cov), "coverage": rep["coverage"],
                      "layers": rep["layers"]})
    slope = fit_slope([t["eps"] for t in table], [t["size"] for t in table]) if len(table) >= 3 else None
    return {"table": table, "slope": slope}
