"""Randomized smoothing core.

Monte Carlo smoothed decisions with Clopper-Pearson certification,
closed-form and quadrature class probabilities for analytic classifiers,
the second-order (curvature) probability approximation, and the vote
thresholds that turn a flip-probability target into a checkable
certificate.

A smoothed classifier answers with the majority label over ``n`` noisy
evaluations of the base classifier at ``x + sigma * z``, ``z`` standard
normal.  Everything here is deterministic given the stream key, so any
decision can be replayed in isolation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Union

import numpy as np

from . import backend
from .classifiers import LinearClassifier, MlpClassifier, SphereClassifier
from .errors import UnsupportedGeometryError
from .numerics import (
    clopper_pearson_lower,
    inv_reg_inc_beta,
    reg_inc_beta,
    std_normal_cdf,
    std_normal_quantile,
)
from .rng import Stream

Classifier = Union[LinearClassifier, SphereClassifier, MlpClassifier]

# Clamp applied to the lower confidence bound before the normal quantile;
# votes == n happens routinely at small n and would otherwise send the
# bound to a quantile of exactly 1 after rounding.
PI_CLAMP = 1e-12

DECISION_CSV_HEADER = ("x_id,sigma,n,alpha,label,votes,pi_hat,pi_lower,"
                       "radius_lower,tie")


@dataclass(frozen=True)
class SmoothingConfig:
    """Noise scale and vote-count settings for one smoothed classifier."""

    sigma: float
    n: int
    alpha: float = 0.001
    seed: int = 0

    def __post_init__(self):
        if not isinstance(self.n, int) or isinstance(self.n, bool):
            raise ValueError("n must be an integer")
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if not (self.sigma >= 0.0) or not math.isfinite(self.sigma):
            raise ValueError(f"sigma must be a finite nonnegative real, got {self.sigma}")
        if not (0.0 < self.alpha < 1.0):
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")


@dataclass(frozen=True)
class SmoothedDecision:
    """Outcome of one majority vote, with its one-sided certificate.

    ``votes`` counts the micro-decisions that agreed with ``label``;
    ``pi_lower`` is the Clopper-Pearson lower bound on the winning class
    probability, and ``certified_radius_lower`` the radius it buys.  An
    even split resolves to label 0 with ``tie`` set.
    """

    label: int
    votes: int
    n: int
    pi_hat: float
    pi_lower: float
    certified_radius_lower: float
    tie: bool = False

    def csv_row(self, x_id: str, cfg: SmoothingConfig) -> str:
        """One record in the layout of DECISION_CSV_HEADER, full precision."""
        return ",".join([
            str(x_id), repr(cfg.sigma), str(self.n), repr(cfg.alpha),
            str(self.label), str(self.votes), repr(self.pi_hat),
            repr(self.pi_lower), repr(self.certified_radius_lower),
            "1" if self.tie else "0",
        ])


@lru_cache(maxsize=65536)
def _cp_lower_cached(votes: int, n: int, alpha: float) -> float:
    return clopper_pearson_lower(votes, n, alpha)


def _class1_votes(base: Classifier, x: np.ndarray, sigma: float, n: int,
                  key: int, start_sample: int = 0) -> int:
    """Count of class-1 micro-decisions among samples [start, start+n)."""
    if isinstance(base, LinearClassifier):
        return backend.vote_linear(key, start_sample, n, x,
                                   base.weights, base.bias, sigma)
    if isinstance(base, SphereClassifier):
        return backend.vote_sphere(key, start_sample, n, x,
                                   base.center, base.radius, sigma)
    if isinstance(base, MlpClassifier):
        return backend.vote_mlp(key, start_sample, n, x,
                                base.w1, base.b1, base.w2, base.b2,
                                base.w3, base.b3, sigma)
    raise TypeError(f"unsupported classifier type {type(base).__name__}")


def smoothed_decide(base: Classifier, cfg: SmoothingConfig, x,
                    stream: Stream) -> SmoothedDecision:
    """Majority vote over n noisy micro-decisions, with certificate.

    Sample j of the vote is addressed as (stream.key, j), so the call is
    pure in (base, cfg, x, stream) and any slice of the vote can be
    recomputed independently.
    """
    x = np.ascontiguousarray(np.asarray(x, dtype=np.float64))
    if x.ndim != 1 or x.shape[0] != base.dimension:
        raise ValueError(
            f"point has shape {x.shape}, classifier expects ({base.dimension},)")
    k1 = _class1_votes(base, x, cfg.sigma, cfg.n, stream.key)
    k0 = cfg.n - k1
    tie = k1 == k0
    label = 1 if k1 > k0 else 0
    votes = k1 if label == 1 else k0
    pi_hat = votes / cfg.n
    pi_lower = _cp_lower_cached(votes, cfg.n, cfg.alpha)
    clamped = min(max(pi_lower, PI_CLAMP), 1.0 - PI_CLAMP)
    radius = certified_radius(clamped, cfg.sigma)
    return SmoothedDecision(label=label, votes=votes, n=cfg.n,
                            pi_hat=pi_hat, pi_lower=pi_lower,
                            certified_radius_lower=radius, tie=tie)


def certified_radius(pi: float, sigma: float) -> float:
    """Noise scale times the normal quantile of pi, floored at zero.

    pi at or below 1/2 certifies nothing and maps to 0.
    """
    if not (0.0 < pi < 1.0):
        raise ValueError(f"pi must lie strictly in (0, 1), got {pi}")
    if not (sigma >= 0.0) or not math.isfinite(sigma):
        raise ValueError(f"sigma must be a finite nonnegative real, got {sigma}")
    return max(0.0, sigma * std_normal_quantile(pi))


# ---------------------------------------------------------------------------
# Exact class-1 probability for analytic geometries


def _adaptive_simpson(f, lo: float, hi: float, tol: float) -> float:
    """Adaptive Simpson over [lo, hi], pre-split into unit-width panels.

    The pre-split keeps narrow features (the chi density rides on an
    O(1) scale) from slipping between the three probes a plain adaptive
    pass would start with on a wide interval.
    """
    if hi <= lo:
        return 0.0
    panels = max(1, min(64, int(math.ceil(hi - lo))))
    edges = [lo + (hi - lo) * i / panels for i in range(panels + 1)]
    per_panel = tol / panels
    total = 0.0
    for a, b in zip(edges, edges[1:]):
        mid = 0.5 * (a + b)
        fa, fm, fb = f(a), f(mid), f(b)
        whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
        total += _simpson_step(f, a, b, fa, fm, fb, whole, per_panel, 48)
    return total


def _simpson_step(f, lo, hi, flo, fmid, fhi, whole, tol, depth):
    mid = 0.5 * (lo + hi)
    lm = 0.5 * (lo + mid)
    rm = 0.5 * (mid + hi)
    flm = f(lm)
    frm = f(rm)
    left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid)
    right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi)
    err = left + right - whole
    if depth <= 0 or abs(err) <= 15.0 * tol:
        return left + right + err / 15.0
    half = 0.5 * tol
    return (_simpson_step(f, lo, mid, flo, flm, fmid, left, half, depth - 1)
            + _simpson_step(f, mid, hi, fmid, frm, fhi, right, half, depth - 1))


def _chi_pdf(s: float, d: int, log_norm: float) -> float:
    # density of the length of a d-dimensional standard normal
    if s <= 0.0:
        return 0.0
    return math.exp((d - 1) * math.log(s) - 0.5 * s * s + log_norm)


def exact_pi(base: Classifier, x, sigma: float) -> float:
    """Probability that the base classifier answers 1 at x + sigma*z.

    Closed form for a hyperplane; 1-D radial quadrature (absolute error
    below 1e-8) for a ball.  No closed geometry exists for the network
    classifier, which is rejected.
    """
    if not (sigma > 0.0) or not math.isfinite(sigma):
        raise ValueError(f"sigma must be a finite positive real, got {sigma}")
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != base.dimension:
        raise ValueError(
            f"point has shape {x.shape}, classifier expects ({base.dimension},)")
    if isinstance(base, LinearClassifier):
        return std_normal_cdf(base.margin(x) / (sigma * base.weight_norm))
    if isinstance(base, SphereClassifier):
        return _sphere_pi(base, x, sigma)
    raise UnsupportedGeometryError(
        f"{type(base).__name__} admits no exact class probability")


def _sphere_pi(base: SphereClassifier, x: np.ndarray, sigma: float) -> float:
    d = base.dimension
    a = base.center_distance(x) / sigma   # offset in noise units
    big_r = base.radius / sigma           # ball radius in noise units
    log_norm = (1.0 - 0.5 * d) * math.log(2.0) - math.lgamma(0.5 * d)
    pdf = lambda s: _chi_pdf(s, d, log_norm)
    tol = 1e-11
    if a < 1e-12:
        # centered: plain radial mass inside the ball
        return min(1.0, _adaptive_simpson(pdf, 0.0, big_r, tol))

    # Decompose z = s*u, u uniform on the unit sphere.  For fixed s the
    # admissible directions form a cap whose fraction is a symmetric
    # regularized incomplete beta in the cosine against the offset axis.
    nu = 0.5 * (d - 1)

    def cap_fraction(s: float) -> float:
        t = (big_r * big_r - a * a - s * s) / (2.0 * a * s)
        if t >= 1.0:
            return 1.0
        if t <= -1.0:
            return 0.0
        return reg_inc_beta(0.5 * (1.0 + t), nu, nu)

    # chi mass beyond sqrt(d) + 12 is ~1e-32, far below the quadrature
    # tolerance; truncating keeps the panel count bounded
    s_cut = math.sqrt(d) + 12.0
    total = 0.0
    if big_r > a:
        # radii small enough that every direction stays inside
        total += _adaptive_simpson(pdf, 0.0, min(big_r - a, s_cut), tol)
    total += _adaptive_simpson(lambda s: pdf(s) * cap_fraction(s),
                               min(abs(big_r - a), s_cut),
                               min(big_r + a, s_cut), tol)
    return min(1.0, max(0.0, total))


# ---------------------------------------------------------------------------
# Second-order approximation of the opposite-class probability


@dataclass(frozen=True)
class CurvatureProfile:
    """Signed boundary distance (in noise units) plus principal curvatures.

    beta is positive when x sits on the majority side; curvatures follow
    the sign convention of boundary_curvatures and must already be
    expressed in noise-standardized units (multiply input-space
    curvatures by sigma).
    """

    beta: float
    curvatures: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "curvatures",
                           np.asarray(self.curvatures, dtype=np.float64))
        if not math.isfinite(self.beta):
            raise ValueError("beta must be finite")
        if self.curvatures.ndim != 1:
            raise ValueError("curvatures must be a 1-D sequence")
        if not np.all(np.isfinite(self.curvatures)):
            raise ValueError("curvatures must be finite")


@dataclass(frozen=True)
class SormEstimate:
    """Approximate opposite-class probability; clamped marks a raw value
    above 1 that was truncated."""

    value: float
    clamped: bool = False


def sorm_pi0(profile: CurvatureProfile) -> SormEstimate:
    """Second-order estimate Phi(-beta) * prod (1 + beta*k_i)^(-1/2).

    Valid only where every 1 + beta*k_i is positive; a violation names
    the first offending curvature index.
    """
    beta = profile.beta
    prod = 1.0
    for i, kappa in enumerate(profile.curvatures):
        factor = 1.0 + beta * kappa
        if factor <= 0.0:
            raise ValueError(
                f"curvature {i} leaves the validity domain: "
                f"1 + beta*kappa = {factor} <= 0")
        prod *= 1.0 / math.sqrt(factor)
    raw = std_normal_cdf(-beta) * prod
    if raw > 1.0:
        return SormEstimate(value=1.0, clamped=True)
    return SormEstimate(value=raw, clamped=False)


# ---------------------------------------------------------------------------
# Vote thresholds for a target flip probability


def _check_odd_n(n: int) -> int:
    if not isinstance(n, int) or isinstance(n, bool):
        raise ValueError("n must be an integer")
    if n < 1 or n % 2 == 0:
        raise ValueError(
            f"n must be odd and >= 1 (strict-majority analysis), got {n}")
    return n


def _check_pa(pa: float) -> float:
    if not (0.5 <= pa < 1.0):
        raise ValueError(f"pa must lie in [1/2, 1), got {pa}")
    return pa


def pa_vote_threshold(n: int, pa: float) -> float:
    """Largest opposite-class probability that still flips a majority of
    n votes with probability at least pa.

    With m = 1 + n//2 the flip event is a binomial tail, and the tail
    identity through the regularized incomplete beta inverts it exactly.
    """
    _check_odd_n(n)
    _check_pa(pa)
    if pa == 0.5:
        return 0.5
    m = 1 + n // 2
    return 1.0 - inv_reg_inc_beta(pa, m, m)


def adversarial_distance_bound(radius: float, sigma: float, n: int,
                               pa: float) -> float:
    """Upper bound on how far past the certified radius a point must sit
    before flipping with probability pa becomes possible.
    """
    if not (radius >= 0.0) or not math.isfinite(radius):
        raise ValueError(f"radius must be a finite nonnegative real, got {radius}")
    if not (sigma >= 0.0) or not math.isfinite(sigma):
        raise ValueError(f"sigma must be a finite nonnegative real, got {sigma}")
    _check_odd_n(n)
    _check_pa(pa)
    if pa == 0.5:
        return radius
    m = 1 + n // 2
    return radius + sigma * std_normal_quantile(inv_reg_inc_beta(pa, m, m))


@dataclass(frozen=True)
class AdversarialEvidence:
    """Verdict of a flip-probability check with the counts behind it."""

    adversarial: bool
    mode: str
    flips: int
    trials: int
    needed: int


def verify_adversarial(base: Classifier, cfg: SmoothingConfig, x_a,
                       label_o: int, pa: float, mode: str,
                       stream: Stream, repeat_scale: int = 10) -> AdversarialEvidence:
    """Empirical check that x_a flips away from label_o often enough.

    exact-count inspects one batch of n micro-decisions and asks for
    ceil(n*pa) of them to disagree with label_o.  repeated-query runs
    ceil(repeat_scale / (1-pa)) independent full smoothed decisions and
    compares the flip fraction against pa.
    """
    if label_o not in (0, 1):
        raise ValueError(f"label_o must be 0 or 1, got {label_o}")
    if not (0.0 < pa < 1.0):
        raise ValueError(f"pa must lie in (0, 1), got {pa}")
    x_a = np.ascontiguousarray(np.asarray(x_a, dtype=np.float64))
    if x_a.ndim != 1 or x_a.shape[0] != base.dimension:
        raise ValueError(
            f"point has shape {x_a.shape}, classifier expects ({base.dimension},)")
    if mode == "exact-count":
        k1 = _class1_votes(base, x_a, cfg.sigma, cfg.n, stream.key)
        flips = (cfg.n - k1) if label_o == 1 else k1
        needed = math.ceil(cfg.n * pa)
        return AdversarialEvidence(adversarial=flips >= needed,
                                   mode=mode, flips=flips,
                                   trials=cfg.n, needed=needed)
    if mode == "repeated-query":
        if repeat_scale < 1:
            raise ValueError(f"repeat_scale must be >= 1, got {repeat_scale}")
        # the 1e-9 absorbs division artifacts: 10/(1-0.8) lands a hair
        # above 50 and would otherwise ceil to 51
        ell = math.ceil(repeat_scale / (1.0 - pa) - 1e-9)
        flips = 0
        for i in range(ell):
            d = smoothed_decide(base, cfg, x_a, stream.child(i))
            if d.label != label_o:
                flips += 1
        needed = math.ceil(pa * ell)
        return AdversarialEvidence(adversarial=flips / ell >= pa,
                                   mode=mode, flips=flips,
                                   trials=ell, needed=needed)
    raise ValueError(f"mode must be 'exact-count' or 'repeated-query', got {mode!r}")
