"""Scalar special functions for certification arithmetic.

Everything here is built from elementary operations plus math.lgamma:
normal CDF from a rational erfc approximation, quantile from a rational
initial estimate refined by one Newton step against our own CDF, and
the regularized incomplete beta from a Lentz continued fraction.  The
parameter ranges that matter are modest (beta parameters up to a few
hundred, normal arguments within |z| < 40), and accuracy throughout is
close to machine precision, comfortably below the 1e-12 the callers
need.

All domain violations raise ValueError.
"""
from __future__ import annotations

import math

from ._as241 import PPND_A, PPND_B, PPND_C, PPND_D, PPND_E, PPND_F

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 0.3989422804014326779399461  # 1/sqrt(2*pi)
_INV_SQRT_PI = 0.56418958354775628695  # 1/sqrt(pi)

# Cody's rational approximations for erf/erfc (the CALERF tables).
_ERF_A = (3.16112374387056560e00, 1.13864154151050156e02,
          3.77485237685302021e02, 3.20937758913846947e03,
          1.85777706184603153e-1)
_ERF_B = (2.36012909523441209e01, 2.44024637934444173e02,
          1.28261652607737228e03, 2.84423683343917062e03)
_ERF_C = (5.64188496988670089e-1, 8.88314979438837594e00,
          6.61191906371416295e01, 2.98635138197400131e02,
          8.81952221241769090e02, 1.71204761263407058e03,
          2.05107837782607147e03, 1.23033935479799725e03,
          2.15311535474403846e-8)
_ERF_D = (1.57449261107098347e01, 1.17693950891312499e02,
          5.37181101862009858e02, 1.62138957456669019e03,
          3.29079923573345963e03, 4.36261909014324716e03,
          3.43936767414372164e03, 1.23033935480374942e03)
_ERF_P = (3.05326634961232344e-1, 3.60344899949804439e-1,
          1.25781726111229246e-1, 1.60837851487422766e-2,
          6.58749161529837803e-4, 1.63153871373020978e-2)
_ERF_Q = (2.56852019228982242e00, 1.87295284992346047e00,
          5.27905102951428412e-1, 6.05183413124413191e-2,
          2.33520497626869185e-3)


def _check_finite(name: str, value: float) -> float:
    value = float(value)
    if math.isnan(value):
        raise ValueError(f"{name} is NaN")
    return value


def _erfc_core(x: float) -> float:
    """erfc(x) for x >= 0.46875."""
    if x > 26.6:  # erfc underflows past ~26.5
        return 0.0
    # exp(-x^2) split for accuracy: x^2 = ysq^2 + (x-ysq)(x+ysq)
    ysq = math.floor(x * 16.0) / 16.0
    dexp = math.exp(-ysq * ysq) * math.exp(-(x - ysq) * (x + ysq))
    if x <= 4.0:
        num = _ERF_C[8] * x
        den = x
        for i in range(7):
            num = (num + _ERF_C[i]) * x
            den = (den + _ERF_D[i]) * x
        return dexp * (num + _ERF_C[7]) / (den + _ERF_D[7])
    z = 1.0 / (x * x)
    num = _ERF_P[5] * z
    den = z
    for i in range(4):
        num = (num + _ERF_P[i]) * z
        den = (den + _ERF_Q[i]) * z
    r = z * (num + _ERF_P[4]) / (den + _ERF_Q[4])
    return (dexp / x) * (_INV_SQRT_PI - r)


def _erf_small(x: float) -> float:
    """erf(x) for |x| <= 0.46875."""
    y = x * x
    num = _ERF_A[4] * y
    den = y
    for i in range(3):
        num = (num + _ERF_A[i]) * y
        den = (den + _ERF_B[i]) * y
    return x * (num + _ERF_A[3]) / (den + _ERF_B[3])


def erfc(x: float) -> float:
    x = _check_finite("x", x)
    ax = abs(x)
    if ax <= 0.46875:
        return 1.0 - _erf_small(x)
    tail = _erfc_core(ax)
    return 2.0 - tail if x < 0.0 else tail


def std_normal_pdf(z: float) -> float:
    z = _check_finite("z", z)
    return _INV_SQRT_2PI * math.exp(-0.5 * z * z)


def std_normal_cdf(z: float) -> float:
    """P[N(0,1) <= z]."""
    z = _check_finite("z", z)
    return 0.5 * erfc(-z / _SQRT2)


def _poly8(coefs, x: float) -> float:
    acc = coefs[7]
    for i in range(6, -1, -1):
        acc = acc * x + coefs[i]
    return acc


def _ppnd(p: float) -> float:
    """Rational initial estimate for the normal quantile."""
    q = p - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        return q * _poly8(PPND_A, r) / _poly8(PPND_B, r)
    pm = p if q < 0.0 else 1.0 - p
    r = math.sqrt(-math.log(pm))
    if r <= 5.0:
        r -= 1.6
        x = _poly8(PPND_C, r) / _poly8(PPND_D, r)
    else:
        r -= 5.0
        x = _poly8(PPND_E, r) / _poly8(PPND_F, r)
    return -x if q < 0.0 else x


def std_normal_quantile(p: float) -> float:
    """Inverse of std_normal_cdf on (0, 1).

    One Newton correction against our own CDF keeps the pair mutually
    consistent to ~1e-15.
    """
    p = _check_finite("p", p)
    if not 0.0 < p < 1.0:
        raise ValueError(f"quantile requires 0 < p < 1, got {p}")
    x = _ppnd(p)
    pdf = std_normal_pdf(x)
    if pdf > 1e-280:
        x -= (std_normal_cdf(x) - p) / pdf
    return x


def _betacf(a: float, b: float, x: float) -> float:
    """Lentz continued fraction for the incomplete beta."""
    tiny = 1e-300
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 400):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            return h
    raise ValueError(f"incomplete beta did not converge for a={a} b={b} x={x}")


def _check_beta_params(a: float, b: float) -> tuple[float, float]:
    a = _check_finite("a", a)
    b = _check_finite("b", b)
    if a <= 0.0 or b <= 0.0 or math.isinf(a) or math.isinf(b):
        raise ValueError(f"beta parameters must be positive finite, got a={a} b={b}")
    return a, b


def reg_inc_beta(x: float, a: float, b: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    a, b = _check_beta_params(a, b)
    x = _check_finite("x", x)
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must lie in [0, 1], got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    lbeta = math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
    front = math.exp(lbeta + a * math.log(x) + b * math.log1p(-x))
    # Continued fraction converges fast on the near side of the mean.
    if x < (a + 1.0) / (a + b + 2.0):
        val = front * _betacf(a, b, x) / a
    else:
        val = 1.0 - front * _betacf(b, a, 1.0 - x) / b
    return min(1.0, max(0.0, val))


def _beta_pdf(x: float, a: float, b: float, lbeta: float) -> float:
    if x <= 0.0 or x >= 1.0:
        return 0.0
    return math.exp((a - 1.0) * math.log(x) + (b - 1.0) * math.log1p(-x) - lbeta)


def inv_reg_inc_beta(p: float, a: float, b: float) -> float:
    """Solve I_x(a, b) = p for x, safeguarded Newton to ~1e-14."""
    a, b = _check_beta_params(a, b)
    p = _check_finite("p", p)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    if p == 0.0:
        return 0.0
    if p == 1.0:
        return 1.0
    lbeta = math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)
    lo, hi = 0.0, 1.0
    x = a / (a + b)
    for _ in range(200):
        f = reg_inc_beta(x, a, b) - p
        if f > 0.0:
            hi = x
        elif f < 0.0:
            lo = x
        else:
            return x
        width = hi - lo
        if width <= 1e-16 or abs(f) < 1e-15:
            break
        pdf = _beta_pdf(x, a, b, lbeta)
        step_ok = False
        if pdf > 0.0:
            xn = x - f / pdf
            if lo < xn < hi:
                x = xn
                step_ok = True
        if not step_ok:
            x = 0.5 * (lo + hi)
    return x


def binomial_tail_geq(n: int, k: int, q: float) -> float:
    """P[Binomial(n, q) >= k], evaluated as an explicit term sum."""
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    if not isinstance(k, int) or isinstance(k, bool) or not 0 <= k <= n:
        raise ValueError(f"k must be an integer in [0, n], got {k!r}")
    q = _check_finite("q", q)
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"q must lie in [0, 1], got {q}")
    if k == 0:
        return 1.0
    if q == 0.0:
        return 0.0
    if q == 1.0:
        return 1.0
    lq = math.log(q)
    l1q = math.log1p(-q)
    lgn = math.lgamma(n + 1)
    total = 0.0
    for j in range(k, n + 1):
        lterm = (lgn - math.lgamma(j + 1) - math.lgamma(n - j + 1)
                 + j * lq + (n - j) * l1q)
        total += math.exp(lterm)
    return min(1.0, total)


def clopper_pearson_lower(k: int, n: int, alpha: float) -> float:
    """One-sided lower confidence bound for a binomial proportion.

    Returns the largest L with P[Binomial(n, L) >= k] = alpha, i.e. the
    exact one-sided bound; k = 0 gives 0 by convention.
    """
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    if not isinstance(k, int) or isinstance(k, bool) or not 0 <= k <= n:
        raise ValueError(f"k must be an integer in [0, n], got {k!r}")
    alpha = _check_finite("alpha", alpha)
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if k == 0:
        return 0.0
    if k == n:
        return math.exp(math.log(alpha) / n)
    return inv_reg_inc_beta(alpha, float(k), float(n - k + 1))
