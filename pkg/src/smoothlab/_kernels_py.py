"""Pure numpy kernel backend.

Reference implementation of the counter-based random stream and the
Monte Carlo vote kernels.  The native extension must agree with this
module bit for bit, which constrains the style throughout:

* no BLAS calls: dot products accumulate one coordinate at a time so
  the summation order equals the naive scalar loop,
* no libm transcendentals: log is evaluated by an explicit polynomial
  (np.log may differ across platforms in the last bit),
* every floating operation appears in the same order as the scalar
  loop in _native.pyx.

All randomness derives from Philox4x32-10.  A stream is a 64-bit key;
the 128-bit counter encodes the sample address, so any value can be
regenerated independently of what was drawn before it.

Counter layout (c0, c1, c2, c3), all 32-bit words:
  normals for (sample s, pair j):  (j, s_lo, s_hi, 0)
  uniform pair k:                  (k_lo, k_hi, 0, 1)
Each block yields two 64-bit words, i.e. two doubles.
"""
import numpy as np

from ._as241 import (
    LN2_HI, LN2_LO, LOG_COEF, PPND_A, PPND_B, PPND_C, PPND_D, PPND_E,
    PPND_F, SQRT_HALF,
)

BACKEND_NAME = "python"

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint64(0x9E3779B9)
_W1 = np.uint64(0xBB67AE85)
_MASK32 = np.uint64(0xFFFFFFFF)
_SH32 = np.uint64(32)
_SH11 = np.uint64(11)
_ONE = np.uint64(1)
_TWO_M53 = 2.0 ** -53


def philox4x32(c0, c1, c2, c3, key_lo, key_hi):
    """One batch of Philox4x32-10 blocks.

    Inputs are uint64 arrays holding 32-bit words; returns the four
    output lanes as uint64 arrays of 32-bit words.
    """
    c0 = np.asarray(c0, dtype=np.uint64) & _MASK32
    c1 = np.asarray(c1, dtype=np.uint64) & _MASK32
    c2 = np.asarray(c2, dtype=np.uint64) & _MASK32
    c3 = np.asarray(c3, dtype=np.uint64) & _MASK32
    k0 = np.uint64(key_lo) & _MASK32
    k1 = np.uint64(key_hi) & _MASK32
    for _ in range(10):
        p0 = _M0 * c0
        p1 = _M1 * c2
        hi0 = p0 >> _SH32
        lo0 = p0 & _MASK32
        hi1 = p1 >> _SH32
        lo1 = p1 & _MASK32
        c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
        k0 = (k0 + _W0) & _MASK32
        k1 = (k1 + _W1) & _MASK32
    return c0, c1, c2, c3


def philox_block(c0, c1, c2, c3, key_lo, key_hi):
    """Single Philox4x32-10 block, for known-answer tests."""
    one = np.full(1, 1, dtype=np.uint64)
    r = philox4x32(one * np.uint64(c0), one * np.uint64(c1),
                   one * np.uint64(c2), one * np.uint64(c3), key_lo, key_hi)
    return tuple(int(v[0]) for v in r)


def _blocks_u64(c0, c1, c2, c3, key):
    key = np.uint64(key)
    k_lo = key & _MASK32
    k_hi = key >> _SH32
    r0, r1, r2, r3 = philox4x32(c0, c1, c2, c3, k_lo, k_hi)
    return (r0 << _SH32) | r1, (r2 << _SH32) | r3


def _u64_to_uniform(w):
    # Force the low mantissa bit so the result is an exact multiple of
    # 2^-53 strictly inside (0, 1); no rounding anywhere.
    return ((w >> _SH11) | _ONE).astype(np.float64) * _TWO_M53


def portable_log(x):
    """log(x) for positive x, identical bit pattern on every platform."""
    m, e = np.frexp(x)
    small = m < SQRT_HALF
    m = np.where(small, m + m, m)
    e = np.where(small, e - 1, e).astype(np.float64)
    r = (m - 1.0) / (m + 1.0)
    t = r * r
    p = np.full_like(r, LOG_COEF[0])
    for c in LOG_COEF[1:]:
        p = p * t + c
    return e * LN2_HI + (2.0 * r * p + e * LN2_LO)


def _poly(coefs, x):
    acc = np.full_like(x, coefs[-1])
    for c in coefs[-2::-1]:
        acc = acc * x + c
    return acc


def normal_from_uniform(p):
    """Inverse normal CDF at p in (0,1), PPND16 rational form."""
    p = np.asarray(p, dtype=np.float64)
    q = p - 0.5
    central = np.abs(q) <= 0.425
    rc = 0.180625 - q * q
    x_central = q * _poly(PPND_A, rc) / _poly(PPND_B, rc)
    pm = np.where(q < 0, p, 1.0 - p)
    pm = np.where(central, 0.25, pm)  # keep the dead branch finite
    r = np.sqrt(-portable_log(pm))
    near = r <= 5.0
    rr = np.where(near, r - 1.6, r - 5.0)
    num = np.where(near, _poly(PPND_C, rr), _poly(PPND_E, rr))
    den = np.where(near, _poly(PPND_D, rr), _poly(PPND_F, rr))
    x_tail = num / den
    x_tail = np.where(q < 0, -x_tail, x_tail)
    return np.where(central, x_central, x_tail)


def uniforms(key, start, count):
    """Uniform doubles in (0,1); element i of the stream is start+i."""
    if count == 0:
        return np.empty(0, dtype=np.float64)
    idx = np.arange(start, start + count, dtype=np.uint64)
    pair = idx >> _ONE
    first = pair[0]
    last = pair[-1]
    k = np.arange(first, last + _ONE, dtype=np.uint64)
    wa, wb = _blocks_u64(k & _MASK32, k >> _SH32,
                         np.zeros_like(k), np.ones_like(k), key)
    both = np.empty(2 * k.size, dtype=np.uint64)
    both[0::2] = wa
    both[1::2] = wb
    words = both[idx - (first << _ONE)]
    return _u64_to_uniform(words)


def normals(key, start_sample, n_samples, dim):
    """Standard normal matrix, shape (n_samples, dim).

    Row s is addressed by absolute sample index start_sample + s, so a
    slice of the stream can be regenerated without the rest.
    """
    if n_samples == 0 or dim == 0:
        return np.empty((n_samples, dim), dtype=np.float64)
    npairs = (dim + 1) // 2
    s = np.arange(start_sample, start_sample + n_samples, dtype=np.uint64)
    s_grid = np.repeat(s, npairs)
    j_grid = np.tile(np.arange(npairs, dtype=np.uint64), n_samples)
    wa, wb = _blocks_u64(j_grid, s_grid & _MASK32, s_grid >> _SH32,
                         np.zeros_like(s_grid), key)
    u = np.empty((n_samples, 2 * npairs), dtype=np.float64)
    u[:, 0::2] = _u64_to_uniform(wa).reshape(n_samples, npairs)
    u[:, 1::2] = _u64_to_uniform(wb).reshape(n_samples, npairs)
    return normal_from_uniform(u[:, :dim])


def vote_linear(key, start_sample, n_samples, x, w, b, sigma):
    """Count of noisy points on the positive side of the hyperplane.

    Each sample s evaluates sum_j w_j*(x_j + sigma*z_sj) + b > 0 with
    left-to-right accumulation over j.
    """
    z = normals(key, start_sample, n_samples, x.shape[0])
    acc = np.zeros(n_samples, dtype=np.float64)
    for j in range(x.shape[0]):
        y = x[j] + sigma * z[:, j]
        acc += w[j] * y
    acc += b
    return int(np.count_nonzero(acc > 0.0))


def vote_sphere(key, start_sample, n_samples, x, center, radius, sigma):
    """Count of noisy points strictly inside the ball."""
    z = normals(key, start_sample, n_samples, x.shape[0])
    acc = np.zeros(n_samples, dtype=np.float64)
    for j in range(x.shape[0]):
        y = x[j] + sigma * z[:, j]
        t = y - center[j]
        acc += t * t
    r2 = radius * radius
    return int(np.count_nonzero(acc < r2))


def _dense(prev, weight, bias, act):
    """One dense layer over a batch, accumulation order fixed per unit."""
    n = prev.shape[0]
    out = np.empty((n, weight.shape[0]), dtype=np.float64)
    for u in range(weight.shape[0]):
        acc = np.full(n, bias[u], dtype=np.float64)
        for j in range(weight.shape[1]):
            acc += weight[u, j] * prev[:, j]
        if act:
            t = 1.0 + acc * acc
            acc = acc / np.sqrt(t)
        out[:, u] = acc
    return out


def mlp_logits(x_batch, w1, b1, w2, b2, w3, b3):
    """Forward pass for a batch; activation x/sqrt(1+x^2) on hidden layers."""
    h1 = _dense(x_batch, w1, b1, act=True)
    h2 = _dense(h1, w2, b2, act=True)
    return _dense(h2, w3, b3, act=False)


def vote_mlp(key, start_sample, n_samples, x, w1, b1, w2, b2, w3, b3, sigma):
    """Count of noisy points the network assigns to class 1.

    Class 1 wins only on a strict logit comparison; an exact tie is a
    class 0 vote.
    """
    z = normals(key, start_sample, n_samples, x.shape[0])
    y = np.empty_like(z)
    for j in range(x.shape[0]):
        y[:, j] = x[j] + sigma * z[:, j]
    logits = mlp_logits(y, w1, b1, w2, b2, w3, b3)
    return int(np.count_nonzero(logits[:, 1] > logits[:, 0]))
