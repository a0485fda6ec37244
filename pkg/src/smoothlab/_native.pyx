# cython: boundscheck=False, wraparound=False, initializedcheck=False
# cython: cdivision=True, language_level=3
"""Native kernel backend.

Scalar twin of _kernels_py: same Philox4x32-10 counters, same portable
log and inverse-CDF polynomials, same accumulation order in every vote
loop.  Output must match the numpy backend bit for bit; the build turns
off floating-point contraction to keep it that way.  See _kernels_py
for the counter layout and the rationale.
"""
import numpy as np

from libc.math cimport frexp, sqrt
from libc.stdint cimport uint64_t

BACKEND_NAME = "native"

cdef uint64_t M0 = 0xD2511F53u
cdef uint64_t M1 = 0xCD9E8D57u
cdef uint64_t W0 = 0x9E3779B9u
cdef uint64_t W1 = 0xBB67AE85u
cdef uint64_t MASK32 = 0xFFFFFFFFu

cdef double LN2_HI = 6.93147180369123816490e-01
cdef double LN2_LO = 1.90821492927058770002e-10
cdef double SQRT_HALF = 0.7071067811865476
cdef double TWO_M53 = 1.1102230246251565e-16  # 2^-53

cdef double[14] LOG_COEF
LOG_COEF[:] = [1.0 / 27, 1.0 / 25, 1.0 / 23, 1.0 / 21, 1.0 / 19, 1.0 / 17,
               1.0 / 15, 1.0 / 13, 1.0 / 11, 1.0 / 9, 1.0 / 7, 1.0 / 5,
               1.0 / 3, 1.0]

cdef double[8] PA, PB, PC, PD, PE, PF
PA[:] = [3.3871328727963666080e0, 1.3314166789178437745e2,
         1.9715909503065514427e3, 1.3731693765509461125e4,
         4.5921953931549871457e4, 6.7265770927008700853e4,
         3.3430575583588128105e4, 2.5090809287301226727e3]
PB[:] = [1.0, 4.2313330701600911252e1, 6.8718700749205790830e2,
         5.3941960214247511077e3, 2.1213794301586595867e4,
         3.9307895800092710610e4, 2.8729085735721942674e4,
         5.2264952788528545610e3]
PC[:] = [1.42343711074968357734e0, 4.63033784615654529590e0,
         5.76949722146069140550e0, 3.64784832476320460504e0,
         1.27045825245236838258e0, 2.41780725177450611770e-1,
         2.27238449892691845833e-2, 7.74545014278341407640e-4]
PD[:] = [1.0, 2.05319162663775882187e0, 1.67638483018380384940e0,
         6.89767334985100004550e-1, 1.48103976427480074590e-1,
         1.51986665636164571966e-2, 5.47593808499534494600e-4,
         1.05075007164441684324e-9]
PE[:] = [6.65790464350110377720e0, 5.46378491116411436990e0,
         1.78482653991729133580e0, 2.96560571828504891230e-1,
         2.65321895265761230930e-2, 1.24266094738807843860e-3,
         2.71155556874348757815e-5, 2.01033439929228813265e-7]
PF[:] = [1.0, 5.99832206555887937690e-1, 1.36929880922735805310e-1,
         1.48753612908506148525e-2, 7.86869131145613259100e-4,
         1.84631831751005468180e-5, 1.42151175831644588870e-7,
         2.04426310338993978564e-15]


cdef inline void _philox(uint64_t c0, uint64_t c1, uint64_t c2, uint64_t c3,
                         uint64_t k0, uint64_t k1, uint64_t* out) noexcept nogil:
    cdef int i
    cdef uint64_t p0, p1, hi0, lo0, hi1, lo1, n0, n1, n2, n3
    for i in range(10):
        p0 = M0 * c0
        p1 = M1 * c2
        hi0 = p0 >> 32
        lo0 = p0 & MASK32
        hi1 = p1 >> 32
        lo1 = p1 & MASK32
        n0 = hi1 ^ c1 ^ k0
        n1 = lo1
        n2 = hi0 ^ c3 ^ k1
        n3 = lo0
        c0 = n0
        c1 = n1
        c2 = n2
        c3 = n3
        k0 = (k0 + W0) & MASK32
        k1 = (k1 + W1) & MASK32
    out[0] = c0
    out[1] = c1
    out[2] = c2
    out[3] = c3


cdef inline double _uniform_word(uint64_t w) noexcept nogil:
    return <double>((w >> 11) | 1u) * TWO_M53


cdef inline double _plog(double x) noexcept nogil:
    cdef int e
    cdef double m = frexp(x, &e)
    cdef double ef, r, t, p
    cdef int i
    if m < SQRT_HALF:
        m = m + m
        e = e - 1
    ef = <double>e
    r = (m - 1.0) / (m + 1.0)
    t = r * r
    p = LOG_COEF[0]
    for i in range(1, 14):
        p = p * t + LOG_COEF[i]
    return ef * LN2_HI + (2.0 * r * p + ef * LN2_LO)


cdef inline double _poly8(double* c, double x) noexcept nogil:
    cdef double acc = c[7]
    cdef int i
    for i in range(6, -1, -1):
        acc = acc * x + c[i]
    return acc


cdef inline double _ppnd(double p) noexcept nogil:
    cdef double q = p - 0.5
    cdef double rc, pm, r, rr, x
    if q <= 0.425 and q >= -0.425:
        rc = 0.180625 - q * q
        return q * _poly8(PA, rc) / _poly8(PB, rc)
    pm = p if q < 0 else 1.0 - p
    r = sqrt(-_plog(pm))
    if r <= 5.0:
        rr = r - 1.6
        x = _poly8(PC, rr) / _poly8(PD, rr)
    else:
        rr = r - 5.0
        x = _poly8(PE, rr) / _poly8(PF, rr)
    return -x if q < 0 else x


cdef inline void _fill_normals(uint64_t key, uint64_t sample, int dim,
                               double* buf) noexcept nogil:
    cdef uint64_t k_lo = key & MASK32
    cdef uint64_t k_hi = key >> 32
    cdef uint64_t[4] r
    cdef int j, npairs = (dim + 1) // 2
    cdef uint64_t wa, wb
    for j in range(npairs):
        _philox(<uint64_t>j, sample & MASK32, sample >> 32, 0u, k_lo, k_hi, r)
        wa = (r[0] << 32) | r[1]
        wb = (r[2] << 32) | r[3]
        buf[2 * j] = _ppnd(_uniform_word(wa))
        if 2 * j + 1 < dim:
            buf[2 * j + 1] = _ppnd(_uniform_word(wb))


def philox_block(c0, c1, c2, c3, key_lo, key_hi):
    """Single Philox4x32-10 block, for known-answer tests."""
    cdef uint64_t[4] out
    _philox(<uint64_t>c0 & MASK32, <uint64_t>c1 & MASK32,
            <uint64_t>c2 & MASK32, <uint64_t>c3 & MASK32,
            <uint64_t>key_lo & MASK32, <uint64_t>key_hi & MASK32, out)
    return int(out[0]), int(out[1]), int(out[2]), int(out[3])


def uniforms(key, start, count):
    cdef uint64_t ukey = <uint64_t>key
    cdef uint64_t k_lo = ukey & MASK32
    cdef uint64_t k_hi = ukey >> 32
    cdef uint64_t i, idx, pair
    cdef uint64_t ustart = <uint64_t>start
    cdef uint64_t n = <uint64_t>count
    cdef uint64_t[4] r
    out_arr = np.empty(count, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef uint64_t wa, wb
    with nogil:
        for i in range(n):
            idx = ustart + i
            pair = idx >> 1
            _philox(pair & MASK32, pair >> 32, 0u, 1u, k_lo, k_hi, r)
            wa = (r[0] << 32) | r[1]
            wb = (r[2] << 32) | r[3]
            out[i] = _uniform_word(wa) if (idx & 1u) == 0u else _uniform_word(wb)
    return out_arr


def normals(key, start_sample, n_samples, dim):
    cdef uint64_t ukey = <uint64_t>key
    cdef uint64_t base = <uint64_t>start_sample
    cdef Py_ssize_t n = n_samples, d = dim, s
    out_arr = np.empty((n_samples, dim), dtype=np.float64)
    if n == 0 or d == 0:
        return out_arr
    cdef double[:, ::1] out = out_arr
    with nogil:
        for s in range(n):
            _fill_normals(ukey, base + <uint64_t>s, <int>d, &out[s, 0])
    return out_arr


def vote_linear(key, start_sample, n_samples, double[::1] x, double[::1] w,
                double b, double sigma):
    cdef uint64_t ukey = <uint64_t>key
    cdef uint64_t base = <uint64_t>start_sample
    cdef Py_ssize_t n = n_samples, d = x.shape[0], s, j
    cdef double acc, y
    cdef int votes = 0
    buf_arr = np.empty(d, dtype=np.float64)
    cdef double[::1] buf = buf_arr
    with nogil:
        for s in range(n):
            _fill_normals(ukey, base + <uint64_t>s, <int>d, &buf[0])
            acc = 0.0
            for j in range(d):
                y = x[j] + sigma * buf[j]
                acc += w[j] * y
            acc += b
            if acc > 0.0:
                votes += 1
    return votes


def vote_sphere(key, start_sample, n_samples, double[::1] x,
                double[::1] center, double radius, double sigma):
    cdef uint64_t ukey = <uint64_t>key
    cdef uint64_t base = <uint64_t>start_sample
    cdef Py_ssize_t n = n_samples, d = x.shape[0], s, j
    cdef double acc, y, t, r2 = radius * radius
    cdef int votes = 0
    buf_arr = np.empty(d, dtype=np.float64)
    cdef double[::1] buf = buf_arr
    with nogil:
        for s in range(n):
            _fill_normals(ukey, base + <uint64_t>s, <int>d, &buf[0])
            acc = 0.0
            for j in range(d):
                y = x[j] + sigma * buf[j]
                t = y - center[j]
                acc += t * t
            if acc < r2:
                votes += 1
    return votes


def vote_mlp(key, start_sample, n_samples, double[::1] x,
             double[:, ::1] w1, double[::1] b1, double[:, ::1] w2,
             double[::1] b2, double[:, ::1] w3, double[::1] b3, double sigma):
    cdef uint64_t ukey = <uint64_t>key
    cdef uint64_t base = <uint64_t>start_sample
    cdef Py_ssize_t n = n_samples, d = x.shape[0], s, j, u
    cdef Py_ssize_t h1n = w1.shape[0], h2n = w2.shape[0]
    cdef double acc, t, l0, l1
    cdef int votes = 0
    y_arr = np.empty(d, dtype=np.float64)
    h1_arr = np.empty(h1n, dtype=np.float64)
    h2_arr = np.empty(h2n, dtype=np.float64)
    cdef double[::1] y = y_arr
    cdef double[::1] h1 = h1_arr
    cdef double[::1] h2 = h2_arr
    with nogil:
        for s in range(n):
            _fill_normals(ukey, base + <uint64_t>s, <int>d, &y[0])
            for j in range(d):
                y[j] = x[j] + sigma * y[j]
            for u in range(h1n):
                acc = b1[u]
                for j in range(d):
                    acc += w1[u, j] * y[j]
                t = 1.0 + acc * acc
                h1[u] = acc / sqrt(t)
            for u in range(h2n):
                acc = b2[u]
                for j in range(h1n):
                    acc += w2[u, j] * h1[j]
                t = 1.0 + acc * acc
                h2[u] = acc / sqrt(t)
            l0 = b3[0]
            for j in range(h2n):
                l0 += w3[0, j] * h2[j]
            l1 = b3[1]
            for j in range(h2n):
                l1 += w3[1, j] * h2[j]
            if l1 > l0:
                votes += 1
    return votes
