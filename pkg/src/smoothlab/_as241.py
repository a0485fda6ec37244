"""Shared constants for the portable normal quantile and logarithm.

Rational minimax coefficients for the inverse normal CDF (Wichura's
PPND16 form: three branches, |q| <= 0.425 central, then two tail
regimes split at r = 5).  The native extension embeds the same numbers
as C arrays; the backend-equivalence tests pin them against each other,
so any edit here must be mirrored in _native.pyx.
"""

# log(2) split into a 29-bit head and the remainder so that
# e*LN2_HI is exact for |e| < 2**22 and the tail is added separately.
LN2_HI = 6.93147180369123816490e-01
LN2_LO = 1.90821492927058770002e-10
SQRT_HALF = 0.7071067811865476

# atanh series for log(m), m in [sqrt(1/2), sqrt(2)):
# log(m) = 2r(1 + r^2/3 + r^4/5 + ...), r = (m-1)/(m+1), |r| <= 0.1716.
# Highest power first for Horner evaluation in t = r^2.
LOG_COEF = tuple(1.0 / k for k in range(27, 0, -2))

PPND_A = (
    3.3871328727963666080e0, 1.3314166789178437745e2, 1.9715909503065514427e3,
    1.3731693765509461125e4, 4.5921953931549871457e4, 6.7265770927008700853e4,
    3.3430575583588128105e4, 2.5090809287301226727e3,
)
PPND_B = (
    1.0, 4.2313330701600911252e1, 6.8718700749205790830e2, 5.3941960214247511077e3,
    2.1213794301586595867e4, 3.9307895800092710610e4, 2.8729085735721942674e4,
    5.2264952788528545610e3,
)
PPND_C = (
    1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
    3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
    2.27238449892691845833e-2, 7.74545014278341407640e-4,
)
PPND_D = (
    1.0, 2.05319162663775882187e0, 1.67638483018380384940e0, 6.89767334985100004550e-1,
    1.48103976427480074590e-1, 1.51986665636164571966e-2, 5.47593808499534494600e-4,
    1.05075007164441684324e-9,
)
PPND_E = (
    6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
    2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
    2.71155556874348757815e-5, 2.01033439929228813265e-7,
)
PPND_F = (
    1.0, 5.99832206555887937690e-1, 1.36929880922735805310e-1, 1.48753612908506148525e-2,
    7.86869131145613259100e-4, 1.84631831751005468180e-5, 1.42151175831644588870e-7,
    2.04426310338993978564e-15,
)
