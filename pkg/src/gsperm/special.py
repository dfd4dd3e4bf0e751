"""Normal and Student t distribution functions.

The normal cdf is taken from :func:`scipy.special.ndtr`. The normal quantile
is Wichura's AS 241 rational approximation followed by one Newton step. The t
distribution is built on a continued-fraction evaluation of the regularized
incomplete beta function.
"""

import math

import numpy as np
from scipy.optimize import brentq
from scipy.special import betaln, ndtr

from .errors import DomainError, NumericalError

__all__ = [
    "std_normal_cdf",
    "std_normal_sf",
    "std_normal_pdf",
    "std_normal_quantile",
    "betainc_reg",
    "t_cdf",
    "t_sf",
    "t_quantile",
    "t_isf",
]

_SQRT_2PI = math.sqrt(2.0 * math.pi)


def std_normal_cdf(x):
    """Standard normal cdf; accepts scalars or arrays."""
    out = ndtr(x)
    return float(out) if np.ndim(out) == 0 else out


def std_normal_sf(x):
    """Upper tail ``1 - Phi(x)`` without cancellation for large ``x``."""
    out = ndtr(-np.asarray(x, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def std_normal_pdf(x):
    x = np.asarray(x, dtype=float)
    out = np.exp(-0.5 * x * x) / _SQRT_2PI
    return float(out) if out.ndim == 0 else out


# AS 241 (PPND16) coefficients.
_A = (3.3871328727963666080e0, 1.3314166789178437745e2, 1.9715909503065514427e3,
      1.3731693765509461125e4, 4.5921953931549871457e4, 6.7265770927008700853e4,
      3.3430575583588128105e4, 2.5090809287301226727e3)
_B = (1.0, 4.2313330701600911252e1, 6.8718700749205790830e2,
      5.3941960214247511077e3, 2.1213794301586595867e4, 3.9307895800092710610e4,
      2.8729085735721942674e4, 5.2264952788528545610e3)
_C = (1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
      3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
      2.27238449892691845833e-2, 7.74545014278341407640e-4)
_D = (1.0, 2.05319162663775882187e0, 1.67638483018380384940e0,
      6.89767334985100004550e-1, 1.48103976427480074590e-1, 1.51986665636164571966e-2,
      5.47593808499534494600e-4, 1.05075007164441684324e-9)
_E = (6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
      2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
      2.71155556874348757815e-5, 2.01033439929228813265e-7)
_F = (1.0, 5.99832206555887937690e-1, 1.36929880922735805310e-1,
      1.48753612908506148525e-2, 7.86869131145613259100e-4, 1.84631831751005468180e-5,
      1.42151175831644588870e-7, 2.04426310338993978564e-15)


def _poly(coefs, x):
    acc = np.zeros_like(x)
    for c in reversed(coefs):
        acc = acc * x + c
    return acc


def std_normal_quantile(p):
    """Inverse of the standard normal cdf.

    Args:
        p: probability or array of probabilities, strictly inside (0, 1).

    Raises:
        DomainError: if any ``p`` is outside the open unit interval.
    """
    p_arr = np.asarray(p, dtype=float)
    if np.any(~(p_arr > 0.0) | ~(p_arr < 1.0)):
        raise DomainError("normal quantile requires 0 < p < 1")
    q = p_arr - 0.5
    out = np.empty_like(p_arr)

    central = np.abs(q) <= 0.425
    if np.any(central):
        qc = q[central]
        r = 0.180625 - qc * qc
        out[central] = qc * _poly(_A, r) / _poly(_B, r)

    tail = ~central
    if np.any(tail):
        qt = q[tail]
        pt = p_arr[tail]
        r = np.where(qt < 0, pt, 1.0 - pt)
        r = np.sqrt(-np.log(r))
        near = r <= 5.0
        x = np.empty_like(r)
        rn = r[near] - 1.6
        x[near] = _poly(_C, rn) / _poly(_D, rn)
        rf = r[~near] - 5.0
        x[~near] = _poly(_E, rf) / _poly(_F, rf)
        out[tail] = np.where(qt < 0, -x, x)

    # One Newton step against the tail that is computed without cancellation.
    lower = out <= 0
    resid = np.where(lower, ndtr(out) - p_arr, (1.0 - p_arr) - ndtr(-out))
    resid = np.where(lower, resid, -resid)
    out = out - resid / (np.exp(-0.5 * out * out) / _SQRT_2PI)
    return float(out) if out.ndim == 0 else out


_CF_EPS = 1e-16
_CF_TINY = 1e-300
_CF_MAXIT = 20000


def _betacf(a, b, x):
    """Continued fraction for the incomplete beta (modified Lentz)."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_TINY:
        d = _CF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAXIT + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise NumericalError(
        "incomplete beta continued fraction did not converge",
        {"a": a, "b": b, "x": x},
    )


def betainc_reg(a, b, x, y=None):
    """Regularized incomplete beta ``I_x(a, b)``.

    ``y`` may carry ``1 - x`` computed without cancellation by the caller.
    """
    if a <= 0 or b <= 0:
        raise DomainError("incomplete beta requires a > 0 and b > 0")
    if y is None:
        y = 1.0 - x
    if not (0.0 <= x <= 1.0):
        raise DomainError("incomplete beta requires 0 <= x <= 1")
    if x == 0.0:
        return 0.0
    if y == 0.0:
        return 1.0
    log_front = a * math.log(x) + b * math.log(y) - betaln(a, b)
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(log_front) * _betacf(a, b, x) / a
    return 1.0 - math.exp(log_front) * _betacf(b, a, y) / b


def _check_df(df):
    if not df > 0:
        raise DomainError(f"degrees of freedom must be positive, got {df}")


def t_sf(t, df):
    """Upper tail probability of Student's t with ``df`` degrees of freedom."""
    _check_df(df)
    if math.isinf(t):
        return 0.0 if t > 0 else 1.0
    t2 = t * t
    x = df / (df + t2)
    y = t2 / (df + t2)
    half_tail = 0.5 * betainc_reg(0.5 * df, 0.5, x, y)
    return half_tail if t >= 0 else 1.0 - half_tail


def t_cdf(t, df):
    _check_df(df)
    return t_sf(-t, df)


def t_isf(q, df):
    """Value ``t`` with upper tail probability ``q``.

    Solved by bracketed root finding on the tail function, so results stay
    accurate for upper tails far below machine epsilon relative to 1.
    """
    _check_df(df)
    if not (0.0 <= q <= 1.0) or math.isnan(q):
        raise DomainError("tail probability must lie in [0, 1]")
    if q == 0.0:
        return math.inf
    if q == 1.0:
        return -math.inf
    if q > 0.5:
        return -t_isf(1.0 - q, df)
    if q == 0.5:
        return 0.0
    hi = max(1.0, -float(std_normal_quantile(q)))
    while t_sf(hi, df) > q:
        hi *= 2.0
        if hi > 1e300:
            return math.inf
    # Root of log-tail is better conditioned than the tail itself.
    target = math.log(q)
    return brentq(lambda t: math.log(t_sf(t, df)) - target, 0.0, hi,
                  xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=500)


def t_quantile(p, df):
    """Inverse cdf of Student's t."""
    _check_df(df)
    if not (0.0 < p < 1.0):
        raise DomainError("t quantile requires 0 < p < 1")
    if p < 0.5:
        return -t_isf(p, df)
    return t_isf(1.0 - p, df)
