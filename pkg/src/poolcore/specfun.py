"""Numerical kernel: regularized incomplete gamma, chi-square and gamma
distribution functions, normal CDF/quantile, and beta sampling.

Everything incomplete-gamma runs through a single pair of scalar routines
(lower series / upper continued fraction) evaluated in log space.  The shape
parameter can be as small as ~1e-9 and quantiles are tracked as log(x), so
values far below the double underflow threshold remain meaningful.  Public
linear-scale wrappers (chi2_cdf, chi2_quantile, ...) cover the representable
range; the log-channel functions (reg_gamma_log_lower, chi2_log_quantile,
...) are what the pooling layer uses internally.
"""

import math

import numpy as np
from numba import njit

from .errors import ValidationError

LN2 = 0.6931471805599453


# --------------------------------------------------------------------------
# regularized incomplete gamma, log scale
# --------------------------------------------------------------------------

@njit(cache=True)
def _series_log_lower(s, lx):
    """log P(s, x) for x < s+1, given lx = log x.

    Two series share the region.  For s >= 0.5 the standard one:
        P = x^s e^{-x} / Gamma(s+1) * (1 + sum_{n>=1} x^n / prod(s+k))
    For s < 0.5 the Kummer-transformed form keeps every term O(s) so that
    log P = s*lx - lgamma(s+1) + log1p(s*T) carries full relative accuracy
    even when log P itself is ~1e-9:
        T = sum_{n>=1} (-x)^n / (n! (s+n))
    Either way an underflowed x (lx < -746) degenerates cleanly to
    log P = s*lx - lgamma(s+1).
    """
    x = math.exp(lx)
    if s < 0.5:
        t_sum = 0.0
        c = 1.0
        for n in range(1, 40000):
            c *= -x / n
            term = c / (s + n)
            t_sum += term
            if abs(term) <= 1e-18 * (abs(t_sum) + 1e-300):
                break
        return s * lx - math.lgamma(s + 1.0) + math.log1p(s * t_sum)
    ssum = 0.0
    term = 1.0
    # needs ~sqrt(2*39*s) terms when x is near s, so the bound scales to
    # shapes ~5e12 (chi_kappa range-probing kappa = e^20 at M = 10000)
    for n in range(1, 20000000):
        term *= x / (s + n)
        ssum += term
        if term <= 1e-18 * (ssum + 1e-300):
            break
    return s * lx - x - math.lgamma(s + 1.0) + math.log1p(ssum)


@njit(cache=True)
def _cf_log_upper(s, lx):
    """log Q(s, x) for x >= s+1, given lx = log x.  Lentz continued fraction."""
    x = math.exp(lx)
    if x == math.inf:
        return -math.inf
    tiny = 1e-300
    b = x + 1.0 - s
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 20000000):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return s * lx - x - math.lgamma(s) + math.log(h)


@njit(cache=True)
def _log_lower_upper(s, lx):
    """(log P, log Q) at log-x, choosing series or continued fraction.

    The complement is taken through expm1 when the primary value is near 1
    so both logs keep relative accuracy.
    """
    if lx < math.log(s + 1.0):
        lp = _series_log_lower(s, lx)
        if lp > -LN2:
            q = -math.expm1(lp)
            lq = math.log(q) if q > 0.0 else -math.inf
        else:
            lq = math.log1p(-math.exp(lp))
        return lp, lq
    lq = _cf_log_upper(s, lx)
    if lq > -LN2:
        p = -math.expm1(lq)
        lp = math.log(p) if p > 0.0 else -math.inf
    else:
        lp = math.log1p(-math.exp(lq))
    return lp, lq


@njit(cache=True)
def _log_lower(s, lx):
    lp, _ = _log_lower_upper(s, lx)
    return lp


@njit(cache=True)
def _log_upper(s, lx):
    _, lq = _log_lower_upper(s, lx)
    return lq


# --------------------------------------------------------------------------
# inverse normal CDF (Acklam rational approximation + one Halley step)
# --------------------------------------------------------------------------

@njit(cache=True)
def _ndtri(p):
    if p <= 0.0:
        return -math.inf
    if p >= 1.0:
        return math.inf
    a1 = -3.969683028665376e+01
    a2 = 2.209460984245205e+02
    a3 = -2.759285104469687e+02
    a4 = 1.383577518672690e+02
    a5 = -3.066479806614716e+01
    a6 = 2.506628277459239e+00
    b1 = -5.447609879822406e+01
    b2 = 1.615858368580409e+02
    b3 = -1.556989798598866e+02
    b4 = 6.680131188771972e+01
    b5 = -1.328068155288572e+01
    c1 = -7.784894002430293e-03
    c2 = -3.223964580411365e-01
    c3 = -2.400758277161838e+00
    c4 = -2.549732539343734e+00
    c5 = 4.374664141464968e+00
    c6 = 2.938163982698783e+00
    d1 = 7.784695709041462e-03
    d2 = 3.224671290700398e-01
    d3 = 2.445134137142996e+00
    d4 = 3.754408661907416e+00
    plow = 0.02425
    if p < plow:
        q = math.sqrt(-2.0 * math.log(p))
        z = (((((c1 * q + c2) * q + c3) * q + c4) * q + c5) * q + c6) / \
            ((((d1 * q + d2) * q + d3) * q + d4) * q + 1.0)
    elif p <= 1.0 - plow:
        q = p - 0.5
        r = q * q
        z = (((((a1 * r + a2) * r + a3) * r + a4) * r + a5) * r + a6) * q / \
            (((((b1 * r + b2) * r + b3) * r + b4) * r + b5) * r + 1.0)
    else:
        q = math.sqrt(-2.0 * math.log1p(-p))
        z = -(((((c1 * q + c2) * q + c3) * q + c4) * q + c5) * q + c6) / \
            ((((d1 * q + d2) * q + d3) * q + d4) * q + 1.0)
    # one Halley refinement against the erfc-based CDF
    e = 0.5 * math.erfc(-z / math.sqrt(2.0)) - p
    u = e * math.sqrt(2.0 * math.pi) * math.exp(z * z / 2.0)
    z = z - u / (1.0 + z * u / 2.0)
    return z


@njit(cache=True)
def _norm_cdf(z):
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


# --------------------------------------------------------------------------
# gamma quantile in log-x space
# --------------------------------------------------------------------------

@njit(cache=True)
def _log_ppf_init(s, lq, l1mq, t_lo, t_hi):
    """Initial guess for the log-x quantile search, clamped into the bracket."""
    if s >= 0.5:
        z = _ndtri(math.exp(lq)) if lq > -700.0 else -math.sqrt(-2.0 * lq)
        c = 1.0 - 1.0 / (9.0 * s) + z / (3.0 * math.sqrt(s))
        if c > 0.0:
            t0 = math.log(s) + 3.0 * math.log(c)
            if t_lo < t0 < t_hi:
                return t0
        return 0.5 * (t_lo + t_hi) if t_hi - t_lo < 50.0 else min(t_lo + 1.0, t_hi - 1e-3)
    # small shape: the lower bound t >= (lq + lgamma(s+1))/s is nearly exact
    # whenever the root sits in the series region
    t0 = t_lo + 1e-3
    if t0 >= t_hi:
        t0 = 0.5 * (t_lo + t_hi)
    return t0


@njit(cache=True)
def _gamma_log_ppf(s, lq, l1mq):
    """Solve P(s, x) = q for log x.  lq = log q, l1mq = log(1-q).

    Proven bracket: P <= x^s/Gamma(s+1) gives the lower end; Markov's
    inequality on the mean (Q <= s/x) gives the upper.  Safeguarded Newton
    on log P (series region) or log Q (tail region), bisection fallback.
    """
    if lq == -math.inf:
        return -math.inf
    if l1mq == -math.inf:
        return math.inf
    t_lo = (lq + math.lgamma(s + 1.0)) / s
    t_hi = math.log(s) - l1mq
    if t_hi <= t_lo:
        t_hi = t_lo + 1e-12
    t = _log_ppf_init(s, lq, l1mq, t_lo, t_hi)
    lo = t_lo
    hi = t_hi
    for _ in range(200):
        lp, lq_val = _log_lower_upper(s, t)
        # bracket update from the sign of P - q
        if lp < lq:
            if t > lo:
                lo = t
        else:
            if t < hi:
                hi = t
        # Newton in the better-conditioned representation
        if lp <= lq_val:
            g = lp - lq
            ldpdt = s * t - math.exp(t) - math.lgamma(s) - lp
        else:
            g = lq_val - l1mq
            ldpdt = s * t - math.exp(t) - math.lgamma(s) - lq_val
            g = -g  # dQ/dt is negative; fold the sign into g
        if abs(g) <= 1e-13:
            return t
        step = g * math.exp(-ldpdt)
        t_new = t - step
        if not (lo < t_new < hi) or not math.isfinite(t_new):
            t_new = 0.5 * (lo + hi)
        if hi - lo <= 3e-15 * max(1.0, abs(t_new)):
            return t_new
        t = t_new
    return t


@njit(cache=True)
def _gamma_log_ppf_warm(s, lq, l1mq, t_init, have_init):
    """Like _gamma_log_ppf but starting from a caller-supplied warm point."""
    if lq == -math.inf:
        return -math.inf
    if l1mq == -math.inf:
        return math.inf
    t_lo = (lq + math.lgamma(s + 1.0)) / s
    t_hi = math.log(s) - l1mq
    if t_hi <= t_lo:
        t_hi = t_lo + 1e-12
    if have_init and t_lo < t_init < t_hi:
        t = t_init
    else:
        t = _log_ppf_init(s, lq, l1mq, t_lo, t_hi)
    lo = t_lo
    hi = t_hi
    for _ in range(200):
        lp, lq_val = _log_lower_upper(s, t)
        if lp < lq:
            if t > lo:
                lo = t
        else:
            if t < hi:
                hi = t
        if lp <= lq_val:
            g = lp - lq
            ldpdt = s * t - math.exp(t) - math.lgamma(s) - lp
        else:
            g = -(lq_val - l1mq)
            ldpdt = s * t - math.exp(t) - math.lgamma(s) - lq_val
        if abs(g) <= 1e-13:
            return t
        t_new = t - g * math.exp(-ldpdt)
        if not (lo < t_new < hi) or not math.isfinite(t_new):
            t_new = 0.5 * (lo + hi)
        if hi - lo <= 3e-15 * max(1.0, abs(t_new)):
            return t_new
        t = t_new
    return t


@njit(cache=True)
def _gamma_log_ppf_sorted(s, lqs, l1mqs, out):
    """Batch quantile solve over ascending-q inputs, warm-starting each root
    from the previous one (roots are monotone in q)."""
    n = lqs.shape[0]
    prev = 0.0
    have = False
    for i in range(n):
        t = _gamma_log_ppf_warm(s, lqs[i], l1mqs[i], prev, have)
        out[i] = t
        if math.isfinite(t):
            prev = t
            have = True


# --------------------------------------------------------------------------
# public scalar API
# --------------------------------------------------------------------------

def log_gamma(x):
    """Natural log of the gamma function (math.lgamma passthrough)."""
    return math.lgamma(x)


def reg_gamma_lower(s, x):
    """Regularized lower incomplete gamma P(s, x)."""
    if s <= 0.0:
        raise ValidationError("shape must be positive")
    if x < 0.0:
        raise ValidationError("x must be nonnegative")
    if x == 0.0:
        return 0.0
    if x == math.inf:
        return 1.0
    return math.exp(_log_lower(s, math.log(x)))


def reg_gamma_log_lower(s, log_x):
    """log P(s, x) given log x; defined for any real log_x."""
    if s <= 0.0:
        raise ValidationError("shape must be positive")
    return _log_lower(s, log_x)


def reg_gamma_log_upper(s, log_x):
    """log Q(s, x) = log(1 - P(s, x)) given log x."""
    if s <= 0.0:
        raise ValidationError("shape must be positive")
    return _log_upper(s, log_x)


def gamma_log_quantile(s, log_q, log1m_q):
    """log x with P(s, x) = q, taking q as the pair (log q, log(1-q)).

    Passing both logs lets callers express q indistinguishable from 0 or 1
    in linear doubles without losing the information that decides the root.
    """
    if s <= 0.0:
        raise ValidationError("shape must be positive")
    return _gamma_log_ppf(s, log_q, log1m_q)


def gamma_cdf(x, shape, scale=1.0):
    """CDF of Gamma(shape, scale) at x."""
    if scale <= 0.0:
        raise ValidationError("scale must be positive")
    if x <= 0.0:
        return 0.0
    return reg_gamma_lower(shape, x / scale)


def gamma_quantile(q, shape, scale=1.0):
    """Quantile of Gamma(shape, scale).  q=0 -> 0, q=1 -> +inf sentinel."""
    if scale <= 0.0:
        raise ValidationError("scale must be positive")
    if not 0.0 <= q <= 1.0:
        raise ValidationError("q must be in [0, 1]")
    if q == 0.0:
        return 0.0
    if q == 1.0:
        return math.inf
    t = _gamma_log_ppf(shape, math.log(q), math.log1p(-q))
    return scale * math.exp(t)


def chi2_cdf(x, kappa):
    """CDF of the chi-square distribution with kappa degrees of freedom."""
    if kappa <= 0.0:
        raise ValidationError("degrees of freedom must be positive")
    if x <= 0.0:
        return 0.0
    if x == math.inf:
        return 1.0
    return math.exp(_log_lower(0.5 * kappa, math.log(x) - LN2))


def chi2_sf(x, kappa):
    """Survival function 1 - chi2_cdf, computed without cancellation."""
    if kappa <= 0.0:
        raise ValidationError("degrees of freedom must be positive")
    if x <= 0.0:
        return 1.0
    if x == math.inf:
        return 0.0
    return math.exp(_log_upper(0.5 * kappa, math.log(x) - LN2))


def chi2_quantile(q, kappa):
    """Quantile of chi-square_kappa.  May underflow to 0 for tiny kappa and
    moderate q; the log channel (chi2_log_quantile) keeps the exact value."""
    if kappa <= 0.0:
        raise ValidationError("degrees of freedom must be positive")
    if not 0.0 <= q <= 1.0:
        raise ValidationError("q must be in [0, 1]")
    if q == 0.0:
        return 0.0
    if q == 1.0:
        return math.inf
    t = _gamma_log_ppf(0.5 * kappa, math.log(q), math.log1p(-q))
    return math.exp(t + LN2)


def chi2_log_quantile(kappa, log_q, log1m_q):
    """log of the chi-square_kappa quantile; q given as (log q, log(1-q))."""
    if kappa <= 0.0:
        raise ValidationError("degrees of freedom must be positive")
    if 0.5 * kappa == 1.0:
        # exponential shortcut: quantile of chi2_2 is -2 log(1-q), exactly
        if log1m_q == -math.inf:
            return math.inf
        if log_q == -math.inf:
            return -math.inf
        return math.log(-log1m_q) + LN2
    return _gamma_log_ppf(0.5 * kappa, log_q, log1m_q) + LN2


def chi2_log_quantile_batch(kappa, log_q, log1m_q):
    """Vector chi2_log_quantile.  Sorts by q once and marches the solver
    ascending so each root warm-starts from its neighbor."""
    if kappa <= 0.0:
        raise ValidationError("degrees of freedom must be positive")
    lq = np.asarray(log_q, dtype=np.float64)
    l1 = np.asarray(log1m_q, dtype=np.float64)
    if lq.shape != l1.shape:
        raise ValidationError("log_q and log1m_q must have matching shapes")
    shape = lq.shape
    lq = lq.ravel()
    l1 = l1.ravel()
    if 0.5 * kappa == 1.0:
        out = np.where(
            l1 == -math.inf, math.inf,
            np.where(lq == -math.inf, -math.inf,
                     np.log(np.maximum(-l1, 1e-300)) + LN2))
        return out.reshape(shape)
    order = np.argsort(lq, kind="stable")
    out = np.empty_like(lq)
    _gamma_log_ppf_sorted(0.5 * kappa, lq[order], l1[order], out)
    res = np.empty_like(out)
    res[order] = out + LN2
    return res.reshape(shape)


def chi2_log_sf(kappa, log_x):
    """log of the chi-square_kappa survival function at x given as log x."""
    if kappa <= 0.0:
        raise ValidationError("degrees of freedom must be positive")
    if 0.5 * kappa == 1.0:
        # survival of chi2_2 is exp(-x/2), exactly
        return -0.5 * math.exp(log_x)
    return _log_upper(0.5 * kappa, log_x - LN2)


def chi2_log_cdf(kappa, log_x):
    """log of the chi-square_kappa CDF at x given as log x."""
    if kappa <= 0.0:
        raise ValidationError("degrees of freedom must be positive")
    return _log_lower(0.5 * kappa, log_x - LN2)


def normal_cdf(z):
    """Standard normal CDF."""
    return _norm_cdf(z)


def normal_quantile(p):
    """Standard normal quantile; 0 and 1 map to -inf / +inf sentinels."""
    if not 0.0 <= p <= 1.0:
        raise ValidationError("p must be in [0, 1]")
    return _ndtri(p)


# --------------------------------------------------------------------------
# beta sampling
# --------------------------------------------------------------------------

def _log_gamma_draws(shape, size, rng):
    """log of Gamma(shape, 1) draws; small shapes boosted through
    G_a = G_{a+1} * U^{1/a} so the log stays finite when the draw itself
    would underflow."""
    if shape < 1e-2:
        g = rng.gamma(shape + 1.0, size=size)
        u = rng.uniform(size=size)
        return np.log(g) + np.log(u) / shape
    g = rng.gamma(shape, size=size)
    return np.log(g)


def beta_sample(a, b, rng, size=None):
    """Draw from Beta(a, b); valid for shapes as small as 1e-12.

    Uses the gamma-ratio representation on the log scale:
    X = 1 / (1 + exp(log G_b - log G_a)).  Draws whose true value lies
    below the double underflow threshold return 0.0 (and 1.0 mirrored),
    which downstream code treats through its usual 0/1 sentinel rules.
    """
    if a <= 0.0 or b <= 0.0:
        raise ValidationError("beta shapes must be positive")
    scalar = size is None
    n = 1 if scalar else size
    if a >= 0.5 and b >= 0.5:
        x = rng.beta(a, b, size=n)
    else:
        t = _log_gamma_draws(a, n, rng) - _log_gamma_draws(b, n, rng)
        # stable sigmoid: X = G_a / (G_a + G_b) = 1 / (1 + e^{-t})
        x = np.empty(n, dtype=np.float64)
        pos = t >= 0.0
        x[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
        et = np.exp(t[~pos])
        x[~pos] = et / (1.0 + et)
    return float(x[0]) if scalar else x
