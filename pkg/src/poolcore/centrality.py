"""Rejection-region geometry of pooled tests.

Central rejection level p_c: the largest p such that pooling (p, ..., p)
still rejects at level alpha.  Marginal rejection level p_r: the largest
p_1 such that (p_1, b, ..., b) rejects, with b = 1 unless stated.  The
centrality quotient q = (p_c - p_r)/p_c measures how much of the rejection
region sits on the diagonal versus the axes; the chi-square pooler sweeps
q from 0 (Tippett-like) to 1 (Stouffer-like) as kappa runs over (0, inf).
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import specfun as sf
from .errors import NoRejectionRegionError, ValidationError


@dataclass(frozen=True)
class RejectionProfile:
    """Central and marginal rejection levels of one pooled test.

    p_r is None when no marginal rejection exists (the pooled value on the
    axis exceeds alpha even at p_1 = 0); quotient is None in that case."""
    p_c: float
    p_r: Optional[float]
    alpha: float
    M: int
    quotient: Optional[float]


def _check_alpha(alpha):
    if not (0.0 < alpha < 1.0):
        raise ValidationError("alpha must be in (0, 1)")


def central_level_generic(pool_fn, M, alpha, tol=1e-8):
    """sup{p : pool_fn(p, ..., p) <= alpha} by bisection on [0, 1].

    pool_fn must be non-decreasing along the diagonal, which every pooler
    here is (they are non-decreasing in each coordinate)."""
    _check_alpha(alpha)
    if M < 1:
        raise ValidationError("M must be >= 1")

    def diag(x):
        return float(pool_fn(np.full(M, x, dtype=np.float64)))

    if diag(0.0) > alpha:
        raise NoRejectionRegionError(
            f"pooled value at the origin exceeds alpha={alpha}; "
            "no rejection region")
    if diag(1.0) <= alpha:
        return 1.0
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if diag(mid) <= alpha:
            lo = mid
        else:
            hi = mid
    return lo


def marginal_level_generic(pool_fn, M, alpha, b=1.0, tol=1e-8):
    """sup{p_1 in [0, b] : pool_fn(p_1, b, ..., b) <= alpha}, or None when
    even p_1 = 0 fails to reject (the marginal level is absent)."""
    _check_alpha(alpha)
    if M < 1:
        raise ValidationError("M must be >= 1")
    if not (0.0 < b <= 1.0):
        raise ValidationError("background level b must be in (0, 1]")

    def axis(x):
        v = np.full(M, b, dtype=np.float64)
        v[0] = x
        return float(pool_fn(v))

    if axis(0.0) > alpha:
        return None
    if axis(b) <= alpha:
        return b
    lo, hi = 0.0, b
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if axis(mid) <= alpha:
            lo = mid
        else:
            hi = mid
    return lo


def rejection_profile(pool_fn, M, alpha, tol=1e-8):
    p_c = central_level_generic(pool_fn, M, alpha, tol=tol)
    p_r = marginal_level_generic(pool_fn, M, alpha, b=1.0, tol=tol)
    if p_r is None or p_c <= 0.0:
        quotient = None
    else:
        quotient = (p_c - p_r) / p_c
    return RejectionProfile(p_c=p_c, p_r=p_r, alpha=alpha, M=M,
                            quotient=quotient)


def quantile_closed_pc(component_cdf, sum_cdf, weights, alpha):
    """Central level of a quantile pooler in closed form:
    1 - F(F_M^{-1}(1 - alpha) / sum(c_i)), F the component CDF and F_M the
    CDF of the weighted sum of transformed components."""
    _check_alpha(alpha)
    c = np.asarray(weights, dtype=np.float64)
    if c.ndim != 1 or c.size == 0 or not np.all(c > 0):
        raise ValidationError("weights must be a nonempty positive vector")
    target = 1.0 - alpha
    # bracket F_M^{-1}(target) by doubling outward from [-1, 1]
    lo, hi = -1.0, 1.0
    for _ in range(2100):
        if sum_cdf(hi) >= target:
            break
        hi *= 2.0
    for _ in range(2100):
        if sum_cdf(lo) <= target:
            break
        lo *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if sum_cdf(mid) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-13 * max(1.0, abs(mid)):
            break
    y_star = 0.5 * (lo + hi)
    return 1.0 - component_cdf(y_star / float(np.sum(c)))


def _chi_args(kappa, M, alpha):
    if not (kappa > 0.0 and math.isfinite(kappa)):
        raise ValidationError("kappa must be positive and finite")
    if M < 1:
        raise ValidationError("M must be >= 1")
    _check_alpha(alpha)


def _chi_crit_log(kappa, M, alpha):
    """ln of the upper-alpha critical value of chi-square with M*kappa df."""
    return sf.chi2_log_quantile(M * kappa, math.log1p(-alpha),
                                math.log(alpha))


def chi_pc(kappa, M, alpha):
    """Central level of the chi-square pooler:
    P(X >= crit_{M kappa}(alpha) / M) for X ~ chi-square(kappa)."""
    _chi_args(kappa, M, alpha)
    lx = _chi_crit_log(kappa, M, alpha)
    return math.exp(sf.chi2_log_sf(kappa, lx - math.log(M)))


def chi_pr(kappa, M, alpha):
    """Marginal level of the chi-square pooler:
    P(X >= crit_{M kappa}(alpha)) for X ~ chi-square(kappa)."""
    _chi_args(kappa, M, alpha)
    lx = _chi_crit_log(kappa, M, alpha)
    return math.exp(sf.chi2_log_sf(kappa, lx))


def chi_q(kappa, M, alpha):
    """Centrality quotient (chi_pc - chi_pr)/chi_pc, evaluated through the
    log survival channel so it stays exact when both levels underflow."""
    _chi_args(kappa, M, alpha)
    if M == 1:
        return 0.0
    lx = _chi_crit_log(kappa, M, alpha)
    ln_pr = sf.chi2_log_sf(kappa, lx)
    ln_pc = sf.chi2_log_sf(kappa, lx - math.log(M))
    return -math.expm1(ln_pr - ln_pc)


LNK_LO = -20.0
LNK_HI = 20.0


def chi_kappa(target_q, M, alpha):
    """kappa with chi_q(kappa, M, alpha) = target_q to 1e-6, by bisection
    on ln kappa over [-20, 20].  chi_q is strictly increasing in kappa."""
    if M < 2:
        raise ValidationError("chi_q is identically 0 at M=1; need M >= 2")
    _check_alpha(alpha)
    if not (0.0 < target_q < 1.0):
        raise ValidationError(
            "target quotient must be strictly inside (0, 1); q=0 is the "
            "order-statistic pooler with k=1 and q=1 is the stouffer limit")
    q_lo = chi_q(math.exp(LNK_LO), M, alpha)
    q_hi = chi_q(math.exp(LNK_HI), M, alpha)
    if not (q_lo < target_q < q_hi):
        raise ValidationError(
            f"target quotient {target_q} is outside the reachable range "
            f"[{q_lo:.3g}, {q_hi:.3g}] for M={M}, alpha={alpha}; use the "
            "order-statistic pooler with k=1 (q=0) or stouffer (q=1)")
    lo, hi = LNK_LO, LNK_HI
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        q = chi_q(math.exp(mid), M, alpha)
        if abs(q - target_q) <= 1e-6:
            return math.exp(mid)
        if q < target_q:
            lo = mid
        else:
            hi = mid
    return math.exp(0.5 * (lo + hi))
