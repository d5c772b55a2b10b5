"""Generators for p-value vectors under the null and under beta
alternatives: H4 (every margin non-null) and H3 (a round(M*eta) subset
non-null, the rest uniform)."""

from dataclasses import dataclass

import numpy as np

from .divergence import BetaAlt, beta_divergence, b_from_aw, find_a
from .errors import ValidationError
from .specfun import beta_sample


def round_half_up(x):
    """round(x) with exact halves going up; grid etas make M*eta integral
    so this only matters for user-supplied off-grid values."""
    return int(np.floor(x + 0.5))


@dataclass(frozen=True)
class AlternativeSpec:
    """Prevalence eta, alternative strength alt, and vector length M."""
    eta: float
    alt: BetaAlt
    M: int

    def __post_init__(self):
        if not (0.0 <= self.eta <= 1.0):
            raise ValidationError("eta must be in [0, 1]")
        if self.M < 1:
            raise ValidationError("M must be >= 1")

    @property
    def n_nonnull(self):
        return round_half_up(self.M * self.eta)


def gen_h4(alt, M, rng):
    """M iid Beta(a, b) draws."""
    if M < 1:
        raise ValidationError("M must be >= 1")
    return beta_sample(alt.a, alt.b, rng, size=M)


def gen_h3(spec, rng):
    """spec.n_nonnull beta draws followed by uniforms.  Position carries no
    information for symmetric poolers, so the non-null block stays first."""
    m1 = spec.n_nonnull
    out = np.empty(spec.M, dtype=np.float64)
    if m1 > 0:
        out[:m1] = beta_sample(spec.alt.a, spec.alt.b, rng, size=m1)
    if m1 < spec.M:
        out[m1:] = rng.random(spec.M - m1)
    return out


def gen_h3_batch(spec, n, rng):
    """n independent H3 vectors as an (n, M) array, drawn column-block at
    a time from a single rng stream."""
    m1 = spec.n_nonnull
    out = np.empty((n, spec.M), dtype=np.float64)
    if m1 > 0:
        out[:, :m1] = beta_sample(spec.alt.a, spec.alt.b, rng,
                                  size=(n, m1))
    if m1 < spec.M:
        out[:, m1:] = rng.random((n, spec.M - m1))
    return out


def spec_from_divergence(eta, target_divergence, w, M):
    """Alternative with the beta parameter a chosen so the divergence from
    uniform equals target_divergence at the given w."""
    a = find_a(target_divergence, w)
    b = b_from_aw(a, w)
    alt = BetaAlt(a=a, b=b, w=w, divergence=beta_divergence(a, b))
    return AlternativeSpec(eta=eta, alt=alt, M=M)
