"""Alternative-hypothesis generators: prevalence bookkeeping, beta draw
distributions, and the divergence-to-spec constructor."""

import numpy as np
import pytest
from scipy import stats as sps

from poolcore.divergence import BetaAlt, beta_divergence
from poolcore.errors import ValidationError
from poolcore.sampling import (AlternativeSpec, gen_h3, gen_h3_batch, gen_h4,
                               round_half_up, spec_from_divergence)
from poolcore.specfun import beta_sample


def test_round_half_up():
    assert round_half_up(0.5) == 1
    assert round_half_up(1.5) == 2
    assert round_half_up(2.5) == 3
    assert round_half_up(2.4) == 2
    assert round_half_up(-0.5) == 0
    assert round_half_up(0.0) == 0


def test_prevalence_count_is_exact():
    alt = BetaAlt.from_aw(0.5, 1.0)
    for M, eta, want in [(10, 0.0, 0), (10, 0.05, 1), (10, 0.5, 5),
                         (10, 1.0, 10), (7, 0.5, 4), (100, 0.05, 5)]:
        spec = AlternativeSpec(eta=eta, alt=alt, M=M)
        assert spec.n_nonnull == want


def test_h3_nonnull_block_is_detectable():
    # with a tiny beta shape the non-null draws underflow to ~0, which makes
    # the prevalence contract directly observable per row
    alt = BetaAlt.from_aw(1e-6, 1.0)
    spec = AlternativeSpec(eta=0.3, alt=alt, M=10)
    batch = gen_h3_batch(spec, 500, np.random.default_rng(1))
    assert batch.shape == (500, 10)
    tiny = batch < 1e-100
    assert np.all(tiny[:, :3])
    assert not np.any(tiny[:, 3:])


def test_h3_null_block_is_uniform():
    alt = BetaAlt.from_aw(0.1, 1.0)
    spec = AlternativeSpec(eta=0.5, alt=alt, M=4)
    batch = gen_h3_batch(spec, 25_000, np.random.default_rng(2))
    nulls = batch[:, 2:].ravel()
    assert sps.kstest(nulls, "uniform").pvalue > 0.01


def test_h4_draws_match_beta():
    rng = np.random.default_rng(3)
    draws = np.concatenate(
        [gen_h4(BetaAlt(a=0.5, b=1.0, w=1.0,
                        divergence=beta_divergence(0.5, 1.0)), 100, rng)
         for _ in range(1000)])
    assert sps.kstest(draws, sps.beta(0.5, 1.0).cdf).pvalue > 0.01


def test_beta_sampler_reference_distributions():
    # the three density shapes the experiments lean on: decreasing,
    # hump-shaped, and increasing
    rng = np.random.default_rng(20260816)
    for a, b in [(0.5, 1.0), (2.0, 4.0), (1.0, 0.5)]:
        x = beta_sample(a, b, rng, size=100_000)
        assert sps.kstest(x, sps.beta(a, b).cdf).pvalue > 0.01, (a, b)


def test_gen_h3_vector_and_order():
    alt = BetaAlt.from_aw(1e-6, 1.0)
    spec = AlternativeSpec(eta=0.5, alt=alt, M=6)
    v = gen_h3(spec, np.random.default_rng(4))
    assert v.shape == (6,)
    assert np.all(v[:3] < 1e-100) and np.all(v[3:] > 1e-100)


def test_spec_from_divergence_roundtrip():
    spec = spec_from_divergence(0.25, 1.5, 0.4, 12)
    assert spec.eta == 0.25 and spec.M == 12
    assert abs(spec.alt.divergence - 1.5) <= 1e-9
    assert abs(beta_divergence(spec.alt.a, spec.alt.b) - 1.5) <= 1e-9
    assert abs(spec.alt.w - 0.4) <= 1e-12


def test_alternative_spec_validation():
    alt = BetaAlt.from_aw(0.5, 1.0)
    with pytest.raises(ValidationError):
        AlternativeSpec(eta=1.5, alt=alt, M=10)
    with pytest.raises(ValidationError):
        AlternativeSpec(eta=0.5, alt=alt, M=0)
