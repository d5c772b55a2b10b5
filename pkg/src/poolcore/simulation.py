"""Monte Carlo power engine: per-method power estimates, the
(eta, divergence, w) power surface, smoothing and max-power masking for
the alternative atlas, the kappa sweep over the chi-square family, and
selection of the tests driving a pooled rejection."""

import hashlib
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import specfun as sf
from .errors import UnreachableDivergenceError, ValidationError
from .pooling import MethodSpec, NullQuantileTable, chi_pool
from .sampling import (AlternativeSpec, gen_h3_batch, round_half_up,
                       spec_from_divergence)


def derive_seed(*parts):
    """Stable 64-bit seed from a tuple of identifying values; replicated
    runs of the same configuration hash to the same stream no matter how
    cells are scheduled."""
    text = "|".join(str(p) for p in parts)
    digest = hashlib.blake2b(text.encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def empirical_pool(method, batch, table):
    """(1 + #{null <= stat}) / (n_sim + 1) for table-backed kinds."""
    if table is None:
        raise ValidationError(
            f"{method.canonical()} needs a simulated null table")
    if table.method != method.canonical():
        raise ValidationError(
            f"null table is for {table.method}, need {method.canonical()}")
    if table.M != batch.shape[1]:
        raise ValidationError(
            f"null table simulated at M={table.M}, input has M={batch.shape[1]}")
    stat = np.atleast_1d(method.statistic(batch))
    count = np.searchsorted(table.stats, stat, side="right")
    return (1.0 + count) / (table.n_sim + 1.0)


def power_estimate(method, spec, alpha, n_sim, null_table=None, seed=0):
    """Estimated rejection probability of the pooled test at level alpha
    under the H3 alternative spec, with its binomial standard error.

    Table-backed kinds (hr, minchi) need a matching null_table."""
    if n_sim < 100:
        raise ValidationError("n_sim must be >= 100")
    if not (0.0 < alpha < 1.0):
        raise ValidationError("alpha must be in (0, 1)")
    rng = np.random.default_rng(seed)
    batch = gen_h3_batch(spec, n_sim, rng)
    if method.kind in ("hr", "minchi"):
        pooled = empirical_pool(method, batch, null_table)
    else:
        pooled = np.atleast_1d(method.pool(batch))
    power = float(np.mean(pooled <= alpha))
    se = math.sqrt(power * (1.0 - power) / n_sim)
    return power, se


@dataclass(frozen=True)
class PowerGrid:
    """Power over a rectangular (eta, ln divergence, ln w, method) grid.

    power and se are (n_eta, n_lnD, n_lnw, n_methods) arrays; cells whose
    (divergence, w) pair is unreachable hold NaN (absent, not zero)."""
    eta: np.ndarray
    ln_divergence: np.ndarray
    ln_w: np.ndarray
    methods: tuple
    power: np.ndarray = field(repr=False)
    se: np.ndarray = field(repr=False)
    n_sim: int = 0
    alpha: float = 0.05
    M: int = 0
    seed: int = 0


def power_surface(methods, eta_grid, lnD_grid, lnw_grid, M, alpha, n_sim,
                  seed, null_tables=None):
    """power_estimate over the full grid with per-cell derived seeds.

    Every method sees the same samples within a cell, so cross-method
    comparisons are paired.  The per-cell seed mixes the master seed with
    the cell indices, making the result independent of evaluation order.
    null_tables maps canonical method strings to NullQuantileTable for
    table-backed kinds."""
    methods = tuple(methods)
    eta_grid = np.asarray(eta_grid, dtype=np.float64)
    lnD_grid = np.asarray(lnD_grid, dtype=np.float64)
    lnw_grid = np.asarray(lnw_grid, dtype=np.float64)
    if min(eta_grid.size, lnD_grid.size, lnw_grid.size, len(methods)) == 0:
        raise ValidationError("grids and method list must be nonempty")
    if n_sim < 100:
        raise ValidationError("n_sim must be >= 100")
    if not (0.0 < alpha < 1.0):
        raise ValidationError("alpha must be in (0, 1)")
    tables = dict(null_tables or {})
    for m in methods:
        if m.kind in ("hr", "minchi") and m.canonical() not in tables:
            raise ValidationError(
                f"{m.canonical()} needs a null table in null_tables")
    shape = (eta_grid.size, lnD_grid.size, lnw_grid.size, len(methods))
    power = np.full(shape, np.nan)
    se = np.full(shape, np.nan)
    for j, lnD in enumerate(lnD_grid):
        for k, lnw in enumerate(lnw_grid):
            for i, eta in enumerate(eta_grid):
                try:
                    spec = spec_from_divergence(
                        float(eta), math.exp(lnD), math.exp(lnw), M)
                except UnreachableDivergenceError:
                    continue
                rng = np.random.default_rng(
                    derive_seed("cell", seed, i, j, k))
                batch = gen_h3_batch(spec, n_sim, rng)
                for t, m in enumerate(methods):
                    if m.kind in ("hr", "minchi"):
                        pooled = empirical_pool(m, batch,
                                                 tables.get(m.canonical()))
                    else:
                        pooled = np.atleast_1d(m.pool(batch))
                    pw = float(np.mean(pooled <= alpha))
                    power[i, j, k, t] = pw
                    se[i, j, k, t] = math.sqrt(pw * (1.0 - pw) / n_sim)
    return PowerGrid(eta=eta_grid, ln_divergence=lnD_grid, ln_w=lnw_grid,
                     methods=methods, power=power, se=se, n_sim=n_sim,
                     alpha=alpha, M=M, seed=seed)


def gaussian_smooth(grid, sigma_cells=1.0):
    """Discretized Gaussian blur of a 2-D matrix, kernel truncated at
    3 sigma and renormalized wherever the window is clipped by an edge or
    a NaN cell, so constant regions pass through unchanged."""
    if sigma_cells <= 0.0:
        raise ValidationError("sigma must be positive")
    grid = np.asarray(grid, dtype=np.float64)
    if grid.ndim != 2:
        raise ValidationError("smoothing expects a 2-D matrix")
    r = int(math.ceil(3.0 * sigma_cells))
    ys, xs = np.mgrid[-r:r + 1, -r:r + 1]
    ker = np.exp(-(ys ** 2 + xs ** 2) / (2.0 * sigma_cells ** 2))
    ker /= ker.sum()
    finite = np.isfinite(grid)
    vals = np.where(finite, grid, 0.0)
    num = np.zeros_like(grid)
    wsum = np.zeros_like(grid)
    n0, n1 = grid.shape
    for dy in range(-r, r + 1):
        t0a, t0b = max(0, -dy), min(n0, n0 - dy)
        s0a, s0b = max(0, dy), min(n0, n0 + dy)
        if t0a >= t0b:
            continue
        for dx in range(-r, r + 1):
            t1a, t1b = max(0, -dx), min(n1, n1 - dx)
            s1a, s1b = max(0, dx), min(n1, n1 + dx)
            if t1a >= t1b:
                continue
            w = ker[dy + r, dx + r]
            num[t0a:t0b, t1a:t1b] += w * vals[s0a:s0b, s1a:s1b]
            wsum[t0a:t0b, t1a:t1b] += w * finite[s0a:s0b, s1a:s1b]
    with np.errstate(invalid="ignore"):
        out = num / wsum
    out[wsum == 0.0] = np.nan
    out[~finite] = np.nan
    return out


def max_power_mask(powers, n_sim, confidence=0.95):
    """Per cell, flag each method whose power is statistically
    indistinguishable from the cell's best by the two-proportion z-test:
    z = sqrt(n) (p1 - p2) / sqrt(2 pbar (1 - pbar)), pbar = (p1 + p2)/2.
    A 0/0 z (both at an extreme) counts as a tie, hence flagged."""
    if n_sim < 1:
        raise ValidationError("n_sim must be >= 1")
    if not (0.0 < confidence < 1.0):
        raise ValidationError("confidence must be in (0, 1)")
    arr = np.asarray(powers, dtype=np.float64)
    z_crit = sf.normal_quantile(0.5 * (1.0 + confidence))
    with np.errstate(invalid="ignore", divide="ignore"):
        best = np.nanmax(arr, axis=0)
        pbar = 0.5 * (best + arr)
        z = math.sqrt(n_sim) * (best - arr) / np.sqrt(
            2.0 * pbar * (1.0 - pbar))
    z = np.where((best - arr) == 0.0, 0.0, z)
    mask = (z <= z_crit) & np.isfinite(arr)
    return mask


def corner_tie_mask(powers, alpha, n_sim):
    """Cells where every method sits at the same uninformative extreme:
    all within binomial noise of power 1, or all within noise of alpha.
    The noise band is max(3 se, 3/n), the 3/n floor covering estimates at
    exactly 0 or 1 where the plug-in se collapses."""
    arr = np.asarray(powers, dtype=np.float64)
    band = np.maximum(3.0 * np.sqrt(arr * (1.0 - arr) / n_sim),
                      3.0 / n_sim)
    at_one = np.all((1.0 - arr) <= band, axis=0)
    at_alpha = np.all(np.abs(arr - alpha) <= band, axis=0)
    return at_one | at_alpha


def alt_frequency_map(mask_stacks_by_w, kappa_index, corner_masks=None):
    """Count, per (eta, lnD) cell, the w settings where the method at
    kappa_index achieved maximum power, excluding per-w corner-tied cells.
    Returns (counts, eta marginal, lnD marginal)."""
    stacks = [np.asarray(s) for s in mask_stacks_by_w]
    if not stacks:
        raise ValidationError("need at least one mask stack")
    base = stacks[0].shape
    for s in stacks:
        if s.shape != base:
            raise ValidationError("mask stacks must share shape")
    counts = np.zeros(base[1:], dtype=np.int64)
    for idx, s in enumerate(stacks):
        layer = s[kappa_index].astype(np.int64)
        if corner_masks is not None:
            layer = layer * (~np.asarray(corner_masks[idx], dtype=bool))
        counts += layer
    return counts, counts.sum(axis=1), counts.sum(axis=0)


DEFAULT_LNK_GRID = np.linspace(-8.0, 8.0, 65)


@dataclass(frozen=True)
class KappaSweep:
    """chi_pool of one p-vector across a ln-kappa grid, its minimizer, and
    optional null reference quantiles of the min-over-kappa statistic."""
    lnk: np.ndarray
    pooled: np.ndarray = field(repr=False)
    kappa_min: float = math.nan
    p_min: float = math.nan
    null_q05: Optional[float] = None
    null_q01: Optional[float] = None
    null_q001: Optional[float] = None


def kappa_sweep(p, lnk_grid=None, null_refs=None):
    """Pool one vector with chi(kappa) at every grid point.  kappa_min is
    the first grid minimizer (ties resolve to the smallest kappa).  When a
    null table of min-over-kappa statistics is supplied, its 0.05, 0.01,
    and 0.001 empirical quantiles come along as references."""
    lnk = DEFAULT_LNK_GRID if lnk_grid is None else np.asarray(
        lnk_grid, dtype=np.float64)
    if lnk.ndim != 1 or lnk.size == 0:
        raise ValidationError("lnk_grid must be a nonempty vector")
    if lnk.size > 1 and not np.all(np.diff(lnk) > 0):
        raise ValidationError("lnk_grid must be strictly increasing")
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1:
        raise ValidationError("kappa_sweep pools a single vector")
    pooled = np.array([chi_pool(p, math.exp(v)) for v in lnk])
    imin = int(np.argmin(pooled))
    q05 = q01 = q001 = None
    if null_refs is not None:
        expected = MethodSpec.minchi(tuple(lnk)).canonical()
        if null_refs.method != expected:
            raise ValidationError(
                f"null table is for {null_refs.method}, need {expected}")
        if null_refs.M != p.size:
            raise ValidationError(
                f"null table simulated at M={null_refs.M}, input has M={p.size}")
        q05 = null_refs.empirical_quantile(0.05)
        q01 = null_refs.empirical_quantile(0.01)
        q001 = null_refs.empirical_quantile(0.001)
    return KappaSweep(lnk=lnk, pooled=pooled,
                      kappa_min=float(math.exp(lnk[imin])),
                      p_min=float(pooled[imin]),
                      null_q05=q05, null_q01=q01, null_q001=q001)


def select_tests(p, kappa_min, eta_star):
    """Indices of the round(M eta*) smallest p-values, the tests carrying
    the pooled rejection at the sweep's chosen kappa.  The quantile
    transform is strictly decreasing in p for every kappa > 0, so the set
    does not depend on kappa_min beyond validation; ties break toward the
    lower index."""
    if not (0.0 < eta_star <= 1.0):
        raise ValidationError("eta_star must be in (0, 1]")
    if not (kappa_min > 0.0 and math.isfinite(kappa_min)):
        raise ValidationError("kappa_min must be positive and finite")
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1 or p.size == 0:
        raise ValidationError("p must be a nonempty vector")
    count = round_half_up(p.size * eta_star)
    order = np.lexsort((np.arange(p.size), p))
    return np.sort(order[:count])
