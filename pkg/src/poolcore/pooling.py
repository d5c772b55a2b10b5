"""Pooled p-value functions.

Every pooler maps M independent p-values to a single p-value that is
uniform under the joint null, so thresholding the result at alpha controls
the family-wise error rate.  All poolers accept a single vector (returning
a scalar) or an (n, M) batch (returning a length-n array).

Inputs of exactly 0 or 1 follow infinity-sentinel rules rather than being
clamped: a transformed score of +inf forces the pooled value to 0, and a
score of -inf alone forces 1 (Pearson runs in the mirrored orientation).
The quantile-family poolers never materialize 1 - p: quantile solves take
(log q, log(1-q)) = (log1p(-p), log p), so tiny p keep full precision all
the way through.
"""

import hashlib
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from . import specfun as sf

_LN2 = math.log(2.0)


def _as_batch(p):
    """Coerce to a float (n, M) matrix; returns (matrix, was_vector)."""
    arr = np.asarray(p, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[None, :]
        was_vector = True
    elif arr.ndim == 2:
        was_vector = False
    else:
        raise ValidationError("p-values must be a vector or an (n, M) matrix")
    if arr.shape[1] < 1:
        raise ValidationError("need at least one p-value")
    if not np.all((arr >= 0.0) & (arr <= 1.0)):
        raise ValidationError("p-values must lie in [0, 1]")
    return arr, was_vector


def _unbatch(values, was_vector):
    return float(values[0]) if was_vector else values


def _logsumexp_rows(t):
    """Row-wise log(sum(exp)); any +inf dominates, all -inf gives -inf."""
    m = np.max(t, axis=1)
    out = np.empty(t.shape[0])
    finite = np.isfinite(m)
    out[m == np.inf] = np.inf
    out[m == -np.inf] = -np.inf
    if np.any(finite):
        tf = t[finite]
        mf = m[finite][:, None]
        out[finite] = m[finite] + np.log(np.sum(np.exp(tf - mf), axis=1))
    return out


# --------------------------------------------------------------------------
# order-statistic pooler
# --------------------------------------------------------------------------

def ord_pool(p, k):
    """Order-statistic pooled p-value on the k-th smallest of M p-values:
    sum_{l=k}^{M} C(M,l) p_(k)^l (1-p_(k))^{M-l}.  k=1 is Tippett."""
    arr, was_vector = _as_batch(p)
    m = arr.shape[1]
    if not isinstance(k, (int, np.integer)) or isinstance(k, bool):
        raise ValidationError("k must be an integer")
    if not 1 <= k <= m:
        raise ValidationError(f"k must be in 1..{m}")
    pk = np.sort(arr, axis=1)[:, k - 1]
    if k == 1:
        with np.errstate(divide="ignore"):
            out = -np.expm1(m * np.log1p(-pk))
        return _unbatch(out, was_vector)
    ls = np.arange(k, m + 1)
    if m <= 200:
        coef = np.array([float(math.comb(m, int(l))) for l in ls])
        out = np.zeros_like(pk)
        interior = (pk > 0.0) & (pk < 1.0)
        x = pk[interior][:, None]
        out[interior] = np.sum(coef * x ** ls * (1.0 - x) ** (m - ls), axis=1)
        out[pk >= 1.0] = 1.0
        np.clip(out, 0.0, 1.0, out=out)
    else:
        lcoef = np.array([math.lgamma(m + 1) - math.lgamma(l + 1) - math.lgamma(m - l + 1)
                          for l in ls])
        out = np.zeros_like(pk)
        interior = (pk > 0.0) & (pk < 1.0)
        x = pk[interior][:, None]
        terms = lcoef + ls * np.log(x) + (m - ls) * np.log1p(-x)
        tmax = terms.max(axis=1, keepdims=True)
        out[interior] = np.exp(tmax[:, 0] + np.log(np.sum(np.exp(terms - tmax), axis=1)))
        out[pk >= 1.0] = 1.0
        np.clip(out, 0.0, 1.0, out=out)
    return _unbatch(out, was_vector)


# --------------------------------------------------------------------------
# generic quantile pooler
# --------------------------------------------------------------------------

def quantile_pool(p, transform_quantile, sum_cdf, weights=None):
    """1 - F_M(sum_i c_i F^{-1}(1 - p_i)) for caller-supplied transform
    quantile F^{-1} and null sum CDF F_M.  Sentinels: any +inf score makes
    the pooled value 0; any -inf (without +inf) makes it 1."""
    arr, was_vector = _as_batch(p)
    m = arr.shape[1]
    if weights is None:
        c = np.ones(m)
    else:
        c = np.asarray(weights, dtype=np.float64)
        if c.shape != (m,):
            raise ValidationError("weights length must match the number of p-values")
        if not np.all(c > 0.0):
            raise ValidationError("weights must be positive")
    scores = np.empty_like(arr)
    flat = arr.ravel()
    scores = np.array([transform_quantile(1.0 - v) for v in flat],
                      dtype=np.float64).reshape(arr.shape)
    scores = scores * c
    out = np.empty(arr.shape[0])
    has_pinf = np.any(scores == np.inf, axis=1)
    has_ninf = np.any(scores == -np.inf, axis=1) & ~has_pinf
    plain = ~(has_pinf | has_ninf)
    out[has_pinf] = 0.0
    out[has_ninf] = 1.0
    if np.any(plain):
        sums = scores[plain].sum(axis=1)
        out[plain] = [1.0 - sum_cdf(s) for s in sums]
    if np.any(np.isnan(out)):
        raise ValidationError("transform produced NaN")
    return _unbatch(out, was_vector)


def stouffer_pool(p, weights=None):
    """Stouffer pool 1 - Phi(sum c_i Phi^{-1}(1-p_i) / sqrt(sum c_i^2));
    unweighted form is 1 - Phi(sum Phi^{-1}(1-p_i)/sqrt(M))."""
    arr, was_vector = _as_batch(p)
    m = arr.shape[1]
    if weights is None:
        c = np.ones(m)
    else:
        c = np.asarray(weights, dtype=np.float64)
        if c.shape != (m,):
            raise ValidationError("weights length must match the number of p-values")
        if not np.all(c > 0.0):
            raise ValidationError("weights must be positive")
    if weights is None:
        arr = np.sort(arr, axis=1)  # permutation-invariant summation
    z = np.empty_like(arr)
    flat = arr.ravel()
    zf = np.empty_like(flat)
    for i in range(flat.shape[0]):
        v = flat[i]
        if v == 0.0:
            zf[i] = np.inf
        elif v == 1.0:
            zf[i] = -np.inf
        else:
            zf[i] = -sf.normal_quantile(v)  # Phi^{-1}(1-p) = -Phi^{-1}(p)
    z = zf.reshape(arr.shape) * c
    scale = math.sqrt(float(np.sum(c * c)))
    out = np.empty(arr.shape[0])
    has_pinf = np.any(z == np.inf, axis=1)
    has_ninf = np.any(z == -np.inf, axis=1) & ~has_pinf
    plain = ~(has_pinf | has_ninf)
    out[has_pinf] = 0.0
    out[has_ninf] = 1.0
    if np.any(plain):
        s = z[plain].sum(axis=1) / scale
        out[plain] = [sf.normal_cdf(-v) for v in s]  # 1 - Phi(v), no cancellation
    return _unbatch(out, was_vector)


# --------------------------------------------------------------------------
# gamma-family poolers (Fisher, Pearson, gamma, chi-square-kappa)
# --------------------------------------------------------------------------

def fisher_pool(p):
    """Fisher's method: survival of chi-square_{2M} at -2 sum log p_i."""
    arr, was_vector = _as_batch(p)
    m = arr.shape[1]
    with np.errstate(divide="ignore"):
        lp = np.log(arr)
    lp = np.sort(lp, axis=1)
    x = -2.0 * np.sum(lp, axis=1)
    out = np.empty(arr.shape[0])
    for i in range(out.shape[0]):
        if x[i] == np.inf:
            out[i] = 0.0
        elif x[i] <= 0.0:
            out[i] = 1.0
        else:
            out[i] = math.exp(sf.chi2_log_sf(2.0 * m, math.log(x[i])))
    return _unbatch(out, was_vector)


def pearson_pool(p):
    """Pearson's method: CDF of chi-square_{2M} at -2 sum log(1 - p_i).
    Mirrored orientation: a p_i of 1 drives the pooled value to 1."""
    arr, was_vector = _as_batch(p)
    m = arr.shape[1]
    with np.errstate(divide="ignore"):
        l1p = np.log1p(-arr)
    l1p = np.sort(l1p, axis=1)
    y = -2.0 * np.sum(l1p, axis=1)
    out = np.empty(arr.shape[0])
    for i in range(out.shape[0]):
        if y[i] == np.inf:
            out[i] = 1.0
        elif y[i] <= 0.0:
            out[i] = 0.0
        else:
            out[i] = math.exp(sf.chi2_log_cdf(2.0 * m, math.log(y[i])))
    return _unbatch(out, was_vector)


def gamma_pool(p, k, theta):
    """Gamma-quantile pool 1 - G_{Mk,theta}(sum_i G^{-1}_{k,theta}(1-p_i)).

    The scale theta cancels between the quantile transform and the null
    CDF, so the computation runs entirely at scale 1 and the result is
    exactly invariant to theta (which is still validated)."""
    if not (k > 0.0 and math.isfinite(k)):
        raise ValidationError("gamma shape k must be positive and finite")
    if not (theta > 0.0 and math.isfinite(theta)):
        raise ValidationError("gamma scale theta must be positive and finite")
    arr, was_vector = _as_batch(p)
    m = arr.shape[1]
    arr = np.sort(arr, axis=1)
    with np.errstate(divide="ignore"):
        lq = np.log1p(-arr)    # log of q = 1 - p
        l1mq = np.log(arr)     # log of 1 - q = p
    flat_lq = lq.ravel()
    flat_l1 = l1mq.ravel()
    t = np.empty_like(flat_lq)
    for i in range(t.shape[0]):
        t[i] = sf.gamma_log_quantile(float(k), flat_lq[i], flat_l1[i])
    t = t.reshape(arr.shape)
    ls = _logsumexp_rows(t)
    out = np.empty(arr.shape[0])
    for i in range(out.shape[0]):
        if ls[i] == np.inf:
            out[i] = 0.0
        elif ls[i] == -np.inf:
            out[i] = 1.0
        else:
            out[i] = math.exp(sf.reg_gamma_log_upper(m * float(k), ls[i]))
    return _unbatch(out, was_vector)


def chi_pool(p, kappa):
    """Chi-square-kappa pool: 1 - F_chi(sum_i F_chi^{-1}(1-p_i; kappa); M kappa).

    kappa tunes where rejections come from: kappa -> 0 approaches Tippett,
    kappa = 2 is exactly Fisher, kappa -> inf approaches Stouffer.  kappa=0
    is accepted and dispatched to ord_pool(p, 1) by that continuity."""
    if kappa < 0.0 or not math.isfinite(kappa):
        raise ValidationError("kappa must be finite and nonnegative")
    if kappa == 0.0:
        return ord_pool(p, 1)
    arr, was_vector = _as_batch(p)
    m = arr.shape[1]
    arr = np.sort(arr, axis=1)
    with np.errstate(divide="ignore"):
        lq = np.log1p(-arr)
        l1mq = np.log(arr)
    t = sf.chi2_log_quantile_batch(kappa, lq.ravel(), l1mq.ravel()).reshape(arr.shape)
    ls = _logsumexp_rows(t)
    out = np.empty(arr.shape[0])
    for i in range(out.shape[0]):
        if ls[i] == np.inf:
            out[i] = 0.0
        elif ls[i] == -np.inf:
            out[i] = 1.0
        else:
            out[i] = math.exp(sf.chi2_log_sf(m * kappa, ls[i]))
    return _unbatch(out, was_vector)


# --------------------------------------------------------------------------
# HR statistic and its simulation-backed p-value
# --------------------------------------------------------------------------

def hr_stat(p, w):
    """w sum log p_i - (1-w) sum log(1-p_i); the likelihood-ratio statistic
    that is most powerful against the matching beta alternative.

    Small values are evidence against the null.  Sentinels: p_i=0 with w>0
    gives -inf; p_i=1 with w<1 gives +inf; if both occur, -inf wins (a zero
    p-value is unbounded evidence, which no p_i=1 can cancel)."""
    if not 0.0 <= w <= 1.0:
        raise ValidationError("w must be in [0, 1]")
    arr, was_vector = _as_batch(p)
    with np.errstate(divide="ignore"):
        lp = np.sort(np.log(arr), axis=1)
        l1p = np.sort(np.log1p(-arr), axis=1)
    s1 = np.sum(lp, axis=1)
    s2 = np.sum(l1p, axis=1)
    if w == 1.0:
        out = s1.copy()
    elif w == 0.0:
        out = -s2
    else:
        with np.errstate(invalid="ignore"):
            out = w * s1 - (1.0 - w) * s2
        zero_hit = np.any(arr == 0.0, axis=1)
        one_hit = np.any(arr == 1.0, axis=1)
        out[one_hit] = np.inf
        out[zero_hit] = -np.inf
    return _unbatch(out, was_vector)


@dataclass(frozen=True)
class MethodSpec:
    """A pooling method with its parameters.

    kind is one of order, stouffer, fisher, pearson, gamma, chi, hr, or the
    sweep pseudo-kind minchi (the min-over-kappa statistic used only for
    null reference tables).  weights are supported for stouffer only: no
    other kind has a closed-form null for a weighted sum."""
    kind: str
    k: int = None
    theta: float = None
    kappa: float = None
    w: float = None
    weights: tuple = None
    lnk_grid: tuple = None

    def __post_init__(self):
        kind = self.kind
        if kind == "order":
            if self.k is None or self.k < 1:
                raise ValidationError("order kind needs k >= 1")
        elif kind in ("stouffer", "fisher", "pearson"):
            pass
        elif kind == "gamma":
            if self.k is None or self.theta is None:
                raise ValidationError("gamma kind needs k and theta")
            if self.k <= 0 or self.theta <= 0:
                raise ValidationError("gamma k and theta must be positive")
        elif kind == "chi":
            if self.kappa is None or self.kappa < 0:
                raise ValidationError("chi kind needs kappa >= 0")
        elif kind == "hr":
            if self.w is None or not 0.0 <= self.w <= 1.0:
                raise ValidationError("hr kind needs w in [0, 1]")
        elif kind == "minchi":
            if not self.lnk_grid:
                raise ValidationError("minchi kind needs lnk_grid")
        else:
            raise ValidationError(f"unknown method kind: {kind!r}")
        if self.weights is not None and kind != "stouffer":
            raise ValidationError("weights are supported for stouffer only")

    @classmethod
    def order(cls, k):
        return cls(kind="order", k=int(k))

    @classmethod
    def stouffer(cls, weights=None):
        return cls(kind="stouffer",
                   weights=None if weights is None else tuple(float(c) for c in weights))

    @classmethod
    def fisher(cls):
        return cls(kind="fisher")

    @classmethod
    def pearson(cls):
        return cls(kind="pearson")

    @classmethod
    def gamma(cls, k, theta):
        return cls(kind="gamma", k=float(k), theta=float(theta))

    @classmethod
    def chi(cls, kappa):
        return cls(kind="chi", kappa=float(kappa))

    @classmethod
    def hr(cls, w):
        return cls(kind="hr", w=float(w))

    @classmethod
    def minchi(cls, lnk_grid):
        return cls(kind="minchi", lnk_grid=tuple(float(v) for v in lnk_grid))

    def canonical(self):
        """Stable string form used for display and cache keys."""
        if self.kind == "order":
            return f"order(k={self.k})"
        if self.kind == "stouffer":
            if self.weights is not None:
                ws = ",".join(repr(c) for c in self.weights)
                return f"stouffer(weights=[{ws}])"
            return "stouffer"
        if self.kind in ("fisher", "pearson"):
            return self.kind
        if self.kind == "gamma":
            return f"gamma(k={self.k!r},theta={self.theta!r})"
        if self.kind == "chi":
            return f"chi(kappa={self.kappa!r})"
        if self.kind == "hr":
            return f"hr(w={self.w!r})"
        lo, hi, n = self.lnk_grid[0], self.lnk_grid[-1], len(self.lnk_grid)
        return f"minchi(lnk={lo!r}:{hi!r}:{n})"

    @property
    def needs_table(self):
        return self.kind in ("hr", "minchi")

    def pool(self, p, table=None):
        """Pooled p-value(s) for this method on p."""
        kind = self.kind
        if kind == "order":
            return ord_pool(p, self.k)
        if kind == "stouffer":
            return stouffer_pool(p, weights=self.weights)
        if kind == "fisher":
            return fisher_pool(p)
        if kind == "pearson":
            return pearson_pool(p)
        if kind == "gamma":
            return gamma_pool(p, self.k, self.theta)
        if kind == "chi":
            return chi_pool(p, self.kappa)
        if kind == "hr":
            if table is None:
                raise ValidationError("hr pooling needs a simulated null table")
            return hr_pool(p, self.w, table)
        raise ValidationError(f"{kind} has no pooled p-value (statistic-only kind)")

    def statistic(self, p):
        """The raw statistic simulated for the null table."""
        kind = self.kind
        if kind == "hr":
            return hr_stat(p, self.w)
        if kind == "minchi":
            arr, was_vector = _as_batch(p)
            best = np.full(arr.shape[0], np.inf)
            for lnk in self.lnk_grid:
                vals = chi_pool(arr, math.exp(lnk))
                np.minimum(best, vals, out=best)
            return _unbatch(best, was_vector)
        return self.pool(p)


@dataclass(frozen=True)
class NullQuantileTable:
    """Sorted simulated null statistics for a method without a closed-form
    null distribution."""
    method: str
    M: int
    n_sim: int
    seed: int
    stats: np.ndarray = field(repr=False)

    def empirical_quantile(self, q):
        """Lower empirical quantile of the simulated statistic."""
        idx = max(0, min(self.n_sim - 1, math.ceil(q * self.n_sim) - 1))
        return float(self.stats[idx])


def _block_seed(seed, block_index):
    digest = hashlib.blake2b(f"{seed}|{block_index}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big")


_BLOCK = 1000


def simulate_null_table(method, M, n_sim, seed):
    """Simulate the method's statistic on n_sim iid-uniform vectors.

    Replicates are generated in fixed blocks of 1000; block i draws from a
    generator seeded by a hash of (seed, i), so the table is identical no
    matter how blocks are scheduled."""
    if M < 1:
        raise ValidationError("M must be >= 1")
    if n_sim < 1000:
        raise ValidationError("n_sim must be >= 1000")
    stats = np.empty(n_sim)
    pos = 0
    block = 0
    while pos < n_sim:
        take = min(_BLOCK, n_sim - pos)
        rng = np.random.default_rng(_block_seed(seed, block))
        u = rng.uniform(size=(_BLOCK, M))[:take]
        stats[pos:pos + take] = method.statistic(u)
        pos += take
        block += 1
    stats.sort()
    return NullQuantileTable(method=method.canonical(), M=M,
                             n_sim=n_sim, seed=seed, stats=stats)


def hr_pool(p, w, table):
    """Empirical left-tail p-value of hr_stat against a simulated null table:
    (1 + #{null <= stat}) / (n_sim + 1).  Anchored by hr_pool(., 1) matching
    Fisher up to Monte Carlo error."""
    arr, was_vector = _as_batch(p)
    expected = MethodSpec.hr(w).canonical()
    if table.method != expected:
        raise ValidationError(
            f"null table is for {table.method}, need {expected}")
    if table.M != arr.shape[1]:
        raise ValidationError(
            f"null table simulated at M={table.M}, input has M={arr.shape[1]}")
    stat = np.atleast_1d(hr_stat(arr, w))
    count = np.searchsorted(table.stats, stat, side="right")
    out = (1.0 + count) / (table.n_sim + 1.0)
    return _unbatch(out, was_vector)


# --------------------------------------------------------------------------
# null-table disk cache
# --------------------------------------------------------------------------

def save_table(table, path):
    lines = [f"#method={table.method}",
             f"#M={table.M}",
             f"#n_sim={table.n_sim}",
             f"#seed={table.seed}",
             "#format=1"]
    lines.extend(f"{v:.17g}" for v in table.stats)
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    os.replace(tmp, path)


def load_table(path):
    header = {}
    stats = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line[1:].partition("=")
                header[key] = val
            else:
                stats.append(float(line))
    for key in ("method", "M", "n_sim", "seed", "format"):
        if key not in header:
            raise ValidationError(f"null table file missing #{key}= header: {path}")
    if header["format"] != "1":
        raise ValidationError(f"unsupported null table format {header['format']!r}")
    arr = np.asarray(stats)
    if arr.size != int(header["n_sim"]):
        raise ValidationError(f"null table length mismatch in {path}")
    return NullQuantileTable(method=header["method"], M=int(header["M"]),
                             n_sim=int(header["n_sim"]), seed=int(header["seed"]),
                             stats=arr)


def table_cache_path(cache_dir, method, M, n_sim, seed):
    key = f"{method.canonical()}|M={M}|n_sim={n_sim}|seed={seed}"
    digest = hashlib.blake2b(key.encode(), digest_size=16).hexdigest()
    return os.path.join(cache_dir, f"{digest}.nulltab")


def null_table_cached(method, M, n_sim, seed, cache_dir):
    """Load the table from cache_dir if present, else simulate and store it."""
    os.makedirs(cache_dir, exist_ok=True)
    path = table_cache_path(cache_dir, method, M, n_sim, seed)
    if os.path.exists(path):
        table = load_table(path)
        if (table.method == method.canonical() and table.M == M
                and table.n_sim == n_sim and table.seed == seed):
            return table
    table = simulate_null_table(method, M, n_sim, seed)
    save_table(table, path)
    return table
