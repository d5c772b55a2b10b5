"""Command-line front end: pooling, rejection levels, kappa selection,
power experiments, the alternative atlas, kappa sweeps, test selection,
and sample generation, all with reproducible seeded output.

Every run echoes its effective configuration as '#' header lines; the
timestamp is the only line that varies between identical runs.  Output is
fully computed before anything is written, so a failure never leaves a
partial CSV behind.
"""

import argparse
import math
import os
import sys
from datetime import datetime, timezone

import numpy as np

from . import centrality as ct
from . import pooling as pl
from . import sampling as sp
from . import simulation as sim
from . import specfun as sf
from .errors import NumericalError, ValidationError

CACHE_ENV = "POOLCORE_CACHE_DIR"
DEFAULT_CACHE = ".poolcache"
DEFAULT_TABLE_NSIM = 100000


# --------------------------------------------------------------------------
# input parsing and output plumbing
# --------------------------------------------------------------------------

def _read_text(source):
    """Input text from a file path, '-' for stdin, or an inline vector."""
    if source == "-":
        return sys.stdin.read()
    if os.path.exists(source):
        with open(source, "r", encoding="utf-8") as fh:
            return fh.read()
    if any(ch.isdigit() for ch in source):
        return source
    raise ValidationError(f"input file not found: {source}")


def parse_vectors(text):
    """Vectors from text: '#' comments dropped; a line with commas is one
    vector per line, otherwise the whole input is a single vector with one
    value per line."""
    rows = []
    bare = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "," in line:
            try:
                rows.append(np.array([float(tok) for tok in line.split(",")],
                                     dtype=np.float64))
            except ValueError:
                raise ValidationError(
                    f"input line {lineno}: could not parse {line!r}")
        else:
            try:
                bare.append(float(line))
            except ValueError:
                raise ValidationError(
                    f"input line {lineno}: could not parse {line!r}")
    if rows and bare:
        raise ValidationError(
            "input mixes comma-separated vector lines with bare values")
    if rows:
        if len({r.size for r in rows}) > 1:
            raise ValidationError("input vectors have unequal lengths")
        return rows
    if not bare:
        raise ValidationError("input holds no p-values")
    return [np.array(bare, dtype=np.float64)]


def _parse_float_list(text):
    try:
        return [float(tok) for tok in str(text).split(",") if tok.strip()]
    except ValueError:
        raise ValidationError(f"could not parse numeric list {text!r}")


def _parse_lnk_grid(text):
    """'lo:hi:n' to a uniform grid."""
    parts = str(text).split(":")
    if len(parts) != 3:
        raise ValidationError("grid must look like lo:hi:n")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ValidationError(f"could not parse grid {text!r}")
    if n < 1 or hi < lo:
        raise ValidationError("grid needs hi >= lo and n >= 1")
    return np.linspace(lo, hi, n)


def _fmt(x, digits):
    if x is None:
        return "absent"
    if isinstance(x, float) and math.isnan(x):
        return "absent"
    return f"{x:.{digits}g}"


def _emit(args, lines):
    """Write header + payload in one shot (compute-then-write)."""
    header = [f"# poolcore {args.subcommand}"]
    for key in sorted(vars(args)):
        if key in ("func", "subcommand"):
            continue
        value = getattr(args, key)
        if value is None:
            continue
        header.append(f"# {key.replace('_', '-')}={value}")
    header.append(
        f"# timestamp={datetime.now(timezone.utc).isoformat()}")
    text = "\n".join(header + list(lines)) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cache_dir(args):
    if args.cache_dir:
        return args.cache_dir
    return os.environ.get(CACHE_ENV, DEFAULT_CACHE)


def _method_from_args(args, M):
    name = args.method
    if name == "order":
        if args.k is None:
            raise ValidationError("order method needs --k")
        return pl.MethodSpec.order(args.k)
    if name == "stouffer":
        return pl.MethodSpec.stouffer()
    if name == "fisher":
        return pl.MethodSpec.fisher()
    if name == "pearson":
        return pl.MethodSpec.pearson()
    if name == "gamma":
        if args.k is None or args.theta is None:
            raise ValidationError("gamma method needs --k and --theta")
        return pl.MethodSpec.gamma(args.k, args.theta)
    if name == "chi":
        if args.kappa is None:
            raise ValidationError("chi method needs --kappa")
        return pl.MethodSpec.chi(args.kappa)
    if name == "hr":
        if args.w is None:
            raise ValidationError("hr method needs --w")
        return pl.MethodSpec.hr(args.w)
    if name == "minchi":
        return pl.MethodSpec.minchi(_parse_lnk_grid(args.lnk_grid))
    raise ValidationError(f"unknown method {name!r}")


def _null_table_for(args, method, M):
    cache = _cache_dir(args)
    n_tab = args.table_n_sim
    sys.stderr.write(
        f"null table for {method.canonical()} M={M} n_sim={n_tab}: "
        "loading cache or simulating\n")
    return pl.null_table_cached(method, M, n_tab, args.seed, cache)


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_pool(args):
    vectors = parse_vectors(_read_text(args.input))
    M = vectors[0].size
    method = _method_from_args(args, M)
    table = None
    if method.kind in ("hr", "minchi"):
        table = _null_table_for(args, method, M)
    lines = []
    if args.format == "csv":
        lines.append("vector,method,pooled_p")
    for i, vec in enumerate(vectors):
        if method.kind == "minchi":
            pooled = float(sim.empirical_pool(method, vec[None, :], table)[0])
        elif method.kind == "hr":
            pooled = float(method.pool(vec, table))
        else:
            pooled = float(method.pool(vec))
        if args.format == "csv":
            lines.append(f"{i},{method.canonical()},{pooled:.17g}")
        else:
            lines.append(f"{pooled:.4g}")
    _emit(args, lines)


def _closed_levels(method, M, alpha):
    """Closed-form (p_c, p_r) where one exists, else (None, None)."""
    if method.kind == "chi":
        return (ct.chi_pc(method.kappa, M, alpha),
                ct.chi_pr(method.kappa, M, alpha))
    if method.kind == "fisher":
        pc = ct.quantile_closed_pc(lambda x: sf.chi2_cdf(x, 2.0),
                                   lambda x: sf.chi2_cdf(x, 2.0 * M),
                                   np.ones(M), alpha)
        pr = math.exp(-0.5 * sf.chi2_quantile(1.0 - alpha, 2.0 * M))
        return pc, pr
    if method.kind == "stouffer" and method.weights is None:
        c = np.full(M, 1.0 / math.sqrt(M))
        pc = ct.quantile_closed_pc(sf.normal_cdf, sf.normal_cdf, c, alpha)
        return pc, 0.0
    if method.kind == "order" and method.k == 1:
        pc = -math.expm1(math.log1p(-alpha) / M)
        return pc, pc
    return None, None


def cmd_rejection_levels(args):
    M = args.m
    alpha = args.alpha
    method = _method_from_args(args, M)
    if method.kind in ("hr", "minchi"):
        raise ValidationError(
            "rejection levels need a closed-form pooler (table-backed "
            "kinds have simulation error on the boundary)")
    prof = ct.rejection_profile(method.pool, M, alpha)
    closed_pc, closed_pr = _closed_levels(method, M, alpha)
    flags = []
    if closed_pc is not None and abs(closed_pc - prof.p_c) > 1e-6:
        flags.append(f"closed-vs-generic p_c disagree by "
                     f"{abs(closed_pc - prof.p_c):.3g}")
    if (closed_pr is not None and prof.p_r is not None
            and abs(closed_pr - prof.p_r) > 1e-6):
        flags.append(f"closed-vs-generic p_r disagree by "
                     f"{abs(closed_pr - prof.p_r):.3g}")
    if args.format == "csv":
        lines = ["method,M,alpha,p_c,p_r,quotient,closed_p_c,closed_p_r,flags"]
        lines.append(",".join([
            method.canonical(), str(M), f"{alpha:.17g}",
            f"{prof.p_c:.17g}",
            "absent" if prof.p_r is None else f"{prof.p_r:.17g}",
            "" if prof.quotient is None else f"{prof.quotient:.17g}",
            "" if closed_pc is None else f"{closed_pc:.17g}",
            "" if closed_pr is None else f"{closed_pr:.17g}",
            ";".join(flags)]))
    else:
        lines = [f"method: {method.canonical()}  M={M}  alpha={_fmt(alpha, 4)}",
                 f"p_c = {_fmt(prof.p_c, 4)}",
                 f"p_r = {_fmt(prof.p_r, 4)}",
                 f"quotient = {_fmt(prof.quotient, 4)}"]
        if closed_pc is not None:
            lines.append(f"closed-form p_c = {_fmt(closed_pc, 4)}")
        if closed_pr is not None:
            lines.append(f"closed-form p_r = {_fmt(closed_pr, 4)}")
        lines.extend(f"FLAG: {f}" for f in flags)
    _emit(args, lines)


TABLE_Q = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
TABLE_M = (2, 5, 20, 100, 500, 2000, 10000)


def cmd_kappa(args):
    alpha = args.alpha
    if args.q is not None:
        M = args.m
        if M is None:
            raise ValidationError("kappa lookup needs --m")
        kappa = ct.chi_kappa(args.q, M, alpha)
        if args.format == "csv":
            lines = ["q,M,alpha,kappa,log10_kappa",
                     f"{args.q:.17g},{M},{alpha:.17g},{kappa:.17g},"
                     f"{math.log10(kappa):.17g}"]
        else:
            lines = [f"kappa = {_fmt(kappa, 4)}",
                     f"log10(kappa) = {_fmt(math.log10(kappa), 4)}"]
        _emit(args, lines)
        return
    lines = ["M,q,kappa,log10_kappa"]
    for M in TABLE_M:
        for q in TABLE_Q:
            kappa = ct.chi_kappa(q, M, alpha)
            lines.append(f"{M},{q:.17g},{kappa:.17g},"
                         f"{math.log10(kappa):.17g}")
    _emit(args, lines)


Q_TABLE_METHODS = (
    ("order(k=1)", lambda M: pl.MethodSpec.order(1)),
    ("stouffer", lambda M: pl.MethodSpec.stouffer()),
    ("fisher", lambda M: pl.MethodSpec.fisher()),
    ("pearson", lambda M: pl.MethodSpec.pearson()),
    ("chi(kappa=1.0)", lambda M: pl.MethodSpec.chi(1.0)),
    ("chi(kappa=0.1)", lambda M: pl.MethodSpec.chi(0.1)),
)


def cmd_q_table(args):
    alpha = args.alpha
    ms = [int(v) for v in _parse_float_list(args.m)] if args.m else [2, 5, 10, 20]
    lines = ["method,M,alpha,p_c,p_r,quotient"]
    for label, make in Q_TABLE_METHODS:
        for M in ms:
            method = make(M)
            if method.kind == "chi":
                pc = ct.chi_pc(method.kappa, M, alpha)
                pr = ct.chi_pr(method.kappa, M, alpha)
                q = ct.chi_q(method.kappa, M, alpha)
                lines.append(f"{label},{M},{alpha:.17g},{pc:.17g},"
                             f"{pr:.17g},{q:.17g}")
            else:
                prof = ct.rejection_profile(method.pool, M, alpha)
                pr_s = "absent" if prof.p_r is None else f"{prof.p_r:.17g}"
                q_s = "" if prof.quotient is None else f"{prof.quotient:.17g}"
                lines.append(f"{label},{M},{alpha:.17g},{prof.p_c:.17g},"
                             f"{pr_s},{q_s}")
    _emit(args, lines)


def _power_method_param(method):
    if method.kind == "chi":
        return f"{method.kappa:.17g}"
    if method.kind == "hr":
        return f"{method.w:.17g}"
    if method.kind == "order":
        return str(method.k)
    if method.kind == "gamma":
        return f"{method.k:.17g}"
    return ""


def cmd_power(args):
    M = args.m
    method = _method_from_args(args, M)
    etas = _parse_float_list(args.eta)
    divergences = _parse_float_list(args.divergence)
    ws = _parse_float_list(args.w) if args.w is not None else [1.0]
    if any(d <= 0 for d in divergences):
        raise ValidationError(
            "--divergence entries must be positive (log grid cells)")
    lnD = [math.log(d) for d in divergences]
    lnw = [math.log(v) for v in ws]
    tables = {}
    if method.kind in ("hr", "minchi"):
        tables[method.canonical()] = _null_table_for(args, method, M)
    grid = sim.power_surface([method], etas, lnD, lnw, M, args.alpha,
                             args.n_sim, args.seed, null_tables=tables)
    lines = ["eta,ln_divergence,ln_w,method,kappa_or_w,power,se,n_sim"]
    for i, eta in enumerate(etas):
        for j, ld in enumerate(lnD):
            for k, lw in enumerate(lnw):
                pw = grid.power[i, j, k, 0]
                se = grid.se[i, j, k, 0]
                pw_s = "absent" if math.isnan(pw) else f"{pw:.17g}"
                se_s = "absent" if math.isnan(se) else f"{se:.17g}"
                lines.append(
                    f"{eta:.17g},{ld:.17g},{lw:.17g},{method.canonical()},"
                    f"{_power_method_param(method)},{pw_s},{se_s},{args.n_sim}")
    _emit(args, lines)


def _svg_heatmap(counts, eta_vals, lnd_vals, path):
    """Single-file SVG heatmap of the atlas count matrix."""
    n0, n1 = counts.shape
    cell = 28
    left, top, right, bottom = 70, 30, 20, 60
    width = left + n1 * cell + right
    height = top + n0 * cell + bottom
    peak = max(1, int(counts.max()))
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>']
    for i in range(n0):
        for j in range(n1):
            t = counts[i, j] / peak
            r = int(255 - 205 * t)
            g = int(255 - 155 * t)
            b = 255
            y = top + (n0 - 1 - i) * cell
            parts.append(
                f'<rect x="{left + j * cell}" y="{y}" width="{cell}" '
                f'height="{cell}" fill="rgb({r},{g},{b})" '
                f'stroke="#ccc" stroke-width="0.5"/>')
            parts.append(
                f'<text x="{left + j * cell + cell / 2}" y="{y + cell / 2 + 4}" '
                f'font-size="10" text-anchor="middle" fill="#333">'
                f'{int(counts[i, j])}</text>')
    for j, v in enumerate(lnd_vals):
        parts.append(
            f'<text x="{left + j * cell + cell / 2}" '
            f'y="{top + n0 * cell + 16}" font-size="9" '
            f'text-anchor="middle">{v:.2g}</text>')
    for i, v in enumerate(eta_vals):
        y = top + (n0 - 1 - i) * cell + cell / 2 + 3
        parts.append(f'<text x="{left - 6}" y="{y}" font-size="9" '
                     f'text-anchor="end">{v:.2g}</text>')
    parts.append(
        f'<text x="{left + n1 * cell / 2}" y="{top + n0 * cell + 40}" '
        f'font-size="11" text-anchor="middle">ln divergence</text>')
    parts.append(
        f'<text x="16" y="{top + n0 * cell / 2}" font-size="11" '
        f'text-anchor="middle" transform="rotate(-90 16 '
        f'{top + n0 * cell / 2})">eta</text>')
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")


def cmd_atlas(args):
    M = args.m
    etas = np.array(_parse_float_list(args.eta))
    lnD = np.array(_parse_float_list(args.lnd_grid))
    lnw = np.array(_parse_float_list(args.lnw_grid))
    lnk = _parse_lnk_grid(args.lnk_grid)
    methods = [pl.MethodSpec.chi(math.exp(v)) for v in lnk]
    kappa_index = int(np.argmin(np.abs(lnk - math.log(args.kappa)))) \
        if args.kappa is not None else 0
    mask_stacks = []
    corner_masks = []
    for k, lw in enumerate(lnw):
        grid = sim.power_surface(methods, etas, lnD, [lw], M, args.alpha,
                                 args.n_sim, sim.derive_seed(args.seed, k))
        powers = np.transpose(grid.power[:, :, 0, :], (2, 0, 1))
        if args.sigma > 0:
            powers = np.stack([sim.gaussian_smooth(p, args.sigma)
                               for p in powers])
        mask_stacks.append(sim.max_power_mask(powers, args.n_sim))
        corner_masks.append(sim.corner_tie_mask(powers, args.alpha,
                                                args.n_sim))
    counts, eta_marg, lnd_marg = sim.alt_frequency_map(
        mask_stacks, kappa_index, corner_masks=corner_masks)
    lines = [f"# kappa={math.exp(lnk[kappa_index]):.17g}",
             "# rows: eta values; columns: ln divergence values",
             "# eta=" + ",".join(f"{v:.17g}" for v in etas),
             "# ln_divergence=" + ",".join(f"{v:.17g}" for v in lnD),
             "# ln_w=" + ",".join(f"{v:.17g}" for v in lnw)]
    for i in range(counts.shape[0]):
        lines.append(",".join(str(int(c)) for c in counts[i]))
    lines.append("eta_marginal," + ",".join(str(int(c)) for c in eta_marg))
    lines.append("lnd_marginal," + ",".join(str(int(c)) for c in lnd_marg))
    if args.svg:
        _svg_heatmap(counts, etas, lnD, args.svg)
        lines.append(f"# heatmap written to {args.svg}")
    _emit(args, lines)


def cmd_sweep(args):
    vectors = parse_vectors(_read_text(args.input))
    vec = vectors[0]
    if len(vectors) > 1:
        raise ValidationError("sweep pools a single vector; got several")
    lnk = _parse_lnk_grid(args.lnk_grid)
    table = None
    if args.null_ref:
        method = pl.MethodSpec.minchi(lnk)
        table = _null_table_for(args, method, vec.size)
    sw = sim.kappa_sweep(vec, lnk, null_refs=table)
    summary = [f"kappa_min = {_fmt(sw.kappa_min, 4)}",
               f"p_min = {_fmt(sw.p_min, 4)}"]
    if table is not None:
        summary += [f"null_ref_q05 = {_fmt(sw.null_q05, 4)}",
                    f"null_ref_q01 = {_fmt(sw.null_q01, 4)}",
                    f"null_ref_q001 = {_fmt(sw.null_q001, 4)}"]
    if args.format == "summary":
        _emit(args, summary)
        return
    lines = ["ln_kappa,pooled_p"]
    for v, pv in zip(sw.lnk, sw.pooled):
        lines.append(f"{v:.17g},{pv:.17g}")
    lines.extend("# " + s for s in summary)
    _emit(args, lines)


def cmd_select(args):
    vectors = parse_vectors(_read_text(args.input))
    vec = vectors[0]
    if len(vectors) > 1:
        raise ValidationError("select works on a single vector; got several")
    if args.kappa is not None:
        kappa_min = args.kappa
    else:
        sw = sim.kappa_sweep(vec, _parse_lnk_grid(args.lnk_grid))
        kappa_min = sw.kappa_min
    idx = sim.select_tests(vec, kappa_min, args.eta)
    if args.format == "csv":
        lines = ["index,p_value"]
        lines.extend(f"{int(i)},{vec[i]:.17g}" for i in idx)
    else:
        lines = [f"kappa_min = {_fmt(kappa_min, 4)}",
                 f"selected {idx.size} of {vec.size} tests",
                 "indices: " + ",".join(str(int(i)) for i in idx)]
    _emit(args, lines)


def cmd_generate(args):
    M = args.m
    spec = sp.spec_from_divergence(args.eta, args.divergence, args.w, M)
    rng = np.random.default_rng(args.seed)
    lines = []
    for _ in range(args.n):
        vec = sp.gen_h3(spec, rng)
        lines.append(",".join(f"{v:.17g}" for v in vec))
    _emit(args, lines)


# --------------------------------------------------------------------------
# argument wiring
# --------------------------------------------------------------------------

def _add_common(sub, input_arg=False):
    if input_arg:
        sub.add_argument("input", help="path, '-' for stdin, or inline "
                         "comma-separated p-values")
    sub.add_argument("--alpha", type=float, default=0.05)
    sub.add_argument("--n-sim", type=int, default=2000)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--threads", type=int, default=0)
    sub.add_argument("--cache-dir", default=None)
    sub.add_argument("--out", default=None)
    sub.add_argument("--format", choices=("csv", "summary"),
                     default="summary")
    sub.add_argument("--table-n-sim", type=int, default=DEFAULT_TABLE_NSIM,
                     help="n_sim for simulated null tables")


def _add_method_flags(sub):
    sub.add_argument("--method", required=True,
                     choices=("order", "stouffer", "fisher", "pearson",
                              "gamma", "chi", "hr", "minchi"))
    sub.add_argument("--k", type=float, default=None)
    sub.add_argument("--theta", type=float, default=None)
    sub.add_argument("--kappa", type=float, default=None)
    sub.add_argument("--w", type=float, default=None)
    sub.add_argument("--lnk-grid", default="-8:8:65")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="poolcore",
        description="pool p-values, measure rejection-region balance, and "
                    "run desk-scale power experiments")
    subs = parser.add_subparsers(dest="subcommand", required=True)

    s = subs.add_parser("pool", help="pool one or more p-value vectors")
    _add_method_flags(s)
    _add_common(s, input_arg=True)
    s.set_defaults(func=cmd_pool)

    s = subs.add_parser("rejection-levels",
                        help="central/marginal levels and quotient")
    _add_method_flags(s)
    s.add_argument("--m", type=int, required=True)
    _add_common(s)
    s.set_defaults(func=cmd_rejection_levels)

    s = subs.add_parser("kappa",
                        help="kappa for a target quotient, or the full "
                             "selection table")
    s.add_argument("--q", type=float, default=None)
    s.add_argument("--m", type=int, default=None)
    _add_common(s)
    s.set_defaults(func=cmd_kappa)

    s = subs.add_parser("q-table",
                        help="centrality quotients of the implemented "
                             "poolers across M")
    s.add_argument("--m", default=None,
                   help="comma-separated M values (default 2,5,10,20)")
    _add_common(s)
    s.set_defaults(func=cmd_q_table)

    s = subs.add_parser("power", help="Monte Carlo power over small grids")
    _add_method_flags(s)
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--eta", required=True,
                   help="comma-separated prevalence values")
    s.add_argument("--divergence", required=True,
                   help="comma-separated divergence values (linear scale)")
    _add_common(s)
    s.set_defaults(func=cmd_power)

    s = subs.add_parser("atlas",
                        help="alternative atlas: where each kappa wins")
    s.add_argument("--m", type=int, default=10)
    s.add_argument("--eta", default="0.1,0.25,0.5,0.75,1.0")
    s.add_argument("--lnd-grid", default="-3,-2,-1,0,1,2,3")
    s.add_argument("--lnw-grid", default="-3,-2.25,-1.5,-0.75,0")
    s.add_argument("--lnk-grid", default="-4:4:5")
    s.add_argument("--kappa", type=float, default=None,
                   help="kappa layer to report (nearest grid point)")
    s.add_argument("--sigma", type=float, default=1.0,
                   help="smoothing sigma in grid cells; 0 disables")
    s.add_argument("--svg", default=None,
                   help="also write a heatmap to this SVG file")
    _add_common(s)
    s.set_defaults(func=cmd_atlas)

    s = subs.add_parser("sweep", help="chi pooling across a kappa grid")
    s.add_argument("--lnk-grid", default="-8:8:65")
    s.add_argument("--null-ref", action="store_true",
                   help="attach simulated null reference quantiles")
    _add_common(s, input_arg=True)
    s.set_defaults(func=cmd_sweep)

    s = subs.add_parser("select",
                        help="indices of the tests driving a rejection")
    s.add_argument("--eta", type=float, required=True,
                   help="fraction of tests to select")
    s.add_argument("--kappa", type=float, default=None,
                   help="kappa_min (default: from a sweep)")
    s.add_argument("--lnk-grid", default="-8:8:65")
    _add_common(s, input_arg=True)
    s.set_defaults(func=cmd_select)

    s = subs.add_parser("generate", help="draw p-value vectors under H3/H4")
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--eta", type=float, required=True)
    s.add_argument("--divergence", type=float, required=True,
                   help="divergence from uniform (linear scale)")
    s.add_argument("--w", type=float, default=1.0)
    s.add_argument("--n", type=int, default=1, help="number of vectors")
    _add_common(s)
    s.set_defaults(func=cmd_generate)

    return parser


def _apply_threads(args):
    n = getattr(args, "threads", 0)
    if n and n > 0:
        try:
            import numba
            numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
        except Exception:
            pass


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    _apply_threads(args)
    try:
        args.func(args)
    except (ValidationError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    except (NumericalError, ArithmeticError) as exc:
        sys.stderr.write(f"numerical error: {exc}\n")
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
