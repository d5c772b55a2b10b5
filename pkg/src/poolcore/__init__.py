"""Pooling M independent p-values into one, with tools for choosing the
pooler: rejection-region balance (central vs marginal), beta alternatives
measured by KL divergence from uniform, and desk-scale Monte Carlo power
experiments."""

from .centrality import (RejectionProfile, central_level_generic, chi_kappa,
                         chi_pc, chi_pr, chi_q, marginal_level_generic,
                         quantile_closed_pc, rejection_profile)
from .divergence import (BetaAlt, b_from_aw, beta_divergence,
                         beta_divergence_w, beta_log_density, find_a,
                         kl_divergence_numeric, uniform_log_density)
from .errors import (NoRejectionRegionError, NumericalError,
                     UnreachableDivergenceError, ValidationError)
from .pooling import (MethodSpec, NullQuantileTable, chi_pool, fisher_pool,
                      gamma_pool, hr_pool, hr_stat, load_table,
                      null_table_cached, ord_pool, pearson_pool,
                      quantile_pool, save_table, simulate_null_table,
                      stouffer_pool, table_cache_path)
from .sampling import (AlternativeSpec, gen_h3, gen_h3_batch, gen_h4,
                       round_half_up, spec_from_divergence)
from .simulation import (DEFAULT_LNK_GRID, KappaSweep, PowerGrid,
                         alt_frequency_map, corner_tie_mask, derive_seed,
                         empirical_pool, gaussian_smooth, kappa_sweep,
                         max_power_mask, power_estimate, power_surface,
                         select_tests)
from .specfun import beta_sample, chi2_cdf, chi2_quantile, chi2_sf, normal_cdf, normal_quantile

__version__ = "0.1.0"

__all__ = [
    "AlternativeSpec", "BetaAlt", "DEFAULT_LNK_GRID", "KappaSweep",
    "MethodSpec", "NoRejectionRegionError", "NullQuantileTable",
    "NumericalError", "PowerGrid", "RejectionProfile",
    "UnreachableDivergenceError", "ValidationError", "alt_frequency_map",
    "b_from_aw", "beta_divergence", "beta_divergence_w", "beta_log_density",
    "beta_sample", "central_level_generic", "chi2_cdf", "chi2_quantile",
    "chi2_sf", "chi_kappa", "chi_pc", "chi_pool", "chi_pr", "chi_q",
    "corner_tie_mask", "derive_seed", "empirical_pool", "find_a",
    "fisher_pool", "gamma_pool", "gaussian_smooth", "gen_h3",
    "gen_h3_batch", "gen_h4", "hr_pool", "hr_stat", "kappa_sweep",
    "kl_divergence_numeric", "load_table", "marginal_level_generic",
    "max_power_mask", "normal_cdf", "normal_quantile", "null_table_cached",
    "ord_pool", "pearson_pool", "power_estimate", "power_surface",
    "quantile_closed_pc", "quantile_pool", "rejection_profile",
    "round_half_up", "save_table", "select_tests", "simulate_null_table",
    "spec_from_divergence", "stouffer_pool", "table_cache_path",
    "uniform_log_density", "__version__",
]
