"""Conditional skewness from a GARCH-S model and crash-risk regressions on it."""

from .garchs import (FilterState, GarchSFit, GarchSParams, arch_lm_test, conditional_skewness,
                     density_integral_check, garchs_filter, gaussian_loglik, gram_charlier_loglik)
from .inference import (RegressionResult, RegressionSpec, adf_test, corr_matrix, describe, lag_search,
                        ols, split_coefficient)
from .optimizer import ParamTransform, fit_garch11, fit_garchs, nelder_mead, zstats
from .simulate import SimConfig, sample_eta, simulate, simulate_path
from .timeseries import (AlignedTable, DatedSeries, align, dummy, lag, load_csv, log_change_zero_guard,
                         log_growth, log_return)

__version__ = "0.1.0"
