"""Volatility spillover analysis toolkit.

Implements the full pipeline from raw price CSVs to cross-period
dynamic-correlation comparison: log returns and trading-day alignment,
unit-root tests (ADF, PP, KPSS), bivariate BEKK(1,1) and (t-)DCC GARCH
estimation by constrained maximum likelihood, residual portmanteau
diagnostics, and a seeded simulation oracle for every model.
"""

from .bekk import (
    BekkFit,
    BekkParams,
    SpilloverSummary,
    bekk_covariance_path,
    bekk_loglik,
    fit_bekk,
    spillover_summary,
)
from .dcc import (
    CorrelationSeries,
    DccFit,
    DccParams,
    dcc_correlation_path,
    dcc_loglik,
    extract_pair,
    fit_dcc,
    tdcc_loglik,
)
from .diagnostics import DccComparison, dcc_compare, hosking_test, li_mcleod_test
from .garch import GarchFit, GarchParams, fit_garch, garch_loglik, garch_variance_path
from .market_data import (
    DataError,
    PeriodSpec,
    PricePanel,
    ReturnMatrix,
    load_prices,
    log_returns,
    split_periods,
)
from .optimizer import (
    MleProblem,
    MleResult,
    MleSettings,
    OptimizationError,
    maximize,
    numerical_gradient,
    numerical_hessian,
    significance_stars,
)
from .simulate import Moments, SimSpec, sample_moments, simulate
from .stationarity import TestReport, adf_test, kpss_test, pp_test

__version__ = "0.1.0"

__all__ = [
    "BekkFit",
    "BekkParams",
    "CorrelationSeries",
    "DataError",
    "DccComparison",
    "DccFit",
    "DccParams",
    "GarchFit",
    "GarchParams",
    "Moments",
    "MleProblem",
    "MleResult",
    "MleSettings",
    "OptimizationError",
    "PeriodSpec",
    "PricePanel",
    "ReturnMatrix",
    "SimSpec",
    "SpilloverSummary",
    "TestReport",
    "adf_test",
    "bekk_covariance_path",
    "bekk_loglik",
    "dcc_compare",
    "dcc_correlation_path",
    "dcc_loglik",
    "extract_pair",
    "fit_bekk",
    "fit_dcc",
    "fit_garch",
    "garch_loglik",
    "garch_variance_path",
    "hosking_test",
    "kpss_test",
    "li_mcleod_test",
    "load_prices",
    "log_returns",
    "maximize",
    "numerical_gradient",
    "numerical_hessian",
    "pp_test",
    "sample_moments",
    "significance_stars",
    "simulate",
    "spillover_summary",
    "split_periods",
    "tdcc_loglik",
]
