"""Unit-root and stationarity tests for a single return series.

All three tests use a constant-only deterministic specification and
asymptotic critical values.  ADF and PP test the null of a unit root
(reject when the statistic falls below the 5% critical value); KPSS tests
the null of level stationarity (reject when the statistic exceeds it).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "TestReport",
    "adf_test",
    "pp_test",
    "kpss_test",
    "DF_CRITICAL_VALUES",
    "KPSS_CRITICAL_VALUES",
]

# Dickey-Fuller distribution, constant-only case, asymptotic
DF_CRITICAL_VALUES = {"1%": -3.43, "5%": -2.86, "10%": -2.57}
# KPSS level-stationarity case
KPSS_CRITICAL_VALUES = {"1%": 0.739, "5%": 0.463, "10%": 0.347}

STATIONARY = "stationary"
NON_STATIONARY = "non-stationary"


@dataclass(frozen=True)
class TestReport:
    """Outcome of a hypothesis test: statistic, critical values, decision.

    ``decision`` is taken at the 5% level and follows the direction of the
    test's null: ADF/PP call a series stationary when the statistic is below
    the 5% critical value, KPSS when it is at or below it.  ``p_value`` is
    populated only by tests with a standard reference distribution (the
    portmanteau diagnostics); the unit-root tests report critical values
    only.
    """

    test_name: str
    statistic: float
    lags_used: int
    critical_values: dict[str, float]
    decision: str
    p_value: float | None = None


def _validate_series(series: np.ndarray, min_len: int) -> np.ndarray:
    y = np.asarray(series, dtype=float).ravel()
    if y.size < min_len:
        raise ValueError(f"series too short: {y.size} < {min_len} observations")
    if not np.all(np.isfinite(y)):
        raise ValueError("series contains non-finite values")
    if np.ptp(y) == 0.0:
        raise ValueError("series is constant; regression would be singular")
    return y


def _ols(y: np.ndarray, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """OLS fit returning (coefficients, residuals, coefficient std errors)."""
    xtx = x.T @ x
    try:
        xtx_inv = np.linalg.inv(xtx)
    except np.linalg.LinAlgError:
        raise ValueError("singular regression matrix") from None
    beta = xtx_inv @ (x.T @ y)
    resid = y - x @ beta
    n, k = x.shape
    sigma2 = float(resid @ resid) / (n - k)
    se = np.sqrt(np.diag(xtx_inv) * sigma2)
    return beta, resid, se


def _bartlett_long_run_variance(u: np.ndarray, bandwidth: int) -> float:
    """Newey-West long-run variance with Bartlett kernel weights."""
    n = u.size
    gamma0 = float(u @ u) / n
    lam2 = gamma0
    for j in range(1, bandwidth + 1):
        w = 1.0 - j / (bandwidth + 1.0)
        gamma_j = float(u[j:] @ u[:-j]) / n
        lam2 += 2.0 * w * gamma_j
    return lam2


def _schwert_max_lag(n: int) -> int:
    return int(np.floor(12.0 * (n / 100.0) ** 0.25))


def _auto_bandwidth(n: int) -> int:
    return int(np.floor(4.0 * (n / 100.0) ** (2.0 / 9.0)))


def _adf_design(y: np.ndarray, lags: int, offset: int) -> tuple[np.ndarray, np.ndarray]:
    """Design for dy_t ~ const + y_{t-1} + dy_{t-1..lags}, rows from `offset`."""
    dy = np.diff(y)
    n = dy.size
    rows = np.arange(offset, n)
    cols = [np.ones(rows.size), y[rows]]
    for j in range(1, lags + 1):
        cols.append(dy[rows - j])
    return dy[rows], np.column_stack(cols)


def adf_test(
    series: np.ndarray,
    lags: int | None = None,
    deterministic: str = "constant",
) -> TestReport:
    """Augmented Dickey-Fuller test (null: unit root).

    Parameters
    ----------
    series
        Observed series (levels or returns).
    lags
        Number of lagged differences in the test regression.  ``None``
        selects the lag by AIC, searching down from the Schwert bound
        ``floor(12 * (T/100)**0.25)``.
    deterministic
        Only ``"constant"`` is supported.

    Returns
    -------
    TestReport
        Statistic is the t-ratio on the lagged level; critical values are
        the asymptotic Dickey-Fuller constant-only values.
    """
    if deterministic != "constant":
        raise ValueError(f"unsupported deterministic spec: {deterministic!r}")
    if lags is not None:
        if lags < 0:
            raise ValueError("lags must be >= 0")
        y = _validate_series(series, lags + 10)
        used = lags
    else:
        y = _validate_series(series, 20)
        max_lag = min(_schwert_max_lag(y.size), y.size - 12)
        max_lag = max(max_lag, 0)
        # candidate regressions share the sample implied by max_lag so the
        # information criteria are comparable
        best_aic = np.inf
        used = 0
        for p in range(0, max_lag + 1):
            lhs, x = _adf_design(y, p, max_lag)
            _, resid, _ = _ols(lhs, x)
            n = lhs.size
            ssr = float(resid @ resid)
            aic = n * np.log(ssr / n) + 2.0 * (p + 2)
            if aic < best_aic:
                best_aic = aic
                used = p
    lhs, x = _adf_design(y, used, used)
    beta, _, se = _ols(lhs, x)
    stat = float(beta[1] / se[1])
    decision = STATIONARY if stat < DF_CRITICAL_VALUES["5%"] else NON_STATIONARY
    return TestReport(
        test_name="ADF",
        statistic=stat,
        lags_used=used,
        critical_values=dict(DF_CRITICAL_VALUES),
        decision=decision,
    )


def pp_test(series: np.ndarray, bandwidth: int | None = None) -> TestReport:
    """Phillips-Perron Z(t_alpha) test (null: unit root).

    The Dickey-Fuller t-ratio from the unaugmented level regression is
    corrected non-parametrically with a Bartlett-kernel long-run variance of
    the residuals; ``bandwidth=None`` uses ``floor(4 * (T/100)**(2/9))``.
    """
    y = _validate_series(series, 20)
    n = y.size - 1
    if bandwidth is None:
        bandwidth = _auto_bandwidth(n)
    elif bandwidth < 0:
        raise ValueError("bandwidth must be >= 0")
    x = np.column_stack([y[:-1], np.ones(n)])
    beta, u, se = _ols(y[1:], x)
    rho, sigma_rho = float(beta[0]), float(se[0])
    if sigma_rho <= 0.0:
        raise ValueError("degenerate PP regression: zero coefficient variance")
    t_rho = (rho - 1.0) / sigma_rho
    s2 = float(u @ u) / (n - 2)
    gamma0 = float(u @ u) / n
    lam2 = _bartlett_long_run_variance(u, bandwidth)
    if lam2 <= 0.0:
        raise ValueError("non-positive long-run variance estimate")
    stat = float(
        np.sqrt(gamma0 / lam2) * t_rho
        - 0.5 * (lam2 - gamma0) / np.sqrt(lam2) * n * sigma_rho / np.sqrt(s2)
    )
    decision = STATIONARY if stat < DF_CRITICAL_VALUES["5%"] else NON_STATIONARY
    return TestReport(
        test_name="PP",
        statistic=stat,
        lags_used=bandwidth,
        critical_values=dict(DF_CRITICAL_VALUES),
        decision=decision,
    )


def kpss_test(series: np.ndarray, bandwidth: int | None = None) -> TestReport:
    """KPSS test (null: level stationarity).

    Statistic is ``T^-2 * sum_t S_t^2 / lam2`` where ``S_t`` are partial
    sums of the demeaned series and ``lam2`` the Bartlett long-run variance.
    """
    y = _validate_series(series, 20)
    n = y.size
    if bandwidth is None:
        bandwidth = _auto_bandwidth(n)
    elif bandwidth < 0:
        raise ValueError("bandwidth must be >= 0")
    u = y - y.mean()
    lam2 = _bartlett_long_run_variance(u, bandwidth)
    if lam2 <= 0.0:
        raise ValueError("non-positive long-run variance estimate")
    s = np.cumsum(u)
    stat = float(s @ s) / (n * n * lam2)
    decision = STATIONARY if stat <= KPSS_CRITICAL_VALUES["5%"] else NON_STATIONARY
    return TestReport(
        test_name="KPSS",
        statistic=stat,
        lags_used=bandwidth,
        critical_values=dict(KPSS_CRITICAL_VALUES),
        decision=decision,
    )
