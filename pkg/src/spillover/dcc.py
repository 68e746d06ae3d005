"""Two-step DCC(1,1) GARCH with Gaussian and multivariate-t second stages.

Stage one fits a univariate GARCH(1,1) per series; stage two drives a
correlation recursion on the standardized residuals eta_t:

    Q_t = (1 - alpha - beta) * Qbar + alpha * eta_{t-1} eta_{t-1}' + beta * Q_{t-1}
    R_t = diag(Q_t)^{-1/2} Q_t diag(Q_t)^{-1/2}

with Qbar fixed at the sample correlation of the residuals (correlation
targeting).  The t variant replaces the Gaussian stage-two density with a
multivariate t whose degrees of freedom are estimated jointly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date

import numpy as np
from scipy.signal import lfilter
from scipy.special import gammaln

from .garch import GarchFit, fit_garch
from .market_data import ReturnMatrix
from .optimizer import (
    BlockTransform,
    BoundedTransform,
    MleProblem,
    MleSettings,
    StationaryPairTransform,
    maximize,
)

__all__ = [
    "DccParams",
    "DccFit",
    "CorrelationSeries",
    "dcc_correlation_path",
    "dcc_loglik",
    "tdcc_loglik",
    "fit_dcc",
    "extract_pair",
]

_LN_2PI = math.log(2.0 * math.pi)
_NU_BOUNDS = (2.1, 200.0)


@dataclass(frozen=True)
class DccParams:
    """DCC recursion coefficients plus the targeted intercept correlation."""

    alpha: float
    beta: float
    qbar: np.ndarray
    nu: float | None = None

    def __post_init__(self) -> None:
        if not (math.isfinite(self.alpha) and math.isfinite(self.beta)):
            raise ValueError("alpha and beta must be finite")
        if self.alpha < 0.0 or self.beta < 0.0:
            raise ValueError("alpha and beta must be >= 0")
        if self.alpha + self.beta >= 1.0:
            raise ValueError(f"alpha + beta must be < 1, got {self.alpha + self.beta}")
        if self.nu is not None and not self.nu > 2.0:
            raise ValueError(f"nu must be > 2, got {self.nu}")
        qbar = np.asarray(self.qbar, dtype=float)
        _validate_qbar(qbar)
        qbar.setflags(write=False)
        object.__setattr__(self, "qbar", qbar)


def _validate_qbar(qbar: np.ndarray) -> None:
    if qbar.ndim != 2 or qbar.shape[0] != qbar.shape[1]:
        raise ValueError("qbar must be square")
    if not np.all(np.isfinite(qbar)):
        raise ValueError("qbar contains non-finite values")
    if not np.allclose(np.diag(qbar), 1.0, atol=1e-10):
        raise ValueError("qbar must have unit diagonal")
    if not np.allclose(qbar, qbar.T, atol=1e-10):
        raise ValueError("qbar must be symmetric")
    if np.min(np.linalg.eigvalsh(qbar)) <= 0.0:
        raise ValueError("qbar must be positive definite")


@dataclass
class DccFit:
    """Fitted DCC model: stage-1 GARCH fits plus the correlation dynamics."""

    stage1: tuple[GarchFit, ...]
    params: DccParams
    r_path: np.ndarray
    h_path: np.ndarray
    loglik_stage2: float
    std_errors: dict[str, float]
    converged: bool
    iterations: int
    markets: tuple[str, ...]
    dates: tuple[date, ...] | None = None

    @property
    def std_residuals(self) -> np.ndarray:
        return np.column_stack([fit.std_residuals for fit in self.stage1])


@dataclass(frozen=True)
class CorrelationSeries:
    """Dynamic conditional correlation path for one market pair."""

    pair: tuple[str, str]
    rho: np.ndarray
    dates: tuple[date, ...] | None = None

    def __post_init__(self) -> None:
        rho = np.asarray(self.rho, dtype=float).ravel()
        if np.any(np.abs(rho) > 1.0):
            raise ValueError("correlations must lie in [-1, 1]")
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)
        if self.dates is not None and len(self.dates) != rho.size:
            raise ValueError("dates length must match rho length")


def _as_residual_matrix(std_residuals) -> np.ndarray:
    eta = np.asarray(std_residuals, dtype=float)
    if eta.ndim != 2 or eta.shape[1] < 2:
        raise ValueError(f"expected a T x K residual matrix with K >= 2, got {eta.shape}")
    if not np.all(np.isfinite(eta)):
        raise ValueError("residuals contain non-finite values")
    if np.any(np.ptp(eta, axis=0) == 0.0):
        raise ValueError("residual matrix has a constant column")
    return eta


def _check_dcc_coeffs(alpha: float, beta: float) -> None:
    if alpha < 0.0 or beta < 0.0 or alpha + beta >= 1.0:
        raise ValueError(
            f"require alpha >= 0, beta >= 0, alpha + beta < 1; got ({alpha}, {beta})"
        )


def dcc_correlation_path(
    alpha: float,
    beta: float,
    std_residuals,
    qbar: np.ndarray | None = None,
) -> np.ndarray:
    """Correlation matrix path R_t, shape (T, K, K).

    ``qbar`` defaults to the sample correlation of the residuals; the
    recursion starts at Q_1 = Qbar.
    """
    _check_dcc_coeffs(alpha, beta)
    eta = _as_residual_matrix(std_residuals)
    t_obs, k = eta.shape
    if qbar is None:
        qbar = np.corrcoef(eta, rowvar=False)
    else:
        qbar = np.asarray(qbar, dtype=float)
        if qbar.shape != (k, k):
            raise ValueError(f"qbar must be {k}x{k}")
    _validate_qbar(qbar)

    q = np.empty((t_obs, k, k))
    q[0] = qbar
    if t_obs > 1:
        innovations = eta[:-1, :, None] * eta[:-1, None, :]
        x = ((1.0 - alpha - beta) * qbar)[None, :, :] + alpha * innovations
        flat = x.reshape(t_obs - 1, k * k)
        zi = (beta * qbar).reshape(1, k * k)
        q[1:] = lfilter([1.0], [1.0, -beta], flat, axis=0, zi=zi)[0].reshape(
            t_obs - 1, k, k
        )
    if not np.all(np.isfinite(q)):
        raise ValueError("non-finite correlation recursion")
    d = np.sqrt(q[:, np.arange(k), np.arange(k)])
    r = q / (d[:, :, None] * d[:, None, :])
    r = np.clip(r, -1.0, 1.0)
    r[:, np.arange(k), np.arange(k)] = 1.0
    return r


def _correlation_terms(r_path: np.ndarray, eta: np.ndarray):
    """Per-observation log-determinants and quadratic forms eta' R^-1 eta."""
    try:
        chol = np.linalg.cholesky(r_path)
    except np.linalg.LinAlgError:
        raise ValueError("singular conditional correlation matrix") from None
    logdet = 2.0 * np.sum(np.log(np.diagonal(chol, axis1=1, axis2=2)), axis=1)
    z = np.linalg.solve(chol, eta[:, :, None])[:, :, 0]
    quad = np.sum(z * z, axis=1)
    return logdet, quad


def dcc_loglik(
    alpha: float, beta: float, std_residuals, qbar: np.ndarray | None = None
) -> float:
    """Gaussian stage-2 log-likelihood on standardized residuals.

    The stage-1 volatility terms (the D_t block of the joint likelihood) are
    constants here and are omitted.
    """
    eta = _as_residual_matrix(std_residuals)
    r_path = dcc_correlation_path(alpha, beta, eta, qbar)
    logdet, quad = _correlation_terms(r_path, eta)
    k = eta.shape[1]
    ll = -0.5 * float(np.sum(k * _LN_2PI + logdet + quad))
    if not math.isfinite(ll):
        raise ValueError("non-finite likelihood")
    return ll


def tdcc_loglik(
    alpha: float,
    beta: float,
    nu: float,
    std_residuals,
    qbar: np.ndarray | None = None,
) -> float:
    """Multivariate-t stage-2 log-likelihood (unit-variance t, dof nu > 2)."""
    if not nu > 2.0:
        raise ValueError(f"nu must be > 2, got {nu}")
    eta = _as_residual_matrix(std_residuals)
    r_path = dcc_correlation_path(alpha, beta, eta, qbar)
    logdet, quad = _correlation_terms(r_path, eta)
    k = eta.shape[1]
    const = (
        gammaln((nu + k) / 2.0)
        - gammaln(nu / 2.0)
        - 0.5 * k * math.log(math.pi * (nu - 2.0))
    )
    ll = float(
        np.sum(const - 0.5 * logdet - 0.5 * (nu + k) * np.log1p(quad / (nu - 2.0)))
    )
    if not math.isfinite(ll):
        raise ValueError("non-finite likelihood")
    return ll


def fit_dcc(
    returns,
    distribution: str = "gaussian",
    settings: MleSettings | None = None,
) -> DccFit:
    """Two-step DCC(1,1)-GARCH(1,1) fit over K series.

    Stage one fits one GARCH(1,1) per column; any stage-1 non-convergence
    aborts naming the failing market.  Stage two maximizes the Gaussian or
    multivariate-t correlation likelihood over (alpha, beta[, nu]) with Qbar
    targeted at the sample correlation of the standardized residuals.
    """
    if distribution not in ("gaussian", "t"):
        raise ValueError(f"distribution must be 'gaussian' or 't', got {distribution!r}")
    dates: tuple[date, ...] | None = None
    if isinstance(returns, ReturnMatrix):
        markets = returns.markets
        dates = returns.dates
        values = returns.values
    else:
        values = np.asarray(returns, dtype=float)
        markets = tuple(f"series{k + 1}" for k in range(values.shape[1]))
    if values.ndim != 2 or values.shape[1] < 2:
        raise ValueError(f"expected a T x K matrix with K >= 2, got {values.shape}")
    t_obs, k = values.shape
    if t_obs < 250:
        raise ValueError(f"need at least 250 observations, got {t_obs}")
    for name, col in zip(markets, values.T):
        if np.ptp(col) == 0.0:
            raise ValueError(f"market {name!r} has a constant return series")

    stage1 = []
    for name, col in zip(markets, values.T):
        fit = fit_garch(col, settings)
        if not fit.converged:
            raise RuntimeError(f"stage-1 GARCH did not converge for market {name!r}")
        stage1.append(fit)
    eta = np.column_stack([fit.std_residuals for fit in stage1])
    qbar = np.corrcoef(eta, rowvar=False)

    if distribution == "gaussian":
        transform = BlockTransform([(StationaryPairTransform(), 2)])
        start = np.array([0.02, 0.95])
        names = ("alpha", "beta")

        def objective(u: np.ndarray) -> float:
            a, b = transform.to_constrained(u)
            try:
                return -dcc_loglik(a, b, eta, qbar)
            except ValueError:
                return np.inf

    else:
        transform = BlockTransform([
            (StationaryPairTransform(), 2),
            (BoundedTransform(*_NU_BOUNDS), 1),
        ])
        start = np.array([0.02, 0.95, 8.0])
        names = ("alpha", "beta", "nu")

        def objective(u: np.ndarray) -> float:
            a, b, nu = transform.to_constrained(u)
            try:
                return -tdcc_loglik(a, b, nu, eta, qbar)
            except ValueError:
                return np.inf

    problem = MleProblem(
        dimension=len(start),
        objective=objective,
        transform=transform,
        initial_points=[start],
        scale=float(t_obs),
    )
    res = maximize(problem, settings)
    alpha, beta = float(res.params[0]), float(res.params[1])
    nu = float(res.params[2]) if distribution == "t" else None
    params = DccParams(alpha=alpha, beta=beta, qbar=qbar, nu=nu)
    r_path = dcc_correlation_path(alpha, beta, eta, qbar)
    sigma = np.sqrt(np.column_stack([fit.sigma2_path for fit in stage1]))
    h_path = r_path * sigma[:, :, None] * sigma[:, None, :]
    return DccFit(
        stage1=tuple(stage1),
        params=params,
        r_path=r_path,
        h_path=h_path,
        loglik_stage2=-res.neg_loglik,
        std_errors={name: float(se) for name, se in zip(names, res.std_errors)},
        converged=res.converged,
        iterations=res.iterations,
        markets=markets,
        dates=dates,
    )


def extract_pair(fit: DccFit, i: int, j: int) -> CorrelationSeries:
    """Correlation path rho_{ij,t} for one pair of the fitted system."""
    k = fit.r_path.shape[1]
    if not (0 <= i < k and 0 <= j < k):
        raise IndexError(f"pair indices ({i}, {j}) out of range for K={k}")
    if i == j:
        raise ValueError("a pair requires two distinct markets (diagonal is always 1)")
    return CorrelationSeries(
        pair=(fit.markets[i], fit.markets[j]),
        rho=fit.r_path[:, i, j].copy(),
        dates=fit.dates,
    )
