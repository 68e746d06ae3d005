"""Univariate GARCH(1,1) estimation, the first stage of DCC.

The mean is the sample mean (two-step); the variance parameters are
estimated by Gaussian MLE with a variance-targeting start.  The variance
recursion ``h_t = omega + alpha * eps_{t-1}^2 + beta * h_{t-1}`` starts at
the sample variance of the series.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .market_data import ReturnMatrix
from .optimizer import (
    BlockTransform,
    LogTransform,
    MleProblem,
    MleSettings,
    StationaryPairTransform,
    maximize,
)

__all__ = ["GarchParams", "GarchFit", "garch_variance_path", "garch_loglik", "fit_garch"]

_LN_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class GarchParams:
    """GARCH(1,1) parameters with the covariance-stationarity constraint."""

    mu: float
    omega: float
    alpha: float
    beta: float

    def __post_init__(self) -> None:
        vals = (self.mu, self.omega, self.alpha, self.beta)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("parameters must be finite")
        if self.omega <= 0.0:
            raise ValueError(f"omega must be > 0, got {self.omega}")
        if self.alpha < 0.0 or self.beta < 0.0:
            raise ValueError("alpha and beta must be >= 0")
        if self.alpha + self.beta >= 1.0:
            raise ValueError(
                f"alpha + beta must be < 1, got {self.alpha + self.beta}"
            )

    @property
    def unconditional_variance(self) -> float:
        return self.omega / (1.0 - self.alpha - self.beta)


@dataclass
class GarchFit:
    """Fitted GARCH(1,1): parameters, variance path, residuals, likelihood."""

    params: GarchParams
    std_errors: dict[str, float]
    sigma2_path: np.ndarray
    std_residuals: np.ndarray
    loglik: float
    converged: bool
    iterations: int


def _as_vector(returns) -> np.ndarray:
    if isinstance(returns, ReturnMatrix):
        if returns.n_markets != 1:
            raise ValueError("expected a single return series")
        returns = returns.values[:, 0]
    r = np.asarray(returns, dtype=float).ravel()
    if not np.all(np.isfinite(r)):
        raise ValueError("returns contain non-finite values")
    return r


def garch_variance_path(
    params: GarchParams, returns, h1: float | None = None
) -> np.ndarray:
    """Conditional variance path under the GARCH(1,1) recursion.

    ``h1`` defaults to the sample variance of the returns; it may be passed
    explicitly for degenerate inputs (e.g. an all-zero series, whose sample
    variance would be zero and the likelihood undefined).
    """
    r = _as_vector(returns)
    eps = r - params.mu
    if h1 is None:
        h1 = float(np.var(r))
    if not (h1 > 0.0 and math.isfinite(h1)):
        raise ValueError(
            "initial variance must be positive and finite; "
            "constant series have no valid default"
        )
    h = np.empty(r.size)
    h[0] = h1
    if r.size > 1:
        x = params.omega + params.alpha * eps[:-1] ** 2
        h[1:] = lfilter([1.0], [1.0, -params.beta], x, zi=[params.beta * h1])[0]
    if not np.all(np.isfinite(h)) or np.any(h <= 0.0):
        raise ValueError("non-finite or non-positive conditional variance path")
    return h


def garch_loglik(params: GarchParams, returns, h1: float | None = None) -> float:
    """Gaussian log-likelihood of a GARCH(1,1) model."""
    r = _as_vector(returns)
    if r.size < 20:
        raise ValueError(f"series too short: {r.size} < 20 observations")
    h = garch_variance_path(params, r, h1=h1)
    eps = r - params.mu
    ll = -0.5 * float(np.sum(_LN_2PI + np.log(h) + eps * eps / h))
    if not math.isfinite(ll):
        raise ValueError("non-finite likelihood")
    return ll


def fit_garch(returns, settings: MleSettings | None = None) -> GarchFit:
    """Fit GARCH(1,1) by MLE with the mean fixed at the sample mean."""
    r = _as_vector(returns)
    if r.size < 100:
        raise ValueError(f"series too short: {r.size} < 100 observations")
    if np.ptp(r) == 0.0:
        raise ValueError("constant series cannot be fitted")
    mu = float(np.mean(r))
    s2 = float(np.var(r))

    def neg_loglik(u: np.ndarray) -> float:
        omega, alpha, beta = transform.to_constrained(u)
        try:
            return -garch_loglik(GarchParams(mu, omega, alpha, beta), r)
        except ValueError:
            return np.inf

    transform = BlockTransform([(LogTransform(), 1), (StationaryPairTransform(), 2)])
    start = np.array([s2 * 0.05, 0.05, 0.90])
    problem = MleProblem(
        dimension=3,
        objective=neg_loglik,
        transform=transform,
        initial_points=[start],
        scale=float(r.size),
    )
    res = maximize(problem, settings)
    params = GarchParams(mu, *res.params)
    h = garch_variance_path(params, r)
    std_errors = dict(zip(("omega", "alpha", "beta"), (float(v) for v in res.std_errors)))
    return GarchFit(
        params=params,
        std_errors=std_errors,
        sigma2_path=h,
        std_residuals=(r - mu) / np.sqrt(h),
        loglik=-res.neg_loglik,
        converged=res.converged,
        iterations=res.iterations,
    )
