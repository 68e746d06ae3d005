"""Bivariate BEKK(1,1) GARCH estimation and spillover extraction.

The conditional covariance follows

    H_t = C'C + A' eps_{t-1} eps_{t-1}' A + G' H_{t-1} G

with C lower triangular, so every H_t is positive semi-definite by
construction.  Covariance stationarity (spectral radius of
``kron(A, A) + kron(G, G)`` below one) is enforced during estimation by a
penalty barrier rather than a reparameterization.  Off-diagonal elements of
G carry the cross-market volatility spillover read off in the reports.

The time recursion is sequential, so the likelihood kernel is JIT-compiled
with numba; a plain-Python fallback keeps the module importable without it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .market_data import ReturnMatrix
from .optimizer import (
    BlockTransform,
    IdentityTransform,
    LogTransform,
    MleProblem,
    MleSettings,
    maximize,
    significance_stars,
)

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a declared dependency
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def decorate(fn):
            return fn

        return decorate

__all__ = [
    "BekkParams",
    "BekkFit",
    "SpilloverSummary",
    "PARAM_LABELS",
    "bekk_covariance_path",
    "bekk_loglik",
    "fit_bekk",
    "spillover_summary",
    "stationarity_radius",
]

_LN_2PI = math.log(2.0 * math.pi)
_PENALTY = 1e10
_RADIUS_CAP = 1.0 - 1e-6

# report row order; c12 labels the subdiagonal entry C[1,0] of the
# lower-triangular C, matching the conventional table layout
PARAM_LABELS = ("c11", "c12", "c22", "a11", "a21", "a12", "a22", "g11", "g21", "g12", "g22")


def stationarity_radius(a: np.ndarray, g: np.ndarray) -> float:
    """Spectral radius of kron(A, A) + kron(G, G)."""
    m = np.kron(a, a) + np.kron(g, g)
    return float(np.max(np.abs(np.linalg.eigvals(m))))


@dataclass(frozen=True)
class BekkParams:
    """BEKK(1,1) parameter matrices with sign and stationarity constraints."""

    c: np.ndarray
    a: np.ndarray
    g: np.ndarray
    mu: np.ndarray

    def __post_init__(self) -> None:
        c = np.asarray(self.c, dtype=float)
        a = np.asarray(self.a, dtype=float)
        g = np.asarray(self.g, dtype=float)
        mu = np.asarray(self.mu, dtype=float).ravel()
        for name, arr in (("c", c), ("a", a), ("g", g)):
            if arr.shape != (2, 2):
                raise ValueError(f"{name} must be 2x2, got {arr.shape}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite values")
        if mu.shape != (2,) or not np.all(np.isfinite(mu)):
            raise ValueError("mu must be a finite 2-vector")
        if c[0, 1] != 0.0:
            raise ValueError("c must be lower triangular")
        if c[0, 0] < 0.0 or c[1, 1] < 0.0:
            raise ValueError("diagonal of c must be non-negative (sign normalization)")
        radius = stationarity_radius(a, g)
        if radius >= 1.0:
            raise ValueError(
                f"covariance non-stationary: spectral radius {radius:.6f} >= 1"
            )
        for arr in (c, a, g, mu):
            arr.setflags(write=False)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "mu", mu)

    def intercept(self) -> np.ndarray:
        """Long-run drift matrix C'C."""
        return self.c.T @ self.c


@dataclass
class BekkFit:
    """Fitted bivariate BEKK(1,1) with per-element inference."""

    params: BekkParams
    std_errors: dict[str, float]
    h_path: np.ndarray
    loglik: float
    stars: dict[str, str]
    converged: bool
    iterations: int

    def estimate(self, label: str) -> float:
        return _params_to_vector(self.params)[PARAM_LABELS.index(label)]


@njit(cache=True)
def _bekk_filter(eps, cc11, cc12, cc22, a11, a21, a12, a22, g11, g21, g12, g22,
                 h1_11, h1_12, h1_22, h_out):  # pragma: no cover - jitted
    t_total = eps.shape[0]
    h11 = h1_11
    h12 = h1_12
    h22 = h1_22
    loglik = 0.0
    ok = True
    for t in range(t_total):
        h_out[t, 0] = h11
        h_out[t, 1] = h12
        h_out[t, 2] = h22
        e1 = eps[t, 0]
        e2 = eps[t, 1]
        det = h11 * h22 - h12 * h12
        if det <= 0.0 or h11 <= 0.0:
            ok = False
        else:
            quad = (h22 * e1 * e1 - 2.0 * h12 * e1 * e2 + h11 * e2 * e2) / det
            loglik += -_LN_2PI - 0.5 * math.log(det) - 0.5 * quad
        # advance: H_{t+1} = C'C + (A' e)(A' e)' + G' H_t G
        v1 = a11 * e1 + a21 * e2
        v2 = a12 * e1 + a22 * e2
        m11 = g11 * h11 + g21 * h12
        m12 = g11 * h12 + g21 * h22
        m21 = g12 * h11 + g22 * h12
        m22 = g12 * h12 + g22 * h22
        n11 = m11 * g11 + m12 * g21
        n12 = m11 * g12 + m12 * g22
        n22 = m21 * g12 + m22 * g22
        h11 = cc11 + v1 * v1 + n11
        h12 = cc12 + v1 * v2 + n12
        h22 = cc22 + v2 * v2 + n22
    if not ok:
        return np.inf
    return loglik


def _as_matrix(returns) -> np.ndarray:
    if isinstance(returns, ReturnMatrix):
        returns = returns.values
    r = np.ascontiguousarray(np.asarray(returns, dtype=float))
    if r.ndim != 2 or r.shape[1] != 2:
        raise ValueError(f"expected a T x 2 return matrix, got shape {r.shape}")
    if not np.all(np.isfinite(r)):
        raise ValueError("returns contain non-finite values")
    return r


def _initial_covariance(r: np.ndarray, h1: np.ndarray | None) -> np.ndarray:
    if h1 is None:
        return np.cov(r, rowvar=False, bias=True)
    h1 = np.asarray(h1, dtype=float)
    if h1.shape != (2, 2) or not np.all(np.isfinite(h1)):
        raise ValueError("h1 must be a finite 2x2 matrix")
    if not np.allclose(h1, h1.T):
        raise ValueError("h1 must be symmetric")
    return h1


def _run_filter(params: BekkParams, r: np.ndarray, h1: np.ndarray | None):
    eps = r - params.mu
    h0 = _initial_covariance(r, h1)
    cc = params.intercept()
    a, g = params.a, params.g
    h_out = np.empty((r.shape[0], 3))
    ll = _bekk_filter(
        eps, cc[0, 0], cc[0, 1], cc[1, 1],
        a[0, 0], a[1, 0], a[0, 1], a[1, 1],
        g[0, 0], g[1, 0], g[0, 1], g[1, 1],
        h0[0, 0], h0[0, 1], h0[1, 1], h_out,
    )
    return ll, h_out


def _expand_path(h_flat: np.ndarray) -> np.ndarray:
    t = h_flat.shape[0]
    h = np.empty((t, 2, 2))
    h[:, 0, 0] = h_flat[:, 0]
    h[:, 0, 1] = h_flat[:, 1]
    h[:, 1, 0] = h_flat[:, 1]
    h[:, 1, 1] = h_flat[:, 2]
    return h


def bekk_covariance_path(
    params: BekkParams, returns, h1: np.ndarray | None = None
) -> np.ndarray:
    """Conditional covariance path H_t, shape (T, 2, 2).

    ``h1`` defaults to the sample covariance of the returns.
    """
    r = _as_matrix(returns)
    if r.shape[0] < 2:
        raise ValueError("need at least 2 observations")
    _, h_flat = _run_filter(params, r, h1)
    if not np.all(np.isfinite(h_flat)):
        raise ValueError("non-finite conditional covariance (explosive parameters)")
    return _expand_path(h_flat)


def bekk_loglik(params: BekkParams, returns, h1: np.ndarray | None = None) -> float:
    """Gaussian log-likelihood of the bivariate BEKK(1,1) model."""
    r = _as_matrix(returns)
    if r.shape[0] < 2:
        raise ValueError("need at least 2 observations")
    ll, _ = _run_filter(params, r, h1)
    if not math.isfinite(ll):
        raise ValueError("singular or non-positive-definite conditional covariance")
    return float(ll)


def _params_to_vector(params: BekkParams) -> np.ndarray:
    c, a, g = params.c, params.a, params.g
    return np.array([
        c[0, 0], c[1, 0], c[1, 1],
        a[0, 0], a[1, 0], a[0, 1], a[1, 1],
        g[0, 0], g[1, 0], g[0, 1], g[1, 1],
    ])


def _vector_to_matrices(v: np.ndarray):
    c = np.array([[v[0], 0.0], [v[1], v[2]]])
    a = np.array([[v[3], v[5]], [v[4], v[6]]])
    g = np.array([[v[7], v[9]], [v[8], v[10]]])
    return c, a, g


def _lower_factor(m: np.ndarray) -> np.ndarray:
    """Lower-triangular C with C'C = m, for symmetric positive definite m."""
    c22 = math.sqrt(m[1, 1])
    c21 = m[0, 1] / c22
    c11 = math.sqrt(max(m[0, 0] - c21 * c21, 1e-12))
    return np.array([[c11, 0.0], [c21, c22]])


def fit_bekk(returns, settings: MleSettings | None = None) -> BekkFit:
    """Fit the full 11-parameter bivariate BEKK(1,1) by Gaussian MLE.

    The mean is the vector of sample means (two-step).  Reported parameters
    are sign-normalized so a11 >= 0 and g11 >= 0.
    """
    r = _as_matrix(returns)
    t_obs = r.shape[0]
    if t_obs < 250:
        raise ValueError(f"need at least 250 observations, got {t_obs}")
    if np.ptp(r[:, 0]) == 0.0 or np.ptp(r[:, 1]) == 0.0:
        raise ValueError("degenerate input: a return column is constant")
    mu = r.mean(axis=0)
    eps = r - mu
    cov = np.cov(r, rowvar=False, bias=True)
    h_buf = np.empty((t_obs, 3))

    def neg_loglik(u: np.ndarray) -> float:
        v = transform.to_constrained(u)
        c, a, g = _vector_to_matrices(v)
        if stationarity_radius(a, g) >= _RADIUS_CAP:
            return _PENALTY
        cc = c.T @ c
        ll = _bekk_filter(
            eps, cc[0, 0], cc[0, 1], cc[1, 1],
            a[0, 0], a[1, 0], a[0, 1], a[1, 1],
            g[0, 0], g[1, 0], g[0, 1], g[1, 1],
            cov[0, 0], cov[0, 1], cov[1, 1], h_buf,
        )
        return -ll if math.isfinite(ll) else _PENALTY

    transform = BlockTransform([
        (LogTransform(), 1),
        (IdentityTransform(), 1),
        (LogTransform(), 1),
        (IdentityTransform(), 8),
    ])
    c0 = _lower_factor(0.05 * cov)
    start = np.array([
        c0[0, 0], c0[1, 0], c0[1, 1],
        math.sqrt(0.05), 0.0, 0.0, math.sqrt(0.05),
        math.sqrt(0.90), 0.0, 0.0, math.sqrt(0.90),
    ])
    problem = MleProblem(
        dimension=11,
        objective=neg_loglik,
        transform=transform,
        initial_points=[start],
        scale=float(t_obs),
    )
    res = maximize(problem, settings)

    v = res.params.copy()
    # (A, G) and (-A, -G) blocks are observationally equivalent; report the
    # representative with positive leading diagonal
    if v[3] < 0.0:
        v[3:7] = -v[3:7]
    if v[7] < 0.0:
        v[7:11] = -v[7:11]
    c, a, g = _vector_to_matrices(v)
    params = BekkParams(c=c, a=a, g=g, mu=mu)
    std_errors = {
        label: float(se) for label, se in zip(PARAM_LABELS, res.std_errors)
    }
    stars = {}
    for label, est in zip(PARAM_LABELS, _params_to_vector(params)):
        se = std_errors[label]
        stars[label] = significance_stars(est, se) if math.isfinite(se) and se > 0 else ""
    return BekkFit(
        params=params,
        std_errors=std_errors,
        h_path=bekk_covariance_path(params, r),
        loglik=bekk_loglik(params, r),
        stars=stars,
        converged=res.converged,
        iterations=res.iterations,
    )


@dataclass(frozen=True)
class SpilloverSummary:
    """Direction and size of cross-market volatility spillover for one pair.

    ``g12`` loads lagged volatility of the first market onto the second
    (direction ``i->j``); ``g21`` the reverse.  ``magnitude_pct`` holds
    100*|g| for each direction significant at the 5% level.
    """

    pair: tuple[str, str]
    g21: float
    se_g21: float
    stars_g21: str
    g12: float
    se_g12: float
    stars_g12: str
    direction: str
    magnitude_pct: dict[str, float]


def spillover_summary(
    fit: BekkFit, pair: tuple[str, str] = ("market1", "market2")
) -> SpilloverSummary:
    """Classify spillover direction from the G off-diagonals of a fit."""
    if not fit.converged:
        raise ValueError("spillover summary requires a converged fit")
    g12 = float(fit.params.g[0, 1])
    g21 = float(fit.params.g[1, 0])
    se_g12 = fit.std_errors["g12"]
    se_g21 = fit.std_errors["g21"]
    sig_12 = se_g12 > 0 and abs(g12 / se_g12) >= 1.9600
    sig_21 = se_g21 > 0 and abs(g21 / se_g21) >= 1.9600
    if sig_12 and sig_21:
        direction = "bidirectional"
    elif sig_12:
        direction = "i->j"
    elif sig_21:
        direction = "j->i"
    else:
        direction = "none"
    magnitude = {}
    if sig_12:
        magnitude["i->j"] = 100.0 * abs(g12)
    if sig_21:
        magnitude["j->i"] = 100.0 * abs(g21)
    return SpilloverSummary(
        pair=pair,
        g21=g21,
        se_g21=se_g21,
        stars_g21=fit.stars["g21"],
        g12=g12,
        se_g12=se_g12,
        stars_g12=fit.stars["g12"],
        direction=direction,
        magnitude_pct=magnitude,
    )
