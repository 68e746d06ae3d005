"""Seeded data-generating processes for every model in the package.

Determinism contract: draws come from PCG64 streams spawned per column via
``numpy.random.SeedSequence(seed).spawn``, uniforms are 53-bit integers
offset by half an ulp (so they lie strictly inside (0, 1)), and Gaussian or
Student-t variates are produced by inverse CDF.  The same spec therefore
reproduces bitwise-identical output across runs and platforms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date, timedelta
from typing import Mapping

import numpy as np
from scipy.signal import lfilter
from scipy.special import ndtri
from scipy.stats import chi2 as chi2_dist
from scipy.stats import t as t_dist

from .bekk import BekkParams
from .garch import GarchParams
from .market_data import ReturnMatrix

__all__ = ["SimSpec", "Moments", "simulate", "sample_moments", "MODELS"]

MODELS = ("iid_gaussian", "random_walk", "ar1", "garch11", "bekk11", "dcc_garch")

_EPOCH = date(2000, 1, 1)
_TWO53 = float(2**53)


@dataclass(frozen=True)
class SimSpec:
    """A simulation request: model, parameters, length, dimension, seed."""

    model: str
    params: object | None
    T: int
    K: int = 1
    seed: int = 0
    burn_in: int = 500

    def __post_init__(self) -> None:
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}; choose from {MODELS}")
        if self.T < 1:
            raise ValueError("T must be >= 1")
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if self.burn_in < 0:
            raise ValueError("burn_in must be >= 0")
        if self.model == "bekk11" and self.K != 2:
            raise ValueError("bekk11 simulation is bivariate (K=2)")
        if self.model == "dcc_garch" and self.K < 2:
            raise ValueError("dcc_garch simulation requires K >= 2")


@dataclass(frozen=True)
class Moments:
    """Per-column sample moments plus the cross correlation matrix."""

    mean: np.ndarray
    variance: np.ndarray
    excess_kurtosis: np.ndarray
    correlation: np.ndarray


def _uniforms(seq: np.random.SeedSequence, n: int) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(seq))
    return (rng.integers(0, 2**53, size=n, dtype=np.uint64) + 0.5) / _TWO53


def _gaussians(seq: np.random.SeedSequence, n: int) -> np.ndarray:
    return ndtri(_uniforms(seq, n))


def _t_scaled(seq: np.random.SeedSequence, n: int, nu: float) -> np.ndarray:
    """Unit-variance Student-t draws via inverse CDF."""
    return t_dist.ppf(_uniforms(seq, n), df=nu) * math.sqrt((nu - 2.0) / nu)


def _get(params: Mapping | None, key: str, default=None):
    if params is None:
        return default
    value = params.get(key, default)
    return value


def _as_garch_params(obj) -> GarchParams:
    if isinstance(obj, GarchParams):
        return obj
    if isinstance(obj, Mapping):
        return GarchParams(
            mu=float(obj.get("mu", 0.0)),
            omega=float(obj["omega"]),
            alpha=float(obj["alpha"]),
            beta=float(obj["beta"]),
        )
    raise ValueError(f"cannot interpret {type(obj).__name__} as GARCH parameters")


def _as_bekk_params(obj) -> BekkParams:
    if isinstance(obj, BekkParams):
        return obj
    if isinstance(obj, Mapping):
        c = np.array([[float(obj["c11"]), 0.0], [float(obj["c12"]), float(obj["c22"])]])
        a = np.array([[float(obj["a11"]), float(obj["a12"])],
                      [float(obj["a21"]), float(obj["a22"])]])
        g = np.array([[float(obj["g11"]), float(obj["g12"])],
                      [float(obj["g21"]), float(obj["g22"])]])
        mu = np.array([float(obj.get("mu1", 0.0)), float(obj.get("mu2", 0.0))])
        return BekkParams(c=c, a=a, g=g, mu=mu)
    raise ValueError(f"cannot interpret {type(obj).__name__} as BEKK parameters")


def _garch11_column(p: GarchParams, z: np.ndarray) -> np.ndarray:
    n = z.size
    r = np.empty(n)
    h = p.unconditional_variance
    for t in range(n):
        eps = math.sqrt(h) * z[t]
        r[t] = p.mu + eps
        h = p.omega + p.alpha * eps * eps + p.beta * h
    return r


def _simulate_bekk(spec: SimSpec, seqs: list[np.random.SeedSequence]) -> np.ndarray:
    params = _as_bekk_params(spec.params)
    nu = _get(spec.params if isinstance(spec.params, Mapping) else None, "nu")
    total = spec.T + spec.burn_in
    z = np.column_stack([_gaussians(s, total) for s in seqs[:2]])
    if nu is not None:
        nu = float(nu)
        w = chi2_dist.ppf(_uniforms(seqs[2], total), df=nu)
        z = z * np.sqrt((nu - 2.0) / w)[:, None]
    cc = params.intercept()
    a, g = params.a, params.g
    m = np.kron(a.T, a.T) + np.kron(g.T, g.T)
    h_bar = np.linalg.solve(np.eye(4) - m, cc.flatten(order="F")).reshape(
        (2, 2), order="F"
    )
    h = 0.5 * (h_bar + h_bar.T)
    out = np.empty((total, 2))
    for t in range(total):
        l11 = math.sqrt(h[0, 0])
        l21 = h[0, 1] / l11
        l22 = math.sqrt(max(h[1, 1] - l21 * l21, 0.0))
        e1 = l11 * z[t, 0]
        e2 = l21 * z[t, 0] + l22 * z[t, 1]
        out[t, 0] = params.mu[0] + e1
        out[t, 1] = params.mu[1] + e2
        eps = np.array([e1, e2])
        h = cc + a.T @ np.outer(eps, eps) @ a + g.T @ h @ g
    return out[spec.burn_in :]


def _simulate_dcc(spec: SimSpec, seqs: list[np.random.SeedSequence]) -> np.ndarray:
    params = spec.params
    if not isinstance(params, Mapping):
        raise ValueError("dcc_garch params must be a mapping")
    garch = params.get("garch", {"omega": 0.05, "alpha": 0.05, "beta": 0.90})
    if isinstance(garch, (GarchParams, Mapping)):
        stage1 = [_as_garch_params(garch)] * spec.K
    else:
        stage1 = [_as_garch_params(gp) for gp in garch]
        if len(stage1) != spec.K:
            raise ValueError(f"need {spec.K} per-column GARCH parameter sets")
    alpha = float(params["alpha"])
    beta = float(params["beta"])
    if alpha < 0 or beta < 0 or alpha + beta >= 1:
        raise ValueError("dcc alpha/beta must be >= 0 with alpha + beta < 1")
    if "qbar" in params:
        qbar = np.asarray(params["qbar"], dtype=float)
    else:
        rho = float(params.get("rho", 0.0))
        qbar = np.full((spec.K, spec.K), rho)
        np.fill_diagonal(qbar, 1.0)
    if qbar.shape != (spec.K, spec.K):
        raise ValueError(f"qbar must be {spec.K}x{spec.K}")
    nu = params.get("nu")

    total = spec.T + spec.burn_in
    z = np.column_stack([_gaussians(s, total) for s in seqs[: spec.K]])
    if nu is not None:
        nu = float(nu)
        w = chi2_dist.ppf(_uniforms(seqs[spec.K], total), df=nu)
        z = z * np.sqrt((nu - 2.0) / w)[:, None]

    h = np.array([gp.unconditional_variance for gp in stage1])
    omega = np.array([gp.omega for gp in stage1])
    a_g = np.array([gp.alpha for gp in stage1])
    b_g = np.array([gp.beta for gp in stage1])
    mu = np.array([gp.mu for gp in stage1])
    q = qbar.copy()
    out = np.empty((total, spec.K))
    for t in range(total):
        d = np.sqrt(np.diag(q))
        r_corr = q / np.outer(d, d)
        chol = np.linalg.cholesky(r_corr)
        eta = chol @ z[t]
        eps = np.sqrt(h) * eta
        out[t] = mu + eps
        h = omega + a_g * eps * eps + b_g * h
        q = (1.0 - alpha - beta) * qbar + alpha * np.outer(eta, eta) + beta * q
    return out[spec.burn_in :]


def simulate(spec: SimSpec) -> ReturnMatrix:
    """Generate a seeded sample path; deterministic for a fixed spec."""
    seqs = np.random.SeedSequence(spec.seed & (2**64 - 1)).spawn(spec.K + 1)
    total = spec.T + spec.burn_in
    model = spec.model
    mapping = spec.params if isinstance(spec.params, Mapping) else None

    if model == "iid_gaussian":
        sigma = float(_get(mapping, "sigma", 1.0))
        mu = float(_get(mapping, "mu", 0.0))
        values = np.column_stack(
            [mu + sigma * _gaussians(s, total) for s in seqs[: spec.K]]
        )[spec.burn_in :]
    elif model == "random_walk":
        sigma = float(_get(mapping, "sigma", 1.0))
        values = np.column_stack(
            [np.cumsum(sigma * _gaussians(s, total)) for s in seqs[: spec.K]]
        )[spec.burn_in :]
    elif model == "ar1":
        phi = float(_get(mapping, "phi", 0.5))
        sigma = float(_get(mapping, "sigma", 1.0))
        if abs(phi) >= 1.0:
            raise ValueError(f"ar1 requires |phi| < 1, got {phi}")
        cols = []
        for s in seqs[: spec.K]:
            e = sigma * _gaussians(s, total)
            cols.append(lfilter([1.0], [1.0, -phi], e))
        values = np.column_stack(cols)[spec.burn_in :]
    elif model == "garch11":
        gp = _as_garch_params(spec.params)
        nu = _get(mapping, "nu")
        cols = []
        for s in seqs[: spec.K]:
            if nu is not None:
                z = _t_scaled(s, total, float(nu))
            else:
                z = _gaussians(s, total)
            cols.append(_garch11_column(gp, z))
        values = np.column_stack(cols)[spec.burn_in :]
    elif model == "bekk11":
        values = _simulate_bekk(spec, seqs)
    elif model == "dcc_garch":
        values = _simulate_dcc(spec, seqs)
    else:  # pragma: no cover - guarded by SimSpec
        raise ValueError(f"unknown model {model!r}")

    dates = tuple(_EPOCH + timedelta(days=int(i)) for i in range(spec.T))
    markets = tuple(f"s{k + 1}" for k in range(spec.K))
    return ReturnMatrix(dates=dates, markets=markets, values=values)


def sample_moments(returns) -> Moments:
    """Unbiased mean/variance, excess kurtosis, and Pearson correlations."""
    if isinstance(returns, ReturnMatrix):
        x = returns.values
    else:
        x = np.asarray(returns, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
    t_obs = x.shape[0]
    if t_obs < 4:
        raise ValueError(f"need at least 4 observations, got {t_obs}")
    if np.any(np.ptp(x, axis=0) == 0.0):
        raise ValueError("constant column: kurtosis undefined")
    mean = x.mean(axis=0)
    variance = x.var(axis=0, ddof=1)
    centered = x - mean
    m2 = np.mean(centered**2, axis=0)
    m4 = np.mean(centered**4, axis=0)
    kurte = m4 / (m2 * m2) - 3.0
    if x.shape[1] == 1:
        corr = np.ones((1, 1))
    else:
        corr = np.corrcoef(x, rowvar=False)
    return Moments(mean=mean, variance=variance, excess_kurtosis=kurte, correlation=corr)
