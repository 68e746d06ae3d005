"""Shared constrained maximum-likelihood engine.

Estimators hand over a negative log-likelihood defined on an unconstrained
vector, together with a bijection between that vector and the constrained
parameter space (log maps for positive parameters, scaled logistic maps for
sum constraints).  A BFGS search runs from a deterministic set of starting
points; standard errors come from the inverse numerical Hessian of the
negative log-likelihood (observed information), mapped to the constrained
space through the transform Jacobian.

Likelihoods should set ``MleProblem.scale`` to the sample size so the
gradient tolerance applies to the per-observation objective; reported
``neg_loglik`` and standard errors always refer to the unscaled objective.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit, logit

__all__ = [
    "OptimizationError",
    "Transform",
    "IdentityTransform",
    "LogTransform",
    "BoundedTransform",
    "StationaryPairTransform",
    "BlockTransform",
    "MleSettings",
    "MleProblem",
    "MleResult",
    "maximize",
    "numerical_gradient",
    "numerical_hessian",
    "significance_stars",
]

_PENALTY = 1e12


class OptimizationError(RuntimeError):
    """Raised when a maximization cannot even be started."""


class Transform:
    """Bijection between unconstrained R^n and a constrained parameter set."""

    def to_constrained(self, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def to_unconstrained(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class IdentityTransform(Transform):
    def to_constrained(self, u: np.ndarray) -> np.ndarray:
        return np.asarray(u, dtype=float)

    def to_unconstrained(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=float)


class LogTransform(Transform):
    """Componentwise positivity: x = exp(u)."""

    def to_constrained(self, u: np.ndarray) -> np.ndarray:
        return np.exp(np.asarray(u, dtype=float))

    def to_unconstrained(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if np.any(x <= 0.0):
            raise ValueError("LogTransform requires strictly positive values")
        return np.log(x)


class BoundedTransform(Transform):
    """Open interval (lo, hi) via a scaled logistic map."""

    def __init__(self, lo: float, hi: float) -> None:
        if not lo < hi:
            raise ValueError("require lo < hi")
        self.lo = float(lo)
        self.hi = float(hi)

    def to_constrained(self, u: np.ndarray) -> np.ndarray:
        return self.lo + (self.hi - self.lo) * expit(np.asarray(u, dtype=float))

    def to_unconstrained(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if np.any(x <= self.lo) or np.any(x >= self.hi):
            raise ValueError(f"values must lie strictly inside ({self.lo}, {self.hi})")
        return logit((x - self.lo) / (self.hi - self.lo))


class StationaryPairTransform(Transform):
    """Pairs (a, b) with a > 0, b > 0, a + b < 1.

    The first coordinate maps to the total persistence a + b through a
    logistic, the second to the share a / (a + b).
    """

    def to_constrained(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        total = expit(u[0])
        share = expit(u[1])
        return np.array([total * share, total * (1.0 - share)])

    def to_unconstrained(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        a, b = float(x[0]), float(x[1])
        total = a + b
        if a <= 0.0 or b <= 0.0 or total >= 1.0:
            raise ValueError("require a > 0, b > 0, a + b < 1 (strictly interior)")
        return np.array([logit(total), logit(a / total)])


class BlockTransform(Transform):
    """Apply independent transforms to consecutive slices of the vector."""

    def __init__(self, parts: Sequence[tuple[Transform, int]]) -> None:
        self.parts = list(parts)
        self.dimension = sum(size for _, size in self.parts)

    def to_constrained(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        out = np.empty(self.dimension)
        pos = 0
        for tf, size in self.parts:
            out[pos : pos + size] = tf.to_constrained(u[pos : pos + size])
            pos += size
        return out

    def to_unconstrained(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.empty(self.dimension)
        pos = 0
        for tf, size in self.parts:
            out[pos : pos + size] = tf.to_unconstrained(x[pos : pos + size])
            pos += size
        return out


@dataclass(frozen=True)
class MleSettings:
    """Search controls; the defaults suit all estimators in this package."""

    tolerance: float = 1e-7
    max_iterations: int = 2000
    restarts: int = 5
    seed: int = 1729
    jitter: float = 0.3
    gradient_step: float = 1e-6
    hessian_step: float = 1e-4


@dataclass
class MleProblem:
    """A maximization task: objective on unconstrained space plus transform.

    ``objective`` maps an unconstrained vector to the negative
    log-likelihood; ``initial_points`` are constrained-space starts;
    ``scale`` divides the objective during the search (use the sample size).
    """

    dimension: int
    objective: Callable[[np.ndarray], float]
    transform: Transform
    initial_points: list[np.ndarray]
    scale: float = 1.0


@dataclass
class MleResult:
    params: np.ndarray
    neg_loglik: float
    std_errors: np.ndarray
    converged: bool
    iterations: int
    gradient_norm: float


def numerical_gradient(
    f: Callable[[np.ndarray], float], x: np.ndarray, step: float | np.ndarray = 1e-6
) -> np.ndarray:
    """Central-difference gradient; error O(step^2) on smooth functions."""
    x = np.asarray(x, dtype=float)
    h = np.broadcast_to(np.asarray(step, dtype=float), x.shape)
    grad = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h[i]
        fp, fm = f(x + e), f(x - e)
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise OptimizationError(f"non-finite evaluation in gradient stencil at index {i}")
        grad[i] = (fp - fm) / (2.0 * h[i])
    return grad


def numerical_hessian(
    f: Callable[[np.ndarray], float], x: np.ndarray, step: float | np.ndarray = 1e-4
) -> np.ndarray:
    """Central-difference Hessian (symmetrized)."""
    x = np.asarray(x, dtype=float)
    n = x.size
    h = np.broadcast_to(np.asarray(step, dtype=float), x.shape)
    hess = np.empty((n, n))
    f0 = f(x)
    if not np.isfinite(f0):
        raise OptimizationError("non-finite evaluation at Hessian center")
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = h[i]
        fpp = f(x + ei)
        fmm = f(x - ei)
        if not (np.isfinite(fpp) and np.isfinite(fmm)):
            raise OptimizationError(f"non-finite evaluation in Hessian stencil at index {i}")
        hess[i, i] = (fpp - 2.0 * f0 + fmm) / (h[i] * h[i])
        for j in range(i + 1, n):
            ej = np.zeros(n)
            ej[j] = h[j]
            fpq = f(x + ei + ej)
            fpm = f(x + ei - ej)
            fmp = f(x - ei + ej)
            fmq = f(x - ei - ej)
            vals = (fpq, fpm, fmp, fmq)
            if not all(np.isfinite(v) for v in vals):
                raise OptimizationError(
                    f"non-finite evaluation in Hessian stencil at indices ({i}, {j})"
                )
            hess[i, j] = hess[j, i] = (fpq - fpm - fmp + fmq) / (4.0 * h[i] * h[j])
    return hess


def _transform_jacobian(tf: Transform, u: np.ndarray, step: float) -> np.ndarray:
    """d constrained / d unconstrained at u, by central differences."""
    u = np.asarray(u, dtype=float)
    h = step * np.maximum(1.0, np.abs(u))
    x0 = np.asarray(tf.to_constrained(u), dtype=float)
    jac = np.empty((x0.size, u.size))
    for i in range(u.size):
        e = np.zeros_like(u)
        e[i] = h[i]
        jac[:, i] = (tf.to_constrained(u + e) - tf.to_constrained(u - e)) / (2.0 * h[i])
    return jac


def maximize(problem: MleProblem, settings: MleSettings | None = None) -> MleResult:
    """Minimize the negative log-likelihood from all starts, keep the best.

    Restarts are deterministic jitters of the supplied initial points, so a
    fixed seed reproduces the search exactly.  Non-convergence is reported
    via ``converged=False``, never silently.
    """
    settings = settings or MleSettings()
    if not problem.initial_points:
        raise OptimizationError("at least one initial point is required")
    if problem.scale <= 0.0:
        raise OptimizationError("scale must be positive")
    tf = problem.transform
    scale = float(problem.scale)

    def f_scaled(u: np.ndarray) -> float:
        v = problem.objective(u) / scale
        return v if np.isfinite(v) else _PENALTY

    def grad(u: np.ndarray) -> np.ndarray:
        h = settings.gradient_step * np.maximum(1.0, np.abs(u))
        return numerical_gradient(f_scaled, u, h)

    base_starts = [
        np.asarray(tf.to_unconstrained(np.asarray(p, dtype=float)), dtype=float)
        for p in problem.initial_points
    ]
    for u0 in base_starts:
        if u0.shape != (problem.dimension,):
            raise OptimizationError(
                f"initial point of dimension {u0.size}, expected {problem.dimension}"
            )
    if not any(np.isfinite(problem.objective(u0)) for u0 in base_starts):
        raise OptimizationError("objective is non-finite at every initial point")

    rng = np.random.default_rng(settings.seed)
    starts = list(base_starts)
    for r in range(settings.restarts):
        base = base_starts[r % len(base_starts)]
        jitter = settings.jitter * np.maximum(1.0, np.abs(base))
        starts.append(base + jitter * rng.standard_normal(base.size))

    best = None
    for u0 in starts:
        if not np.isfinite(problem.objective(u0)):
            continue
        res = minimize(
            f_scaled,
            u0,
            jac=grad,
            method="BFGS",
            options={"gtol": settings.tolerance, "maxiter": settings.max_iterations},
        )
        if best is None or res.fun < best.fun:
            best = res
    if best is None:
        raise OptimizationError("no feasible start")

    u_opt = np.asarray(best.x, dtype=float)
    g = grad(u_opt)
    gradient_norm = float(np.max(np.abs(g)))
    converged = bool(np.isfinite(gradient_norm) and gradient_norm < settings.tolerance)
    params = np.asarray(tf.to_constrained(u_opt), dtype=float)
    neg_loglik = float(best.fun) * scale

    h_steps = settings.hessian_step * np.maximum(1.0, np.abs(u_opt))
    std_errors = np.full(params.shape, np.nan)
    try:
        hess = numerical_hessian(problem.objective, u_opt, h_steps)
        cov_u = np.linalg.inv(hess)
        jac = _transform_jacobian(tf, u_opt, settings.gradient_step)
        cov_x = jac @ cov_u @ jac.T
        diag = np.diag(cov_x)
        std_errors = np.where(diag > 0.0, np.sqrt(np.maximum(diag, 0.0)), np.nan)
    except (np.linalg.LinAlgError, OptimizationError):
        pass

    return MleResult(
        params=params,
        neg_loglik=neg_loglik,
        std_errors=std_errors,
        converged=converged,
        iterations=int(best.nit),
        gradient_norm=gradient_norm,
    )


def significance_stars(estimate: float, std_error: float) -> str:
    """Two-sided z-test code: *** 0.1%, ** 1%, * 5%, . 10%, blank otherwise."""
    if not std_error > 0.0:
        raise ValueError(f"std_error must be positive, got {std_error}")
    z = abs(estimate / std_error)
    if z >= 3.2905:
        return "***"
    if z >= 2.5758:
        return "**"
    if z >= 1.9600:
        return "*"
    if z >= 1.6449:
        return "."
    return ""
