"""Synthetic binary-outcome cohorts with a target prevalence and c-statistic.

Predictors are standard normal (optionally correlated) and every slope gets
the same weight, so the true linear predictor is ``N(0, sigma^2)``. The
population prevalence and c-statistic of ``expit(alpha + LP)`` are computed
by quadrature on a fine grid; ``sigma`` and ``alpha`` are then solved with
Brent's method so that both hit their targets.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.special import expit, logit
from scipy.stats import norm

from .errors import RootBracketFailure
from .model_core import Cohort

_GRID = np.linspace(-10.0, 10.0, 20001)
_WEIGHTS = norm.pdf(_GRID) * (_GRID[1] - _GRID[0])
_WEIGHTS /= _WEIGHTS.sum()


@dataclass(frozen=True)
class GeneratorSpec:
    n: int
    target_prevalence: float = 0.173
    target_c: float = 0.67
    p: int = 6
    seed: int = 0
    intercept: Optional[float] = None
    coefficients: Optional[tuple] = None
    correlation: Optional[tuple] = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be positive")
        if not 0.0 < self.target_prevalence < 1.0:
            raise ValueError("target_prevalence must lie in (0, 1)")
        if not 0.5 <= self.target_c < 1.0:
            raise ValueError("target_c must lie in [0.5, 1)")
        if (self.intercept is None) != (self.coefficients is None):
            raise ValueError("give both intercept and coefficients, or neither")
        if self.coefficients is not None and len(self.coefficients) != self.p:
            raise ValueError("coefficients must have length p")

    def correlation_matrix(self) -> np.ndarray:
        if self.correlation is None:
            return np.eye(self.p)
        R = np.asarray(self.correlation, dtype=float)
        if R.shape != (self.p, self.p):
            raise ValueError("correlation must be p x p")
        return R


def population_prevalence(alpha: float, sigma: float) -> float:
    return float(_WEIGHTS @ expit(alpha + sigma * _GRID))


def population_c(alpha: float, sigma: float) -> float:
    """P(LP of a random event > LP of a random non-event) under the true model."""
    r = expit(alpha + sigma * _GRID)
    ev = _WEIGHTS * r
    non = _WEIGHTS * (1.0 - r)
    below = np.cumsum(non) - non
    # grid points are distinct LP values, so ties only occur within a cell
    return float((ev @ (below + 0.5 * non)) / (ev.sum() * non.sum()))


def _intercept_for(prevalence: float, sigma: float) -> float:
    f = lambda a: population_prevalence(a, sigma) - prevalence
    lo, hi = logit(prevalence) - 10 * sigma - 10, logit(prevalence) + 10 * sigma + 10
    try:
        return brentq(f, lo, hi, xtol=1e-13)
    except ValueError as exc:
        raise RootBracketFailure("cannot bracket the intercept") from exc


def _sigma_for(c: float, prevalence: float) -> float:
    f = lambda s: population_c(_intercept_for(prevalence, s), s) - c
    try:
        return brentq(f, 1e-6, 8.0, xtol=1e-12)
    except ValueError as exc:
        raise RootBracketFailure(f"no linear-predictor spread gives c = {c}") from exc


def calibrate(spec: GeneratorSpec):
    """Intercept and slopes meeting the target prevalence and c-statistic."""
    if spec.coefficients is not None:
        return float(spec.intercept), np.asarray(spec.coefficients, dtype=float)
    if spec.target_c == 0.5:
        return float(logit(spec.target_prevalence)), np.zeros(spec.p)
    sigma = _sigma_for(spec.target_c, spec.target_prevalence)
    R = spec.correlation_matrix()
    ones = np.ones(spec.p)
    beta = ones * sigma / np.sqrt(ones @ R @ ones)
    return _intercept_for(spec.target_prevalence, sigma), beta


def generator(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))


def generate(spec: GeneratorSpec, predictors: Sequence[str] = ()) -> Cohort:
    alpha, beta = calibrate(spec)
    rng = generator(spec.seed)
    Z = rng.standard_normal((spec.n, spec.p))
    R = spec.correlation_matrix()
    X = Z if spec.correlation is None else Z @ np.linalg.cholesky(R).T
    risk = expit(alpha + X @ beta)
    y = (rng.random(spec.n) < risk).astype(float)
    order = rng.permutation(spec.n) + 1
    return Cohort(
        ids=np.array([str(i + 1) for i in range(spec.n)]),
        order=order,
        y=y,
        X=X,
        predictors=tuple(predictors),
    )
