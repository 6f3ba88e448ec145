"""Model development strategies.

Each strategy is a deterministic function of ``(cohort, rng)``:

* ``unpenalised`` - maximum likelihood with every predictor forced in;
* ``heuristic_shrinkage`` - slopes multiplied by ``(chi2 - df) / chi2``;
* ``bootstrap_shrinkage`` - slopes multiplied by the bootstrap-corrected
  calibration slope;
* ``lasso`` - L1 penalty chosen by stratified K-fold cross-validation of the
  mean squared error between held-out outcomes and predicted risks.

Shrinkage factors are clamped to [0, 1] and the intercept is always refitted
with the shrunk linear predictor as an offset.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np
from scipy.special import expit, logit

from ._lasso import lasso_path
from .errors import (
    DegenerateOutcome,
    NonConvergence,
    SingularDesign,
    UnsplittableCohort,
    ZeroChi2Warning,
)
from .model_core import Cohort, FittedModel, fit_irls, fit_logistic, lr_chi2

UNPENALISED = "unpenalised"
HEURISTIC = "heuristic_shrinkage"
BOOTSTRAP = "bootstrap_shrinkage"
LASSO = "lasso"
KINDS = (UNPENALISED, HEURISTIC, BOOTSTRAP, LASSO)

N_LAMBDA = 100
LAMBDA_MIN_RATIO = 1e-4
LASSO_TOL = 1e-10
FOLD_RETRIES = 10


@dataclass(frozen=True)
class StrategySpec:
    kind: str = UNPENALISED
    inner_bootstrap_b: int = 200
    # inner B used when the strategy is re-run inside an outer bootstrap
    replicate_inner_b: Optional[int] = None
    cv_folds: int = 10
    lambda_grid: Optional[tuple] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown strategy {self.kind!r}; expected one of {KINDS}")
        if self.inner_bootstrap_b < 1:
            raise ValueError("inner_bootstrap_b must be >= 1")
        if self.replicate_inner_b is not None and self.replicate_inner_b < 1:
            raise ValueError("replicate_inner_b must be >= 1")
        if self.cv_folds < 2:
            raise ValueError("cv_folds must be >= 2")
        if self.lambda_grid is not None:
            grid = tuple(float(v) for v in self.lambda_grid)
            if any(v < 0 for v in grid) or any(a <= b for a, b in zip(grid, grid[1:])):
                raise ValueError("lambda_grid must be non-negative and strictly descending")
            object.__setattr__(self, "lambda_grid", grid)

    def for_replicates(self) -> "StrategySpec":
        if self.replicate_inner_b is None:
            return self
        return replace(self, inner_bootstrap_b=self.replicate_inner_b)


def develop(spec: StrategySpec, cohort: Cohort, rng) -> FittedModel:
    if spec.kind == UNPENALISED:
        return fit_logistic(cohort).with_(strategy_tag=UNPENALISED)
    if spec.kind == HEURISTIC:
        return heuristic_shrinkage_develop(cohort)
    if spec.kind == BOOTSTRAP:
        return bootstrap_shrinkage_develop(cohort, spec.inner_bootstrap_b, rng)
    return lasso_cv_develop(cohort, spec.cv_folds, spec.lambda_grid, rng)


def heuristic_shrinkage_factor(chi2: float, df: int) -> float:
    if df < 1:
        raise ValueError("df must be >= 1")
    if chi2 < 1e-12:
        warnings.warn("model chi-square is zero; shrinkage factor set to 0", ZeroChi2Warning)
        return 0.0
    return float(min(1.0, max(0.0, (chi2 - df) / chi2)))


def apply_uniform_shrinkage(model: FittedModel, s: float, cohort: Cohort) -> FittedModel:
    """Multiply the slopes by ``s`` and refit the intercept against the shrunk predictor."""
    coefs = s * model.coefficients
    offset = cohort.X @ coefs
    intercept, _, iters = fit_irls(cohort.X[:, :0], cohort.y, offset)
    return model.with_(intercept=intercept, coefficients=coefs, shrinkage_factor=float(s),
                       iterations=model.iterations + iters)


def heuristic_shrinkage_develop(cohort: Cohort) -> FittedModel:
    model = fit_logistic(cohort)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ZeroChi2Warning)
        h = heuristic_shrinkage_factor(lr_chi2(model, cohort), max(cohort.p, 1))
    return apply_uniform_shrinkage(model, h, cohort).with_(strategy_tag=HEURISTIC)


def bootstrap_shrinkage_develop(cohort: Cohort, inner_b: int, rng) -> FittedModel:
    from .bootstrap import harrell_bootstrap

    model = fit_logistic(cohort)
    inner = harrell_bootstrap(cohort, StrategySpec(UNPENALISED), inner_b, rng=rng,
                              model=model.with_(strategy_tag=UNPENALISED))
    s = float(np.clip(inner.corrected_slope, 0.0, 1.0))
    shrunk = apply_uniform_shrinkage(model, s, cohort)
    return shrunk.with_(strategy_tag=BOOTSTRAP, inner_evpi=inner.evpi)


# --- LASSO ---------------------------------------------------------------


def _standardise(X):
    mean = X.mean(axis=0)
    sd = X.std(axis=0)
    if np.any(sd <= 0):
        raise SingularDesign("a predictor is constant; cannot standardise")
    return (X - mean) / sd, mean, sd


def lambda_max(cohort: Cohort) -> float:
    """Smallest penalty at which every slope is zero."""
    Xs, _, _ = _standardise(cohort.X)
    return float(np.max(np.abs(Xs.T @ (cohort.y - cohort.y.mean()))) / cohort.n)


def default_lambda_grid(cohort: Cohort, n_lambda: int = N_LAMBDA,
                        min_ratio: float = LAMBDA_MIN_RATIO) -> tuple:
    top = lambda_max(cohort)
    return tuple(np.geomspace(top, top * min_ratio, n_lambda))


def _path(Xs, y, lambdas):
    lambdas = np.asarray(lambdas, dtype=float)
    b0 = float(logit(y.mean()))
    b0s, betas, ok = lasso_path(Xs, y, lambdas, b0, np.zeros(Xs.shape[1]),
                                LASSO_TOL, 200, 10_000)
    if not ok.all():
        raise NonConvergence("coordinate descent did not converge")
    return b0s, betas


def _to_original_scale(b0, beta_std, mean, sd):
    beta = beta_std / sd
    return float(b0 - np.dot(beta, mean)), beta


def lasso_fit(cohort: Cohort, lam: float) -> FittedModel:
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    y = cohort.y
    if y.sum() in (0, len(y)):
        raise DegenerateOutcome("outcome has a single class")
    Xs, mean, sd = _standardise(cohort.X)
    b0s, betas = _path(Xs, y, [lam])
    intercept, coefs = _to_original_scale(b0s[0], betas[0], mean, sd)
    return FittedModel(intercept, coefs, strategy_tag=LASSO, penalty=float(lam))


def stratified_folds(y, k: int, rng) -> np.ndarray:
    """Fold label per row, dealing each outcome class round-robin after shuffling."""
    y = np.asarray(y)
    folds = np.empty(len(y), dtype=np.int64)
    for cls in (0.0, 1.0):
        idx = np.flatnonzero(y == cls)
        if len(idx) < k:
            raise UnsplittableCohort(f"only {len(idx)} rows with outcome {int(cls)} for {k} folds")
        folds[idx[rng.permutation(len(idx))]] = np.arange(len(idx)) % k
    return folds


def _cv_mse(cohort: Cohort, folds: np.ndarray, k: int, grid: np.ndarray) -> np.ndarray:
    sse = np.zeros(len(grid))
    for f in range(k):
        held = folds == f
        train_X, train_y = cohort.X[~held], cohort.y[~held]
        if train_y.sum() in (0, len(train_y)):
            raise UnsplittableCohort("a training fold lacks an outcome class")
        Xs, mean, sd = _standardise(train_X)
        b0s, betas = _path(Xs, train_y, grid)
        beta = betas / sd
        intercepts = b0s - beta @ mean
        risk = expit(intercepts[None, :] + cohort.X[held] @ beta.T)
        sse += ((cohort.y[held][:, None] - risk) ** 2).sum(axis=0)
    return sse / cohort.n


def lasso_cv_develop(cohort: Cohort, folds: int = 10, lambda_grid: Optional[Sequence[float]] = None,
                     rng=None) -> FittedModel:
    if rng is None:
        raise ValueError("lasso_cv_develop needs an explicit random generator")
    grid = np.asarray(lambda_grid if lambda_grid is not None else default_lambda_grid(cohort))
    labels = None
    for _ in range(FOLD_RETRIES):
        labels = stratified_folds(cohort.y, folds, rng)
        train_ok = all(0 < cohort.y[labels != f].sum() < (labels != f).sum() for f in range(folds))
        if train_ok:
            break
    else:
        raise UnsplittableCohort("could not form valid stratified folds")
    try:
        mse = _cv_mse(cohort, labels, folds, grid)
    except SingularDesign as exc:
        raise UnsplittableCohort("a training fold has a constant predictor") from exc
    best = float(grid[int(np.argmin(mse))])
    return lasso_fit(cohort, best)


__all__ = [
    "KINDS", "StrategySpec", "develop", "heuristic_shrinkage_factor", "apply_uniform_shrinkage",
    "heuristic_shrinkage_develop", "bootstrap_shrinkage_develop", "lasso_fit", "lasso_cv_develop",
    "lambda_max", "default_lambda_grid", "stratified_folds",
]
