"""Maximum-likelihood logistic regression by iteratively reweighted least squares.

Everything downstream (the development strategies, the calibration slope, the
bootstrap engine) goes through :func:`fit_irls`, so its error behaviour is the
contract the rest of the package relies on:

* ``DegenerateOutcome`` when the outcome has a single class,
* ``SingularDesign`` when the design matrix is rank deficient,
* ``QuasiSeparation`` when fitted risks reach 1e-10 of 0 or 1,
* ``NonConvergence`` when the iteration cap is hit.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy.special import expit, logit

from .errors import (
    DataError,
    DegenerateOutcome,
    DimensionMismatch,
    NonConvergence,
    QuasiSeparation,
    SingularDesign,
)

SCORE_TOL = 1e-8
MAX_ITER = 100
SEPARATION_EPS = 1e-10
LOGLIK_CLIP = 1e-12


@dataclass(frozen=True)
class Cohort:
    """Recruitment-ordered rows of numeric predictors and a binary outcome."""

    ids: np.ndarray
    order: np.ndarray
    y: np.ndarray
    X: np.ndarray
    predictors: tuple = field(default=())

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1) if X.size else X.reshape(len(self.y), 0)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", np.asarray(self.y, dtype=float))
        object.__setattr__(self, "order", np.asarray(self.order, dtype=np.int64))
        object.__setattr__(self, "ids", np.asarray(self.ids))
        if not self.predictors:
            names = tuple(f"x{j + 1}" for j in range(X.shape[1]))
            object.__setattr__(self, "predictors", names)
        n = len(self.y)
        if X.shape[0] != n or len(self.order) != n or len(self.ids) != n:
            raise DimensionMismatch("ids, order, y and X must have the same row count")
        if len(self.predictors) != X.shape[1]:
            raise DimensionMismatch("predictor names do not match the columns of X")

    @classmethod
    def from_arrays(cls, X, y, predictors: Sequence[str] = ()) -> "Cohort":
        y = np.asarray(y, dtype=float)
        n = len(y)
        return cls(
            ids=np.array([str(i + 1) for i in range(n)]),
            order=np.arange(1, n + 1),
            y=y,
            X=np.asarray(X, dtype=float).reshape(n, -1),
            predictors=tuple(predictors),
        )

    @property
    def n(self) -> int:
        return len(self.y)

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def validate(self) -> None:
        n = self.n
        if not np.array_equal(np.sort(self.order), np.arange(1, n + 1)):
            raise DataError("order values must be a permutation of 1..N")
        if np.isnan(self.X).any() or np.isnan(self.y).any():
            raise DataError("cohort contains missing values")
        if not np.isin(self.y, (0.0, 1.0)).all():
            raise DataError("outcome must be 0 or 1")

    def take(self, idx) -> "Cohort":
        """Rows ``idx`` (possibly repeated) as a new cohort ordered as given."""
        idx = np.asarray(idx)
        return Cohort(
            ids=self.ids[idx],
            order=np.arange(1, len(idx) + 1),
            y=self.y[idx],
            X=self.X[idx],
            predictors=self.predictors,
        )

    def by_order(self) -> "Cohort":
        return self.take(np.argsort(self.order, kind="stable"))

    def first(self, n: int) -> "Cohort":
        """The first ``n`` recruits."""
        idx = np.argsort(self.order, kind="stable")[:n]
        return self.take(idx)

    def without_predictors(self) -> "Cohort":
        return Cohort(self.ids, self.order, self.y, np.empty((self.n, 0)), ())


@dataclass(frozen=True)
class FittedModel:
    intercept: float
    coefficients: np.ndarray
    strategy_tag: str = "unpenalised"
    shrinkage_factor: Optional[float] = None
    penalty: Optional[float] = None
    converged: bool = True
    iterations: int = 0
    # EVPI from the inner bootstrap of bootstrap-shrinkage development
    inner_evpi: Optional[float] = None

    @property
    def p(self) -> int:
        return len(self.coefficients)

    def with_(self, **changes) -> "FittedModel":
        return replace(self, **changes)


def _check_outcome(y: np.ndarray) -> None:
    events = y.sum()
    if events == 0 or events == len(y):
        raise DegenerateOutcome(f"outcome has a single class ({int(events)} events in {len(y)})")


def _deviance(y, eta):
    p = np.clip(expit(eta), LOGLIK_CLIP, 1 - LOGLIK_CLIP)
    return -2.0 * np.sum(y * np.log(p) + (1 - y) * np.log1p(-p))


def fit_irls(X, y, offset=None, *, tol: float = SCORE_TOL, max_iter: int = MAX_ITER):
    """Fit ``logit P(y=1) = a + X b + offset``.

    Returns ``(intercept, coefficients, iterations)``.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(y)
    if X.ndim != 2 or X.shape[0] != n:
        raise DimensionMismatch("X must be an n x p matrix matching y")
    off = np.zeros(n) if offset is None else np.asarray(offset, dtype=float)
    if off.shape != (n,):
        raise DimensionMismatch("offset must have length n")
    _check_outcome(y)

    D = np.column_stack([np.ones(n), X])
    if np.linalg.matrix_rank(D) < D.shape[1]:
        raise SingularDesign("design matrix is rank deficient")

    beta = np.zeros(D.shape[1])
    beta[0] = logit(y.mean())
    eta = D @ beta + off
    dev = _deviance(y, eta)
    for it in range(1, max_iter + 1):
        p = expit(eta)
        score = D.T @ (y - p)
        if np.max(np.abs(score)) < tol:
            if np.any((p < SEPARATION_EPS) | (p > 1 - SEPARATION_EPS)):
                raise QuasiSeparation("fitted risks within 1e-10 of 0 or 1")
            return float(beta[0]), beta[1:].copy(), it - 1
        w = p * (1 - p)
        H = (D * w[:, None]).T @ D
        try:
            step = np.linalg.solve(H, score)
        except np.linalg.LinAlgError as exc:
            raise SingularDesign("weighted normal equations are singular") from exc
        if not np.all(np.isfinite(step)):
            raise SingularDesign("weighted normal equations are singular")
        # step halving keeps the deviance non-increasing
        for _ in range(30):
            new_beta = beta + step
            new_eta = D @ new_beta + off
            new_dev = _deviance(y, new_eta)
            if new_dev <= dev + 1e-12 * max(1.0, abs(dev)):
                break
            step = step / 2
        beta, eta, dev = new_beta, new_eta, new_dev

    p = expit(eta)
    if np.any((p < SEPARATION_EPS) | (p > 1 - SEPARATION_EPS)):
        raise QuasiSeparation("fitted risks within 1e-10 of 0 or 1")
    raise NonConvergence(f"IRLS did not converge in {max_iter} iterations")


def fit_logistic(cohort: Cohort, offset=None) -> FittedModel:
    a, b, iters = fit_irls(cohort.X, cohort.y, offset)
    return FittedModel(intercept=a, coefficients=b, iterations=iters)


def linear_predictor(model: FittedModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1) if model.p else X.reshape(-1, 0)
    if X.shape[1] != model.p:
        raise DimensionMismatch(f"X has {X.shape[1]} columns, model has {model.p} coefficients")
    return model.intercept + X @ model.coefficients


def predict_risk(model: FittedModel, X) -> np.ndarray:
    return expit(linear_predictor(model, X))


def log_likelihood(risks, y) -> float:
    p = np.clip(np.asarray(risks, dtype=float), LOGLIK_CLIP, 1 - LOGLIK_CLIP)
    y = np.asarray(y, dtype=float)
    return float(np.sum(y * np.log(p) + (1 - y) * np.log1p(-p)))


def lr_chi2(model: FittedModel, cohort: Cohort) -> float:
    """Likelihood-ratio chi-square of ``model`` against the intercept-only fit."""
    null = fit_logistic(cohort.without_predictors())
    ll1 = log_likelihood(predict_risk(model, cohort.X), cohort.y)
    ll0 = log_likelihood(predict_risk(null, cohort.X[:, :0]), cohort.y)
    return max(0.0, 2.0 * (ll1 - ll0))
