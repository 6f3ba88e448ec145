"""Performance, stability and clinical-utility statistics.

Percentiles use linear interpolation between order statistics at position
``q * (B - 1)`` (zero based), i.e. numpy's ``"linear"`` method. Risks exactly
at the decision threshold are classified as *treat*.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logit
from scipy.stats import rankdata

from .errors import ConstantLogit, DegenerateOutcome, DimensionMismatch
from .model_core import fit_irls

PERCENTILES = (2.5, 97.5)
LOGIT_CLIP = 1e-12


@dataclass(frozen=True)
class UtilityConfig:
    z: float = 0.10

    def __post_init__(self):
        if not 0.0 < self.z < 1.0:
            raise ValueError("decision threshold must lie in (0, 1)")


@dataclass(frozen=True)
class StabilityMatrix:
    original_risks: np.ndarray
    boot_risks: np.ndarray

    def __post_init__(self):
        orig = np.asarray(self.original_risks, dtype=float)
        boot = np.atleast_2d(np.asarray(self.boot_risks, dtype=float))
        if boot.shape[1] != orig.shape[0]:
            raise DimensionMismatch("boot_risks must have one column per individual")
        object.__setattr__(self, "original_risks", orig)
        object.__setattr__(self, "boot_risks", boot)

    @property
    def b(self) -> int:
        return self.boot_risks.shape[0]

    @property
    def n(self) -> int:
        return self.boot_risks.shape[1]


@dataclass(frozen=True)
class Distribution:
    """A per-individual statistic with its mean and 2.5th/97.5th percentiles."""

    values: np.ndarray
    mean: float
    p2_5: float
    p97_5: float

    @classmethod
    def of(cls, values) -> "Distribution":
        values = np.asarray(values, dtype=float)
        lo, hi = np.percentile(values, PERCENTILES, method="linear")
        return cls(values, float(values.mean()), float(lo), float(hi))


def c_statistic(risks, y) -> float:
    """Concordance probability, ties in risk counted as one half."""
    risks = np.asarray(risks, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(risks) != len(y):
        raise DimensionMismatch("risks and y differ in length")
    n1 = int(y.sum())
    n0 = len(y) - n1
    if n1 == 0 or n0 == 0:
        raise DegenerateOutcome("c-statistic needs events and non-events")
    ranks = rankdata(risks, method="average")
    u = ranks[y == 1].sum() - n1 * (n1 + 1) / 2.0
    return float(u / (n1 * n0))


def calibration_slope(risks, y) -> float:
    """Slope of the logistic recalibration of ``y`` on ``logit(risks)``."""
    lp = logit(np.clip(np.asarray(risks, dtype=float), LOGIT_CLIP, 1 - LOGIT_CLIP))
    if np.var(lp) < 1e-12:
        raise ConstantLogit("risks carry no spread on the logit scale")
    _, slope, _ = fit_irls(lp.reshape(-1, 1), y)
    return float(slope[0])


def ui_bounds(matrix: StabilityMatrix):
    """Per-individual 2.5th and 97.5th percentiles of the bootstrap risks."""
    lo, hi = np.percentile(matrix.boot_risks, PERCENTILES, axis=0, method="linear")
    return lo, hi


def ui_width(matrix: StabilityMatrix) -> Distribution:
    lo, hi = ui_bounds(matrix)
    return Distribution.of(hi - lo)


def mean_ui_width(matrix: StabilityMatrix) -> float:
    return ui_width(matrix).mean


def delta_stat(matrix: StabilityMatrix) -> Distribution:
    """Largest distance from each original risk to either end of its interval."""
    lo, hi = ui_bounds(matrix)
    orig = matrix.original_risks
    return Distribution.of(np.maximum(orig - lo, hi - orig))


def misclassification_prob(matrix: StabilityMatrix, cfg: UtilityConfig = UtilityConfig()) -> Distribution:
    treat = matrix.original_risks >= cfg.z
    boot_treat = matrix.boot_risks >= cfg.z
    flipped = np.where(treat, ~boot_treat, boot_treat)
    return Distribution.of(flipped.mean(axis=0))


def _treatment_gain(truth, z):
    return truth - (1.0 - truth) * z / (1.0 - z)


def _risks(*vectors):
    out = [np.asarray(v, dtype=float) for v in vectors]
    if any(len(v) != len(out[0]) for v in out):
        raise DimensionMismatch("risk vectors differ in length")
    return out


def nb_all(truth_risks, cfg: UtilityConfig = UtilityConfig()) -> float:
    (truth,) = _risks(truth_risks)
    return float(np.mean(_treatment_gain(truth, cfg.z)))


def nb_model(decision_risks, truth_risks, cfg: UtilityConfig = UtilityConfig()) -> float:
    decision, truth = _risks(decision_risks, truth_risks)
    return float(np.mean((decision >= cfg.z) * _treatment_gain(truth, cfg.z)))


def nb_max(truth_risks, cfg: UtilityConfig = UtilityConfig()) -> float:
    (truth,) = _risks(truth_risks)
    return float(np.mean((truth >= cfg.z) * _treatment_gain(truth, cfg.z)))


EVPI_CLAMP = 1e-12


def evpi(enb_all: float, enb_model: float, enb_max: float) -> float:
    """Expected value of perfect information from expected net benefits.

    Negative results down to ``-1e-12`` are rounding noise and become 0;
    anything lower means the inputs are not expected net benefits of the
    same bootstrap and raises ``ValueError``.
    """
    value = enb_max - max(0.0, enb_model, enb_all)
    if value < 0.0:
        if value < -EVPI_CLAMP:
            raise ValueError(f"ENB_Max below the best alternative by {-value:.3g}")
        return 0.0
    return float(value)
