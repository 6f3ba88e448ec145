"""Harrell's bootstrap optimism correction with net-benefit accounting.

Each replicate resamples the development cohort, re-runs the *whole*
development strategy on the resample, and records

* apparent performance of the replicate model in its own resample,
* test performance of the replicate model in the original cohort,
* the replicate model's risks for every original individual,
* NB_All, NB_Model and NB_Max with the replicate risks as the truth proxy.

A replicate whose development fails is redrawn from its own stream, at most
``MAX_ATTEMPTS`` times, so the stability matrix is always ``b x n``.
"""
from __future__ import annotations

import math
from concurrent.futures import Executor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import metrics
from .errors import (
    ConstantLogit,
    FitError,
    TooManyDegenerateReplicates,
)
from .metrics import StabilityMatrix, UtilityConfig
from .model_core import Cohort, FittedModel, predict_risk
from .streams import resample_indices
from .strategies import BOOTSTRAP, StrategySpec, develop

MAX_ATTEMPTS = 5
MAX_FAILURE_FRACTION = 0.10


@dataclass(frozen=True)
class BootstrapResult:
    model: FittedModel
    apparent_c: float
    apparent_slope: float
    optimism_c: float
    optimism_slope: float
    stability: StabilityMatrix
    enb_all: float
    enb_model: float
    enb_max: float
    evpi: float
    replicate_failures: int
    # mean EVPI over the original and replicate bootstrap-shrinkage models
    strategy_evpi: Optional[float] = None

    @property
    def corrected_c(self) -> float:
        return self.apparent_c - self.optimism_c

    @property
    def corrected_slope(self) -> float:
        return self.apparent_slope - self.optimism_slope

    @property
    def reported_evpi(self) -> float:
        return self.evpi if self.strategy_evpi is None else self.strategy_evpi


def corrected_performance(result: BootstrapResult):
    """``(corrected_c, corrected_slope, optimism_c, optimism_slope)``."""
    return result.corrected_c, result.corrected_slope, result.optimism_c, result.optimism_slope


def _performance(risks, y):
    c = metrics.c_statistic(risks, y)
    try:
        slope = metrics.calibration_slope(risks, y)
    except ConstantLogit:
        slope = math.nan
    return c, slope


def _one_replicate(cohort: Cohort, spec: StrategySpec, cfg: UtilityConfig,
                   decision_risks: np.ndarray, rng):
    resample_rng, strategy_rng = rng.spawn(2)
    failures = 0
    for _ in range(MAX_ATTEMPTS):
        boot = cohort.take(resample_indices(resample_rng, cohort.n))
        try:
            model = develop(spec, boot, strategy_rng)
            app = _performance(predict_risk(model, boot.X), boot.y)
            risks = predict_risk(model, cohort.X)
            test = _performance(risks, cohort.y)
        except (FitError, TooManyDegenerateReplicates):
            failures += 1
            continue
        return {
            "risks": risks,
            "apparent": app,
            "test": test,
            "nb": (metrics.nb_all(risks, cfg), metrics.nb_model(decision_risks, risks, cfg),
                   metrics.nb_max(risks, cfg)),
            "inner_evpi": model.inner_evpi,
            "failures": failures,
        }
    raise TooManyDegenerateReplicates(f"replicate failed {MAX_ATTEMPTS} consecutive attempts")


def _replicate_chunk(cohort, spec, cfg, decision_risks, rngs):
    return [_one_replicate(cohort, spec, cfg, decision_risks, r) for r in rngs]


def _chunks(seq, k):
    size = max(1, math.ceil(len(seq) / k))
    return [seq[i:i + size] for i in range(0, len(seq), size)]


def harrell_bootstrap(cohort: Cohort, spec: StrategySpec, b: int, cfg: UtilityConfig = UtilityConfig(),
                      rng=None, *, model: Optional[FittedModel] = None,
                      executor: Optional[Executor] = None, chunks: int = 16) -> BootstrapResult:
    """Run ``b`` bootstrap replicates of the development strategy ``spec``.

    ``rng`` supplies the original-model stream and one child stream per
    replicate (via ``rng.spawn``); results are written to replicate-indexed
    slots so any ``executor`` gives identical output. Pass ``model`` to reuse
    an already developed original model.
    """
    if b < 1:
        raise ValueError("b must be >= 1")
    if rng is None:
        raise ValueError("harrell_bootstrap needs an explicit random generator")
    dev_rng, boot_rng = rng.spawn(2)
    if model is None:
        model = develop(spec, cohort, dev_rng)
    original = predict_risk(model, cohort.X)
    apparent_c, apparent_slope = _performance(original, cohort.y)

    rep_spec = spec.for_replicates()
    rngs = boot_rng.spawn(b)
    if executor is None:
        reps = _replicate_chunk(cohort, rep_spec, cfg, original, rngs)
    else:
        parts = _chunks(rngs, chunks)
        futures = [executor.submit(_replicate_chunk, cohort, rep_spec, cfg, original, part)
                   for part in parts]
        reps = [r for f in futures for r in f.result()]

    failures = sum(r["failures"] for r in reps)
    if failures > MAX_FAILURE_FRACTION * b:
        raise TooManyDegenerateReplicates(f"{failures} failed fits for {b} replicates")

    app = np.array([r["apparent"] for r in reps])
    test = np.array([r["test"] for r in reps])
    optimism = app - test
    optimism_c = float(optimism[:, 0].mean())
    with np.errstate(invalid="ignore"):
        slopes = optimism[:, 1]
        optimism_slope = float(slopes[~np.isnan(slopes)].mean()) if (~np.isnan(slopes)).any() else math.nan

    nb = np.array([r["nb"] for r in reps])
    enb_all, enb_model, enb_max = (float(v) for v in nb.mean(axis=0))

    strategy_evpi = None
    if spec.kind == BOOTSTRAP:
        inner = [model.inner_evpi] + [r["inner_evpi"] for r in reps]
        strategy_evpi = float(np.mean(inner))

    return BootstrapResult(
        model=model,
        apparent_c=apparent_c,
        apparent_slope=apparent_slope,
        optimism_c=optimism_c,
        optimism_slope=optimism_slope,
        stability=StabilityMatrix(original, np.vstack([r["risks"] for r in reps])),
        enb_all=enb_all,
        enb_model=enb_model,
        enb_max=enb_max,
        evpi=metrics.evpi(enb_all, enb_model, enb_max),
        replicate_failures=int(failures),
        strategy_evpi=strategy_evpi,
    )
