"""Sequential recruitment replay, learning curves and stopping rules."""
from __future__ import annotations

import logging
import math
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import metrics
from .bootstrap import harrell_bootstrap
from .errors import CohortTooSmall, FitError, TooManyDegenerateReplicates
from .metrics import UtilityConfig
from .model_core import Cohort
from .streams import stage_generator
from .strategies import StrategySpec

log = logging.getLogger(__name__)

METRICS = ("corrected_slope", "optimism_c", "mean_ui_width", "mean_delta", "evpi", "mean_misclass")
COMPARATORS = (">=", "<=")


@dataclass(frozen=True)
class StoppingRule:
    metric: str
    comparator: str
    threshold: float
    k: int = 2

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ValueError(f"unknown metric {self.metric!r}; expected one of {METRICS}")
        if self.comparator not in COMPARATORS:
            raise ValueError(f"comparator must be one of {COMPARATORS}")
        if self.k < 1:
            raise ValueError("k must be >= 1")

    @property
    def name(self) -> str:
        return f"{self.metric}{self.comparator}{self.threshold:g}"

    def holds(self, value: float) -> bool:
        if value is None or math.isnan(value):
            return False
        return value >= self.threshold if self.comparator == ">=" else value <= self.threshold

    @classmethod
    def parse(cls, text: str, default_k: int = 2) -> "StoppingRule":
        """Parse ``"corrected_slope >= 0.9"`` with an optional trailing ``k=3``."""
        m = re.fullmatch(r"\s*(\w+)\s*(>=|<=)\s*([-+0-9.eE]+)\s*(?:k\s*=\s*(\d+))?\s*", text)
        if not m:
            raise ValueError(f"cannot parse stopping rule {text!r}")
        k = int(m.group(4)) if m.group(4) else default_k
        return cls(m.group(1), m.group(2), float(m.group(3)), k)

    def __str__(self):
        return f"{self.metric} {self.comparator} {self.threshold:g} k={self.k}"


# Figure 2 of the method: population-level, individual-level and utility rules
DEFAULT_RULES = (
    StoppingRule("corrected_slope", ">=", 0.9),
    StoppingRule("optimism_c", "<=", 0.02),
    StoppingRule("mean_ui_width", "<=", 0.1),
    StoppingRule("mean_delta", "<=", 0.05),
    StoppingRule("evpi", "<=", 0.001),
    StoppingRule("mean_misclass", "<=", 0.1),
)


@dataclass(frozen=True)
class SequentialConfig:
    n_initial: int = 100
    n_new: int = 100
    n_max: int = 3000
    b: int = 200
    spec: StrategySpec = StrategySpec()
    utility: UtilityConfig = UtilityConfig()
    rules: Tuple[StoppingRule, ...] = DEFAULT_RULES
    seed: int = 0
    workers: int = 1
    stop_early: bool = False

    def __post_init__(self):
        if self.n_initial < 1 or self.n_new < 1:
            raise ValueError("n_initial and n_new must be positive")
        if self.n_initial > self.n_max:
            raise ValueError("n_initial must not exceed n_max")
        if self.b < 2:
            raise ValueError("b must be >= 2")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        object.__setattr__(self, "rules", tuple(self.rules))


@dataclass(frozen=True)
class IncrementRecord:
    n: int
    usable: bool = True
    apparent_c: float = math.nan
    optimism_c: float = math.nan
    corrected_c: float = math.nan
    corrected_slope: float = math.nan
    mean_ui_width: float = math.nan
    ui_width_p2_5: float = math.nan
    ui_width_p97_5: float = math.nan
    mean_delta: float = math.nan
    delta_p2_5: float = math.nan
    delta_p97_5: float = math.nan
    evpi: float = math.nan
    mean_misclass: float = math.nan
    misclass_p2_5: float = math.nan
    misclass_p97_5: float = math.nan
    passes: Tuple[Optional[bool], ...] = ()
    replicate_failures: int = 0
    note: str = ""

    def value(self, metric: str) -> float:
        return getattr(self, metric)


STAT_FIELDS = (
    "apparent_c", "optimism_c", "corrected_c", "corrected_slope",
    "mean_ui_width", "ui_width_p2_5", "ui_width_p97_5",
    "mean_delta", "delta_p2_5", "delta_p97_5",
    "evpi", "mean_misclass", "misclass_p2_5", "misclass_p97_5",
)


@dataclass(frozen=True)
class LearningCurve:
    records: Tuple[IncrementRecord, ...]
    rules: Tuple[StoppingRule, ...]
    n_stop_per_rule: Dict[str, Optional[int]]
    n_stop_overall: Optional[int]
    config: Optional[SequentialConfig] = None

    @property
    def ns(self) -> List[int]:
        return [r.n for r in self.records]


def recruitment_stream(cohort: Cohort, seed: int) -> Cohort:
    """Copy of ``cohort`` with a fresh uniformly random recruitment order."""
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))
    return replace(cohort, order=rng.permutation(cohort.n) + 1)


def _pass_flags(record: IncrementRecord, rules: Sequence[StoppingRule]):
    if not record.usable:
        return tuple(None for _ in rules)
    return tuple(rule.holds(record.value(rule.metric)) for rule in rules)


def _first_run(flags: Sequence[Optional[bool]], k: int) -> Optional[int]:
    run = 0
    for t, ok in enumerate(flags):
        run = run + 1 if ok else 0
        if run == k:
            return t - k + 1
    return None


def evaluate_rules(records: Sequence[IncrementRecord], rules: Sequence[StoppingRule]):
    """Per-rule and overall stopping sample sizes.

    A rule stops at the first increment of its earliest run of ``k``
    consecutive passes. The overall stop is the first increment from which
    every rule passes for its own ``k`` increments. Unusable increments pass
    nothing and so break any run in progress.
    """
    flags = [_pass_flags(r, rules) for r in records]
    per_rule = {}
    for j, rule in enumerate(rules):
        t = _first_run([f[j] for f in flags], rule.k)
        per_rule[rule.name] = None if t is None else records[t].n
    overall = None
    if rules:
        for t in range(len(records)):
            if all(t + rule.k <= len(records) and all(flags[s][j] for s in range(t, t + rule.k))
                   for j, rule in enumerate(rules)):
                overall = records[t].n
                break
    return per_rule, overall


def increment_record(n: int, result, cfg: UtilityConfig) -> IncrementRecord:
    width = metrics.ui_width(result.stability)
    delta = metrics.delta_stat(result.stability)
    mis = metrics.misclassification_prob(result.stability, cfg)
    return IncrementRecord(
        n=n,
        apparent_c=result.apparent_c,
        optimism_c=result.optimism_c,
        corrected_c=result.corrected_c,
        corrected_slope=result.corrected_slope,
        mean_ui_width=width.mean,
        ui_width_p2_5=width.p2_5,
        ui_width_p97_5=width.p97_5,
        mean_delta=delta.mean,
        delta_p2_5=delta.p2_5,
        delta_p97_5=delta.p97_5,
        evpi=result.reported_evpi,
        mean_misclass=mis.mean,
        misclass_p2_5=mis.p2_5,
        misclass_p97_5=mis.p97_5,
        replicate_failures=result.replicate_failures,
    )


def stage_sizes(cfg: SequentialConfig, available: int) -> List[int]:
    top = min(cfg.n_max, available)
    return list(range(cfg.n_initial, top + 1, cfg.n_new))


def run_stage(cohort: Cohort, n: int, cfg: SequentialConfig, executor=None) -> IncrementRecord:
    """Develop and bootstrap the first ``n`` recruits."""
    sub = cohort.first(n)
    try:
        result = harrell_bootstrap(sub, cfg.spec, cfg.b, cfg.utility, stage_generator(cfg.seed, n),
                                   executor=executor)
    except (FitError, TooManyDegenerateReplicates) as exc:
        log.warning("n=%d unusable: %s", n, exc)
        return IncrementRecord(n=n, usable=False, note=type(exc).__name__)
    return increment_record(n, result, cfg.utility)


def run_sequential(cohort: Cohort, cfg: SequentialConfig) -> LearningCurve:
    if cohort.n < cfg.n_initial:
        raise CohortTooSmall(f"cohort has {cohort.n} rows, n_initial is {cfg.n_initial}")
    records: List[IncrementRecord] = []
    executor = ProcessPoolExecutor(max_workers=cfg.workers) if cfg.workers > 1 else None
    try:
        for n in stage_sizes(cfg, cohort.n):
            rec = run_stage(cohort, n, cfg, executor)
            records.append(replace(rec, passes=_pass_flags(rec, cfg.rules)))
            log.info("n=%d corrected_slope=%.4g mean_ui_width=%.4g", n, rec.corrected_slope,
                     rec.mean_ui_width)
            if cfg.stop_early and evaluate_rules(records, cfg.rules)[1] is not None:
                break
    finally:
        if executor is not None:
            executor.shutdown()
    per_rule, overall = evaluate_rules(records, cfg.rules)
    return LearningCurve(tuple(records), cfg.rules, per_rule, overall, cfg)
