"""A-priori minimum sample size for a binary-outcome prediction model.

Three criteria are evaluated and the largest wins:

1. expected uniform shrinkage of at least ``S`` (default 0.9),
2. an absolute difference of at most ``optimism_target`` between apparent and
   adjusted Nagelkerke R^2,
3. the overall outcome risk estimated within ``risk_margin`` (95% CI
   half-width).

When only an anticipated c-statistic is known, the Cox-Snell R^2 is obtained
by simulation: ``mc_draws`` linear predictors are drawn as ``N(0, 1)`` for
non-events and ``N(mu, 1)`` for events, with ``mu = sqrt(2) * Phi^-1(c)`` and
exactly ``round(prevalence * mc_draws)`` events listed first; one vector of
standard normals (PCG64, seeded) is shared by both groups. A logistic
regression of outcome on that linear predictor gives the likelihood ratio
``LR`` and ``R2_CS = 1 - exp(-LR / mc_draws)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.stats import norm

from .errors import InvalidR2
from .model_core import fit_irls, log_likelihood

MC_DRAWS = 1_000_000
# seed of the pinned build; reproduces the reference outputs 342/60 and 994/172
MC_SEED = 19


@dataclass(frozen=True)
class FixedSizeInputs:
    prevalence: float
    c_statistic: Optional[float] = None
    parameters: int = 6
    shrinkage_target: float = 0.9
    optimism_target: float = 0.05
    risk_margin: float = 0.05
    r2_cs: Optional[float] = None
    mc_draws: int = MC_DRAWS
    seed: int = MC_SEED

    def __post_init__(self):
        if not 0.0 < self.prevalence < 1.0:
            raise ValueError("prevalence must lie in (0, 1)")
        if self.parameters < 1:
            raise ValueError("parameters must be positive")
        if self.r2_cs is None:
            if self.c_statistic is None:
                raise ValueError("give either c_statistic or r2_cs")
            if not 0.5 <= self.c_statistic < 1.0:
                raise ValueError("c_statistic must lie in [0.5, 1)")


@dataclass(frozen=True)
class FixedSizeResult:
    n_total: int
    n_events: int
    n_shrinkage: int
    n_optimism: int
    n_overall_risk: int
    r2_cs: float
    max_r2_cs: float
    shrinkage: float

    def rows(self):
        return [
            ("Criterion 1 (shrinkage)", self.n_shrinkage),
            ("Criterion 2 (optimism in R2)", self.n_optimism),
            ("Criterion 3 (overall risk)", self.n_overall_risk),
            ("Final", self.n_total),
        ]


def _ceil(x: float) -> int:
    # guard against ceil(384.00000000000006) style float noise
    return int(math.ceil(x - 1e-9))


def criterion_overall_risk(prevalence: float, margin: float = 0.05) -> int:
    """Smallest n whose 95% CI for the overall risk has half-width <= margin."""
    if not 0.0 < prevalence < 1.0:
        raise ValueError("prevalence must lie in (0, 1)")
    return _ceil(1.96 ** 2 * prevalence * (1 - prevalence) / margin ** 2)


def max_r2_cs(prevalence: float) -> float:
    return 1.0 - (prevalence ** prevalence * (1 - prevalence) ** (1 - prevalence)) ** 2


def cstat_to_r2cs(c_statistic: float, prevalence: float, mc_draws: int = MC_DRAWS,
                  seed: int = MC_SEED) -> float:
    rng = np.random.default_rng(seed)
    events = int(round(prevalence * mc_draws))
    y = np.zeros(mc_draws)
    y[:events] = 1.0
    mu = math.sqrt(2.0) * norm.ppf(c_statistic)
    lp = rng.standard_normal(mc_draws) + mu * y
    a, b, _ = fit_irls(lp.reshape(-1, 1), y, tol=1e-6)
    ll1 = log_likelihood(1.0 / (1.0 + np.exp(-(a + b[0] * lp))), y)
    phi = events / mc_draws
    ll0 = events * math.log(phi) + (mc_draws - events) * math.log1p(-phi)
    lr = max(0.0, 2.0 * (ll1 - ll0))
    return float(1.0 - math.exp(-lr / mc_draws))


def _shrinkage_n(parameters: int, r2: float, s: float) -> float:
    if r2 >= s:
        raise InvalidR2(f"R2_CS {r2:.4g} is not below the shrinkage target {s:.4g}")
    if r2 <= 0:
        return math.inf
    return parameters / ((s - 1) * math.log(1 - r2 / s))


def minimum_sample_size(inputs: FixedSizeInputs) -> FixedSizeResult:
    phi = inputs.prevalence
    r2 = inputs.r2_cs
    if r2 is None:
        r2 = cstat_to_r2cs(inputs.c_statistic, phi, inputs.mc_draws, inputs.seed)
    top = max_r2_cs(phi)
    if r2 >= top:
        raise InvalidR2(f"R2_CS {r2:.4g} exceeds its maximum {top:.4g}")

    s1 = inputs.shrinkage_target
    n1 = _shrinkage_n(inputs.parameters, r2, s1)
    s2 = r2 / (r2 + inputs.optimism_target * top)
    n2 = _shrinkage_n(inputs.parameters, r2, s2)
    n3 = criterion_overall_risk(phi, inputs.risk_margin)

    sizes = [_ceil(v) if math.isfinite(v) else math.inf for v in (n1, n2)] + [n3]
    n_total = max(sizes)
    if not math.isfinite(n_total):
        raise InvalidR2("R2_CS of zero implies no finite sample size")
    return FixedSizeResult(
        n_total=int(n_total),
        n_events=_ceil(n_total * phi),
        n_shrinkage=sizes[0],
        n_optimism=sizes[1],
        n_overall_risk=n3,
        r2_cs=r2,
        max_r2_cs=top,
        shrinkage=max(s1, s2),
    )
