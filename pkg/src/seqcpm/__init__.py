"""Sequential sample-size determination for binary-outcome risk prediction models."""
from .bootstrap import BootstrapResult, corrected_performance, harrell_bootstrap
from .datagen import GeneratorSpec, calibrate, generate
from .fixed_size import FixedSizeInputs, criterion_overall_risk, cstat_to_r2cs, minimum_sample_size
from .metrics import StabilityMatrix, UtilityConfig
from .model_core import Cohort, FittedModel, fit_logistic, linear_predictor, lr_chi2, predict_risk
from .sequential import (
    IncrementRecord,
    LearningCurve,
    SequentialConfig,
    StoppingRule,
    evaluate_rules,
    recruitment_stream,
    run_sequential,
)
from .strategies import StrategySpec, develop

__version__ = "0.1.0"

__all__ = [
    "BootstrapResult", "corrected_performance", "harrell_bootstrap",
    "GeneratorSpec", "calibrate", "generate",
    "FixedSizeInputs", "criterion_overall_risk", "cstat_to_r2cs", "minimum_sample_size",
    "StabilityMatrix", "UtilityConfig",
    "Cohort", "FittedModel", "fit_logistic", "linear_predictor", "lr_chi2", "predict_risk",
    "IncrementRecord", "LearningCurve", "SequentialConfig", "StoppingRule", "evaluate_rules",
    "recruitment_stream", "run_sequential",
    "StrategySpec", "develop",
]
