"""Confidence intervals and regions for pseudo-true parameters under
model misspecification: score-pivot inversion, the plug-in sandwich, its
hc1..hc5 small-sample corrections, and a reproducible Monte Carlo coverage
engine."""

from .estimators import (
    CORRECTION_KINDS,
    MomentMatrices,
    QuantilePolicy,
    corrected_cov,
    correction_bundle,
    leverage,
    moment_matrices,
    sandwich_cov,
)
from .inference import (
    METHODS,
    IntervalResult,
    PivotStat,
    RegionResult,
    boundary_gap,
    confidence_interval,
    covers,
    critical_value,
    pivot_interval,
    pivot_stat,
    quantile,
    region_boundary,
    wald_interval,
)
from .models import (
    Dataset,
    ParamPoint,
    WorkingModel,
    get_model,
    mle_fit,
    score_sum,
)
from .simulate import (
    SCENARIO_KINDS,
    CoverageRecord,
    Scenario,
    SimConfig,
    gen_dataset,
    get_scenario,
    population_study,
    run_coverage,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "CORRECTION_KINDS",
    "METHODS",
    "SCENARIO_KINDS",
    "CoverageRecord",
    "Dataset",
    "IntervalResult",
    "MomentMatrices",
    "ParamPoint",
    "PivotStat",
    "QuantilePolicy",
    "RegionResult",
    "Scenario",
    "SimConfig",
    "WorkingModel",
    "boundary_gap",
    "confidence_interval",
    "corrected_cov",
    "correction_bundle",
    "covers",
    "critical_value",
    "gen_dataset",
    "get_model",
    "get_scenario",
    "leverage",
    "mle_fit",
    "moment_matrices",
    "pivot_interval",
    "pivot_stat",
    "population_study",
    "quantile",
    "region_boundary",
    "run_coverage",
    "sandwich_cov",
    "score_sum",
    "wald_interval",
]
