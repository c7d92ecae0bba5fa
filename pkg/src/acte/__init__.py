"""Age-conditioned treatment effects from game-level panel data.

Meta-learners (S, T, X) over two base regressors (truncated-spline least
squares with fixed effects, honest random forest), with percentile-bootstrap
confidence bands, a synthetic-data simulation lab, and a batch CLI.
"""

from .basis import SplineSpec, truncated_basis
from .dataset import (
    Dataset,
    FixedEffectsEncoding,
    GameRecord,
    PreprocessConfig,
    apply_filters,
    derive_prev_game_fields,
    derive_treatment,
    encode_fixed_effects,
    ingest_csv,
    per100,
    preprocess,
    write_csv,
)
from .inference import (
    BootstrapConfig,
    bootstrap_curve,
    curve_mse,
    percentile_bands,
    replicate_curve_samples,
)
from .learners import (
    DesignMatrix,
    FittedOutcomeModel,
    RegressorSpec,
    RfHyperparams,
    assert_honest,
    fit,
    model_from_dict,
    model_to_dict,
    predict,
)
from .meta import (
    ACEF_CONTROL,
    ACEF_TREATED,
    ACTE,
    CurveEstimate,
    MetaSpec,
    PropensityEstimate,
    acef,
    acte,
    estimate_propensity,
    fit_meta,
    fit_s_learner,
    fit_t_learner,
    fit_x_learner,
    meta_model_from_dict,
    meta_model_to_dict,
    smooth_curve,
)
from .simlab import (
    METHODS,
    ScenarioSpec,
    SimResult,
    SyntheticPanel,
    generate,
    mean_performance,
    method_meta_spec,
    run_study,
    true_tau,
    true_tau_curve,
)

__version__ = "0.1.0"

__all__ = [
    "ACEF_CONTROL",
    "ACEF_TREATED",
    "ACTE",
    "BootstrapConfig",
    "CurveEstimate",
    "Dataset",
    "DesignMatrix",
    "FittedOutcomeModel",
    "FixedEffectsEncoding",
    "GameRecord",
    "METHODS",
    "MetaSpec",
    "PreprocessConfig",
    "PropensityEstimate",
    "RegressorSpec",
    "RfHyperparams",
    "ScenarioSpec",
    "SimResult",
    "SplineSpec",
    "SyntheticPanel",
    "acef",
    "acte",
    "apply_filters",
    "assert_honest",
    "bootstrap_curve",
    "curve_mse",
    "derive_prev_game_fields",
    "derive_treatment",
    "encode_fixed_effects",
    "estimate_propensity",
    "fit",
    "fit_meta",
    "fit_s_learner",
    "fit_t_learner",
    "fit_x_learner",
    "generate",
    "ingest_csv",
    "mean_performance",
    "meta_model_from_dict",
    "meta_model_to_dict",
    "method_meta_spec",
    "model_from_dict",
    "model_to_dict",
    "per100",
    "percentile_bands",
    "predict",
    "preprocess",
    "replicate_curve_samples",
    "run_study",
    "smooth_curve",
    "true_tau",
    "true_tau_curve",
    "truncated_basis",
    "write_csv",
]
