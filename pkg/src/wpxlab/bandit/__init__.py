"""Thompson-sampling multi-objective template ranker."""

from .features import CONTEXT_FEATURE_NAMES, build_features, feature_schema
from .posteriors import (
    GaussianPosterior,
    ModelKind,
    ObjectiveModel,
    blr_update,
    gaussian_prior,
    linear_model,
    predict_mean,
    probit_model,
    probit_update,
    sample_weights,
    thompson_sample_predict,
)
from .ranker import (
    NON_ABANDONMENT,
    OBJECTIVE_ORDER,
    REVENUE,
    SATISFACTION,
    CandidateScore,
    ImpressionRecord,
    ObjectiveStats,
    RankerBundle,
    RewardWeights,
    apply_impression,
    bundle_from_dict,
    bundle_to_dict,
    impression_from_dict,
    impression_to_dict,
    incremental_retrain,
    load_bundle,
    new_bundle,
    read_impressions,
    sample_rows,
    save_bundle,
    scalarize,
    select_template,
    with_noise_variances,
    write_impressions,
)

__all__ = [
    "CONTEXT_FEATURE_NAMES",
    "build_features",
    "feature_schema",
    "GaussianPosterior",
    "ModelKind",
    "ObjectiveModel",
    "blr_update",
    "gaussian_prior",
    "linear_model",
    "predict_mean",
    "probit_model",
    "probit_update",
    "sample_weights",
    "thompson_sample_predict",
    "NON_ABANDONMENT",
    "OBJECTIVE_ORDER",
    "REVENUE",
    "SATISFACTION",
    "CandidateScore",
    "ImpressionRecord",
    "ObjectiveStats",
    "RankerBundle",
    "RewardWeights",
    "apply_impression",
    "bundle_from_dict",
    "bundle_to_dict",
    "impression_from_dict",
    "impression_to_dict",
    "incremental_retrain",
    "load_bundle",
    "new_bundle",
    "read_impressions",
    "sample_rows",
    "save_bundle",
    "scalarize",
    "select_template",
    "with_noise_variances",
    "write_impressions",
]
