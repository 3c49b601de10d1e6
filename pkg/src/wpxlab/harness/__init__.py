"""Experiment harness: offline model evaluation, the multi-arm comparison
loop, and the command-line front end."""

from .evalmetrics import auc, offline_eval, rmse
from .experiment import (
    ArmConfig,
    ExperimentConfig,
    ExperimentReport,
    LiftRow,
    METRIC_NAMES,
    SATISFACTION_CTR,
    SATISFACTION_DVWPX,
    SATISFACTION_MODES,
    SATISFACTION_NONE,
    ab_compare,
    default_experiment_config,
    estimate_ctr_region_weights,
    estimate_dvwpx_region_weights,
    experiment_config_from_dict,
    experiment_config_to_dict,
    load_report,
    render_report,
    report_from_dict,
    report_json,
    report_to_dict,
    run_experiment,
    save_report,
    world_config_from_dict,
    world_config_to_dict,
    write_per_day_csv,
)

__all__ = [
    "auc",
    "offline_eval",
    "rmse",
    "ArmConfig",
    "ExperimentConfig",
    "ExperimentReport",
    "LiftRow",
    "METRIC_NAMES",
    "SATISFACTION_CTR",
    "SATISFACTION_DVWPX",
    "SATISFACTION_MODES",
    "SATISFACTION_NONE",
    "ab_compare",
    "default_experiment_config",
    "estimate_ctr_region_weights",
    "estimate_dvwpx_region_weights",
    "experiment_config_from_dict",
    "experiment_config_to_dict",
    "load_report",
    "render_report",
    "report_from_dict",
    "report_json",
    "report_to_dict",
    "run_experiment",
    "save_report",
    "world_config_from_dict",
    "world_config_to_dict",
    "write_per_day_csv",
]
