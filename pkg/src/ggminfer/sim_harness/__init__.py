"""Synthetic models, replicated experiments and their CSV output."""

from .experiments import (
    DEFAULT_ENTRIES,
    DEFAULT_MULTIPLIERS,
    SCOPES,
    EntrySummary,
    EstimationResult,
    ExperimentConfig,
    Failure,
    LossResult,
    NormalityResult,
    ScopeStats,
    SupportReport,
    draw_sample,
    ks_normal,
    latent_model_for,
    run_coverage_experiment,
    run_estimation_experiment,
    run_norm_loss_experiment,
    run_normality_diagnostic,
    run_roc_sweep,
    run_support_experiment,
    truth_for,
)
from .models import (
    BlockModelSpec,
    LatentModel,
    LatentModelSpec,
    build_block_precision,
    build_latent_model,
    capped_l1_complexity,
    max_degree,
    norm_losses,
    observed_precision,
    true_edges,
)

__all__ = [
    "BlockModelSpec", "LatentModel", "LatentModelSpec", "build_block_precision",
    "build_latent_model", "capped_l1_complexity", "max_degree", "norm_losses",
    "observed_precision", "true_edges", "DEFAULT_ENTRIES", "DEFAULT_MULTIPLIERS",
    "SCOPES", "EntrySummary", "EstimationResult", "ExperimentConfig", "Failure",
    "LossResult", "NormalityResult", "ScopeStats", "SupportReport", "draw_sample",
    "ks_normal", "latent_model_for", "run_coverage_experiment", "run_estimation_experiment",
    "run_norm_loss_experiment", "run_normality_diagnostic", "run_roc_sweep",
    "run_support_experiment", "truth_for",
]
