"""Bayesian logistic regression for combination dose escalation.

Fits no-interaction, Thall (2003), linear and saturating drug-interaction
models to DLT cohort data with a NUTS-style sampler, and classifies dose
grids under interval-based overdose control.
"""

from blrm._core import (
    CohortRecord,
    ConfigError,
    DrugSpec,
    GaussianPrior,
    IntervalSpec,
    InteractionTerm,
    ModelSpec,
    NotConvergedError,
    ParameterVector,
    PosteriorDraws,
    PriorSpec,
    RunConfig,
    SamplerConfig,
    ScenarioResult,
    ScenarioVariantResult,
    SurfaceRow,
    VariantConfig,
    cartesian_grid,
    classify_pi,
    default_dose_ladder,
    evaluate_grid,
    ewoc_satisfied,
    historical_data,
    interaction_subsets,
    load_cohorts,
    load_config,
    make_model,
    marginal_summary,
    model_logit,
    model_prob,
    parse_config,
    property_matrix,
    property_matrix_ok,
    run_mcmc,
    run_scenario,
    scenario_ids,
    serialize_config,
    standard_priors,
    summarize_point,
    surface_csv,
)

__all__ = [
    "CohortRecord",
    "ConfigError",
    "DrugSpec",
    "GaussianPrior",
    "IntervalSpec",
    "InteractionTerm",
    "ModelSpec",
    "NotConvergedError",
    "ParameterVector",
    "PosteriorDraws",
    "PriorSpec",
    "RunConfig",
    "SamplerConfig",
    "ScenarioResult",
    "ScenarioVariantResult",
    "SurfaceRow",
    "VariantConfig",
    "cartesian_grid",
    "classify_pi",
    "default_dose_ladder",
    "evaluate_grid",
    "ewoc_satisfied",
    "historical_data",
    "interaction_subsets",
    "load_cohorts",
    "load_config",
    "make_model",
    "marginal_summary",
    "model_logit",
    "model_prob",
    "parse_config",
    "property_matrix",
    "property_matrix_ok",
    "run_mcmc",
    "run_scenario",
    "scenario_ids",
    "serialize_config",
    "standard_priors",
    "summarize_point",
    "surface_csv",
]

__version__ = "0.1.0"
