"""Robust model-based design of experiments."""

from ._core import (
    ConfigError,
    DomainError,
    Error,
    UnderdeterminedData,
    a_criterion,
    chi2_quantile,
    design_nominal,
    design_robust,
    design_two_stage,
    estimate,
    evaluate,
    fim,
    models,
    preset_config,
    presets,
    run_cli,
    sensitivity,
)

__all__ = [
    "ConfigError",
    "DomainError",
    "Error",
    "UnderdeterminedData",
    "a_criterion",
    "chi2_quantile",
    "design_nominal",
    "design_robust",
    "design_two_stage",
    "estimate",
    "evaluate",
    "fim",
    "models",
    "preset_config",
    "presets",
    "run_cli",
    "sensitivity",
]
