"""Bayesian covariate-based intensity estimation for spatial point processes."""

from ._core import (
    Config,
    ConfigError,
    DataError,
    NumericError,
    fit,
    forward_dwt,
    ground_truth,
    inverse_dwt,
    kernel_estimate,
    l1_norm,
    laplace_whitening,
    run_fit,
    simulate,
)

__all__ = [
    "Config",
    "ConfigError",
    "DataError",
    "NumericError",
    "fit",
    "forward_dwt",
    "ground_truth",
    "inverse_dwt",
    "kernel_estimate",
    "l1_norm",
    "laplace_whitening",
    "run_fit",
    "simulate",
]
