"""Ordinal-regression fragility models backed by the C++ engine."""

from ._core import (
    Dataset,
    FragilityError,
    Model,
    __version__,
    catalog,
    closed_form_fragility,
    compare,
    fit_mle,
    link_cdf,
    link_quantile,
    load_csv,
    parallel_check,
    psis_loo,
    sample_posterior,
    simulate,
    surrogate_residuals,
)

__all__ = [
    "Dataset",
    "FragilityError",
    "Model",
    "__version__",
    "catalog",
    "closed_form_fragility",
    "compare",
    "fit_mle",
    "link_cdf",
    "link_quantile",
    "load_csv",
    "parallel_check",
    "psis_loo",
    "sample_posterior",
    "simulate",
    "surrogate_residuals",
]
