"""Refraction correction of through-water photogrammetric point clouds."""

from ._core import (
    ConfigError,
    DegenerateDesign,
    InputError,
    Model,
    NumericalError,
    SampleSet,
    VersionError,
    correct_cloud,
    extract_section,
    filter_samples,
    fit_least_squares,
    fit_svr,
    fitting_score,
    load_model,
    m3c2_distance,
    pair,
    read_cloud,
    simulate,
    split_samples,
    write_cloud,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DegenerateDesign",
    "InputError",
    "Model",
    "NumericalError",
    "SampleSet",
    "VersionError",
    "correct_cloud",
    "extract_section",
    "filter_samples",
    "fit_least_squares",
    "fit_svr",
    "fitting_score",
    "load_model",
    "m3c2_distance",
    "pair",
    "read_cloud",
    "simulate",
    "split_samples",
    "write_cloud",
]
