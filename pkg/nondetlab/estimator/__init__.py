"""Single-run estimation of nondeterministic variation."""

from nondetlab.estimator.noise import NoiseScale, NoiseSource, as_noise_scale, calibrate_noise
from nondetlab.estimator.predict import Prediction, predict_range, predict_std, predict_tokens
from nondetlab.estimator.range_factor import RangeFactorTable, default_table, range_factor, range_factor_mc
from nondetlab.estimator.validate import ALL_TOKENS, ErrorReport, RegimeError, relative_error, validate_estimate

__all__ = [
    "ALL_TOKENS",
    "ErrorReport",
    "NoiseScale",
    "NoiseSource",
    "Prediction",
    "RangeFactorTable",
    "RegimeError",
    "as_noise_scale",
    "calibrate_noise",
    "default_table",
    "predict_range",
    "predict_std",
    "predict_tokens",
    "range_factor",
    "range_factor_mc",
    "relative_error",
    "validate_estimate",
]
