"""Random-grid Monte Carlo for the log-Heston model."""

from ._core import (  # noqa: F401
    AdmissibilityError,
    ConfigError,
    HestonParams,
    NumericFailure,
    __version__,
    char_fn,
    cir_moments,
    estimate,
    european_price,
    preset_names,
    regress_slope,
    run_experiment,
    sample_kappa,
    tune_sample_sizes,
    validate_params,
)
