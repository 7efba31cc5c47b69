"""Risk-ratio direction bias under within-cluster susceptible-infective contagion."""

from ._rrbias import (
    ConfigError,
    EpidemicParams,
    Error,
    NotApplicableError,
    NumericalError,
    ProgressError,
    SizeLimitError,
    UndefinedError,
    __version__,
    calibrate_T,
    classify_direction,
    direction_bias_condition,
    exact_risk_ratio,
    expected_infection_probs,
    expected_rr_exact,
    first_infection_law,
    hazard_ratio,
    individual_hazard,
    infection_marginals,
    null_cumulative_incidence,
    risk_difference_sign,
    run_config,
    run_exact_map,
    simulate_arm_counts,
    tstar_bound,
)

__all__ = [
    "ConfigError",
    "EpidemicParams",
    "Error",
    "NotApplicableError",
    "NumericalError",
    "ProgressError",
    "SizeLimitError",
    "UndefinedError",
    "__version__",
    "calibrate_T",
    "classify_direction",
    "direction_bias_condition",
    "exact_risk_ratio",
    "expected_infection_probs",
    "expected_rr_exact",
    "first_infection_law",
    "hazard_ratio",
    "individual_hazard",
    "infection_marginals",
    "null_cumulative_incidence",
    "risk_difference_sign",
    "run_config",
    "run_exact_map",
    "simulate_arm_counts",
    "tstar_bound",
]
