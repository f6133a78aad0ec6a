"""Decode-and-forward relay selection under outdated CSI and estimation
errors: exact closed-form outage / SER / capacity metrics with independent
Monte-Carlo validation."""

from .analytic import (
    DecodingSet,
    MetricResult,
    all_decoding_sets,
    aser_conditional_pdf,
    aser_total,
    capacity_lb_avg,
    cdf_current_given_old,
    cdf_max_others,
    outage_conditional,
    outage_conditional_quadrature,
    outage_total,
    prob_decoding_set,
    prob_relay_decodes,
    relay_error_prob,
    selected_snr_pdf,
)
from .channel import (
    FadingParams,
    LinkParams,
    SystemConfig,
    TrialDraw,
    derive_link_params,
    doppler_correlation,
    sample_trial,
)
from .diversity import SweepCurve, asymptotic_checks, effective_diversity, fit_slope
from .montecarlo import McEstimate, simulate_capacity, simulate_outage, simulate_ser
from .specfn import SeriesControl, SeriesError

__version__ = "0.1.0"

__all__ = [
    "DecodingSet",
    "FadingParams",
    "LinkParams",
    "McEstimate",
    "MetricResult",
    "SeriesControl",
    "SeriesError",
    "SweepCurve",
    "SystemConfig",
    "TrialDraw",
    "all_decoding_sets",
    "aser_conditional_pdf",
    "aser_total",
    "asymptotic_checks",
    "capacity_lb_avg",
    "cdf_current_given_old",
    "cdf_max_others",
    "derive_link_params",
    "doppler_correlation",
    "effective_diversity",
    "fit_slope",
    "outage_conditional",
    "outage_conditional_quadrature",
    "outage_total",
    "prob_decoding_set",
    "prob_relay_decodes",
    "relay_error_prob",
    "sample_trial",
    "selected_snr_pdf",
    "simulate_capacity",
    "simulate_outage",
    "simulate_ser",
    "__version__",
]
