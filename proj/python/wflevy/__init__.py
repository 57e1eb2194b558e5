"""Fixation probabilities of Wright-Fisher diffusions in a compound Poisson environment."""

from ._core import (
    CutoffTooSmall,
    Environment,
    NoStabilization,
    b_ratios,
    closed_form_no_env,
    compute_pi,
    compute_pi_auto,
    estimate_duality_coeffs,
    estimate_fixation,
    estimate_moment,
    extract_a,
    extract_b_ode,
    integrate_q,
    integrate_r,
    make_series,
    normalize_b,
    run_validation,
    tail_bound,
    unnormalized_ratios,
)

__all__ = [
    "CutoffTooSmall",
    "Environment",
    "NoStabilization",
    "b_ratios",
    "closed_form_no_env",
    "compute_pi",
    "compute_pi_auto",
    "estimate_duality_coeffs",
    "estimate_fixation",
    "estimate_moment",
    "extract_a",
    "extract_b_ode",
    "integrate_q",
    "integrate_r",
    "make_series",
    "normalize_b",
    "run_validation",
    "tail_bound",
    "unnormalized_ratios",
]
