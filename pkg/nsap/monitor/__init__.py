from .checks import (
    check_energy,
    check_integral_bounds,
    check_lp_balance,
    check_monotone,
    check_ode_bound,
    check_sobolev,
    check_sobolev_series,
    run_check,
    run_checks,
)
from .exponents import ExponentTable
from .norms import DiagnosticRecord, KappaValue, MonitorConfig, dissipation, kappa, lp_norm, make_recorder
from .perturbation import check_perturbation
from .reports import InequalityReport, family_statistic
from .scaling import rescale_field, scaling_test
from .series import SeriesBundle
from .stability import closedness_probe, find_smallness_threshold, stability_probe

__all__ = [
    "DiagnosticRecord",
    "ExponentTable",
    "InequalityReport",
    "KappaValue",
    "MonitorConfig",
    "SeriesBundle",
    "check_energy",
    "check_integral_bounds",
    "check_lp_balance",
    "check_monotone",
    "check_ode_bound",
    "check_perturbation",
    "check_sobolev",
    "check_sobolev_series",
    "closedness_probe",
    "dissipation",
    "family_statistic",
    "find_smallness_threshold",
    "kappa",
    "lp_norm",
    "make_recorder",
    "rescale_field",
    "run_check",
    "run_checks",
    "scaling_test",
    "stability_probe",
]
