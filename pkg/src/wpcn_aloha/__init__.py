"""Proportionally fair resource allocation for RF-energy-harvesting
slotted-ALOHA networks, with a slot-level Monte-Carlo validator."""

from .analysis import (
    PerformanceReport,
    analytic_report,
    f_aux,
    jain_index,
    pf_objective,
    rate_hat,
    stationarity_residuals,
    throughput_bar,
    z_factor,
)
from .model import (
    AllocationPolicy,
    NetworkConfig,
    UserProfile,
    build_config,
    gain_coefficient,
    make_policy,
    parse_config_file,
    path_loss,
    two_ring_topology,
    validate_policy,
)
from .simulator import SimulationTrace, aggregate, sample_channel_power, simulate
from .solver import (
    SolveDiagnostics,
    brute_force_oracle,
    rate_from_q,
    solve_benchmark,
    solve_q_given_tau0,
    solve_static,
    solve_tau0_fixed_point,
    solve_proportional_fair,
)
from .specfun import (
    Accuracy,
    ConvergenceError,
    DomainError,
    lambert_w0,
    ln_gamma,
    regularized_upper_gamma,
    upper_incomplete_gamma,
)

__version__ = "0.1.0"

__all__ = [
    "Accuracy",
    "AllocationPolicy",
    "ConvergenceError",
    "DomainError",
    "NetworkConfig",
    "PerformanceReport",
    "SimulationTrace",
    "SolveDiagnostics",
    "UserProfile",
    "aggregate",
    "analytic_report",
    "brute_force_oracle",
    "build_config",
    "f_aux",
    "gain_coefficient",
    "jain_index",
    "lambert_w0",
    "ln_gamma",
    "make_policy",
    "parse_config_file",
    "path_loss",
    "pf_objective",
    "rate_from_q",
    "rate_hat",
    "regularized_upper_gamma",
    "sample_channel_power",
    "simulate",
    "solve_benchmark",
    "solve_q_given_tau0",
    "solve_static",
    "solve_tau0_fixed_point",
    "solve_proportional_fair",
    "stationarity_residuals",
    "throughput_bar",
    "two_ring_topology",
    "upper_incomplete_gamma",
    "validate_policy",
    "z_factor",
]
