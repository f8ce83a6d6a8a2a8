"""Closed-form performance model for the slotted-ALOHA uplink.

Per-user throughput is the outage-discounted fixed rate times the
probability that the user alone accesses the channel.  The proportional
fairness objective is the sum of log throughputs, evaluated here in log
space with the energy-neutrality constraint already substituted, so the
solvers can probe boundary regions without underflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .model import AllocationPolicy, NetworkConfig, UserProfile, gain_coefficient
from .specfun import (
    DomainError,
    ln_gamma,
    log_upper_incomplete_gamma,
    regularized_upper_gamma,
)

__all__ = [
    "PerformanceReport",
    "rate_hat",
    "throughput_bar",
    "all_throughputs",
    "pf_objective",
    "f_aux",
    "z_factor",
    "stationarity_residuals",
    "jain_index",
    "report_from_throughputs",
    "analytic_report",
]

_LN2 = math.log(2.0)

# Success at the non-outage boundary: the indicator and the simulator use a
# tiny slack so that a rate sitting exactly at capacity (the static-channel
# optimum) is not flipped to outage by rounding.
STATIC_BOUNDARY_SLACK = 1e-12


@dataclass(frozen=True)
class PerformanceReport:
    """Per-user and aggregate throughput metrics.

    jain_index is NaN when every throughput is zero (the index is undefined
    there); source records whether the numbers are analytic or simulated.
    """

    per_user_throughput: tuple[float, ...]
    sum_throughput: float
    jain_index: float
    source: str

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "per_user_throughput", tuple(self.per_user_throughput)
        )
        if self.source not in ("analytic", "simulated"):
            raise ValueError(f"PerformanceReport: bad source {self.source!r}")
        total = sum(self.per_user_throughput)
        if abs(self.sum_throughput - total) > 1e-12 * max(1.0, abs(total)):
            raise ValueError(
                f"PerformanceReport: sum_throughput={self.sum_throughput!r} "
                f"does not match the per-user sum {total!r}"
            )


def growth(rate: float) -> float:
    """2^rate - 1, via expm1 for small-rate accuracy; inf on overflow."""
    z = rate * _LN2
    if z > 700.0:
        return math.inf
    return math.expm1(z)


def rate_hat(
    user: UserProfile,
    tau0: float,
    p_tx: float,
    rate: float,
    n0: float,
    static: bool = False,
) -> float:
    """Outage-discounted average rate of a user that accessed the channel.

    Nakagami fading: (1 - tau0) * rate * Q(m, m (2^rate - 1) n0 / (p_tx omega)).
    Static channel (the m -> infinity limit): the gamma tail becomes the
    indicator that the rate does not exceed the link capacity.
    """
    if not (0.0 < tau0 < 1.0):
        raise DomainError(f"rate_hat: tau0={tau0!r} must be in (0, 1)")
    if not p_tx > 0.0:
        raise DomainError(f"rate_hat: p_tx={p_tx!r} must be positive")
    if not rate >= 0.0:
        raise DomainError(f"rate_hat: rate={rate!r} must be >= 0")
    if not n0 > 0.0:
        raise DomainError(f"rate_hat: n0={n0!r} must be positive")
    if rate == 0.0:
        return 0.0
    threshold = growth(rate) * n0 / (p_tx * user.omega)
    if static:
        ok = threshold <= 1.0 + STATIC_BOUNDARY_SLACK
        return (1.0 - tau0) * rate if ok else 0.0
    return (1.0 - tau0) * rate * regularized_upper_gamma(user.m, user.m * threshold)


def throughput_bar(k: int, policy: AllocationPolicy, config: NetworkConfig) -> float:
    """Average throughput of user k: rate_hat_k * q_k * prod_{i != k} (1 - q_i)."""
    if not (0 <= k < config.num_users):
        raise IndexError(f"throughput_bar: user index {k} out of range")
    static = config.channel_mode == "static"
    r_hat = rate_hat(
        config.users[k], policy.tau0, policy.p_tx[k], policy.rate[k], config.n0,
        static=static,
    )
    others = 1.0
    for i, qi in enumerate(policy.q):
        if i != k:
            others *= 1.0 - qi
    return r_hat * policy.q[k] * others


def all_throughputs(policy: AllocationPolicy, config: NetworkConfig) -> list[float]:
    return [throughput_bar(k, policy, config) for k in range(config.num_users)]


def _x_argument(policy: AllocationPolicy, config: NetworkConfig, k: int) -> float:
    """Gamma-tail argument for user k with energy neutrality substituted:
    X_k = (2^R_k - 1) / C_k, C_k = tau0 p0 A_k / ((1 - tau0) q_k)."""
    a_k = gain_coefficient(config.users[k], config.n0)
    c_k = policy.tau0 * policy.p0 * a_k / ((1.0 - policy.tau0) * policy.q[k])
    return growth(policy.rate[k]) / c_k


def pf_objective(policy: AllocationPolicy, config: NetworkConfig) -> float:
    """Sum of log throughputs, evaluated term-by-term in log space.

    Returns -inf when any user has zero throughput (zero rate, or a
    static-channel rate above capacity); the solvers use that sentinel to
    reject boundary probes.
    """
    static = config.channel_mode == "static"
    k_users = config.num_users
    log_one_minus_q = 0.0
    for qk in policy.q:
        log_one_minus_q += math.log1p(-qk)
    total = (k_users - 1) * log_one_minus_q + k_users * math.log1p(-policy.tau0)
    for k in range(k_users):
        rk = policy.rate[k]
        if rk <= 0.0:
            return -math.inf
        x_k = _x_argument(policy, config, k)
        if static:
            m_k = config.users[k].m
            if x_k > m_k * (1.0 + STATIC_BOUNDARY_SLACK):
                return -math.inf
            log_tail = 0.0
        else:
            if math.isinf(x_k):
                return -math.inf
            m_k = config.users[k].m
            log_tail = log_upper_incomplete_gamma(m_k, x_k) - ln_gamma(m_k)
        total += math.log(rk) + math.log(policy.q[k]) + log_tail
    return total


def f_aux(m: float, x: float) -> float:
    """Auxiliary ratio x^m e^-x / Gamma(m, x); strictly increasing from 0 to inf."""
    if not m > 0.0:
        raise DomainError(f"f_aux: m={m!r} must be positive")
    if not x > 0.0:
        raise DomainError(f"f_aux: x={x!r} must be positive")
    if math.isinf(x):
        return math.inf
    log_f = m * math.log(x) - x - log_upper_incomplete_gamma(m, x)
    if log_f > 700.0:
        return math.inf
    return math.exp(log_f)


def z_factor(m: float, x: float) -> float:
    """Negative log-derivative of the gamma tail:
    Z = x^(m-1) e^-x / Gamma(m, x) = f_aux(m, x) / x."""
    if not m > 0.0:
        raise DomainError(f"z_factor: m={m!r} must be positive")
    if not x > 0.0:
        raise DomainError(f"z_factor: x={x!r} must be positive")
    if math.isinf(x):
        return math.inf
    log_z = (m - 1.0) * math.log(x) - x - log_upper_incomplete_gamma(m, x)
    if log_z > 700.0:
        return math.inf
    return math.exp(log_z)


def stationarity_residuals(
    policy: AllocationPolicy, config: NetworkConfig
) -> list[float]:
    """Partial derivatives of the log objective at the policy, as a
    2K+1-vector: K rate derivatives, K access-probability derivatives, then
    the EH-fraction derivative.  All vanish at an interior optimum; the
    EH-fraction entry stays nonzero when the average-power cap clamps tau0.
    """
    k_users = config.num_users
    tau0 = policy.tau0
    residuals_rate: list[float] = []
    residuals_q: list[float] = []
    zx_sum = 0.0
    for k in range(k_users):
        rk = policy.rate[k]
        qk = policy.q[k]
        a_k = gain_coefficient(config.users[k], config.n0)
        c_k = tau0 * policy.p0 * a_k / ((1.0 - tau0) * qk)
        x_k = growth(rk) / c_k
        z_k = z_factor(config.users[k].m, x_k)
        zx = z_k * x_k
        zx_sum += zx
        residuals_rate.append(1.0 / rk - z_k * math.pow(2.0, rk) * _LN2 / c_k)
        residuals_q.append(1.0 / qk - (k_users - 1) / (1.0 - qk) - zx / qk)
    residual_tau = -k_users / (1.0 - tau0) + zx_sum / (tau0 * (1.0 - tau0))
    return residuals_rate + residuals_q + [residual_tau]


def jain_index(throughputs: Sequence[float]) -> float:
    """Fairness index (sum x)^2 / (n sum x^2); 1 is perfectly fair, 1/n is
    a single user taking everything."""
    values = [float(v) for v in throughputs]
    if not values:
        raise ValueError("jain_index: empty input")
    if any(v < 0.0 for v in values):
        raise ValueError("jain_index: throughputs must be non-negative")
    total = sum(values)
    square_sum = sum(v * v for v in values)
    if square_sum == 0.0:
        raise ValueError("jain_index: all throughputs are zero")
    return total * total / (len(values) * square_sum)


def report_from_throughputs(
    throughputs: Sequence[float], source: str
) -> PerformanceReport:
    """Assemble a PerformanceReport; the Jain index degrades to NaN when
    every throughput is zero."""
    values = tuple(float(v) for v in throughputs)
    try:
        jain = jain_index(values)
    except ValueError:
        jain = math.nan
    return PerformanceReport(
        per_user_throughput=values,
        sum_throughput=sum(values),
        jain_index=jain,
        source=source,
    )


def analytic_report(policy: AllocationPolicy, config: NetworkConfig) -> PerformanceReport:
    return report_from_throughputs(all_throughputs(policy, config), "analytic")
