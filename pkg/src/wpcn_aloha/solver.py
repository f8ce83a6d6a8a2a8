"""Allocation solvers.

The proportionally fair allocation is computed from its optimality system:
the base station transmits at peak power, each user's access probability
balances a strictly decreasing collision-pressure term against a strictly
increasing outage-pressure term (solved by bisection), and the EH-phase
fraction is the unique fixed point of the per-user averages (outer
bisection).  When the resulting EH fraction would violate the average-power
cap it is clamped to p_avg/p_max and the access probabilities are re-solved
at the clamp.

A benchmark scheme (uniform access, single common rate), the static-channel
variant, and a grid-search oracle used by the test suite live here too.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .analysis import rate_hat, stationarity_residuals
from .model import (
    AllocationPolicy,
    NetworkConfig,
    UserProfile,
    gain_coefficient,
    make_policy,
    path_loss,
    transmit_power,
)
from .specfun import (
    ConvergenceError,
    DomainError,
    lambert_w0,
    ln_gamma,
    log_upper_incomplete_gamma,
)

__all__ = [
    "SolveDiagnostics",
    "rate_from_q",
    "solve_q_given_tau0",
    "solve_tau0_fixed_point",
    "solve_proportional_fair",
    "solve_benchmark",
    "solve_static",
    "brute_force_oracle",
]

_LN2 = math.log(2.0)
_Q_EDGE = 1e-12       # bracket inset at q = 0 and q = 1/K
_TAU_EDGE = 1e-12     # bracket inset at tau0 = 0 and 1
_ORACLE_MAX_USERS = 3
_RATE_CAP = 40.0      # far above any operating point at the supported SNRs


@dataclass(frozen=True)
class SolveDiagnostics:
    """Bookkeeping from a proportional-fairness solve.

    case_taken is 'case2_clamped' exactly when the unconstrained EH
    fraction reaches the average-power cap p_avg/p_max.  residual_norm is
    the infinity norm of the stationarity residuals that must vanish for
    the case taken (the EH-fraction residual is excluded when clamped).
    """

    case_taken: str
    outer_iterations: int
    inner_iterations_max: int
    residual_norm: float
    tau0_unconstrained: float


def _log1p_minus_x(u: float) -> float:
    """log(1+u) - u by its series, full relative accuracy for |u| <= 0.06."""
    p = u * u
    sign = -1.0
    j = 2
    total = sign * p / j
    while j < 80:
        j += 1
        p *= u
        sign = -sign
        term = sign * p / j
        total += term
        if abs(term) <= 1e-17 * abs(total):
            break
    return total


def _nontrivial_root(delta: float) -> tuple[float, float]:
    """The root t in (0, 1) of t e^-t = b e^-b for b = 1 + delta, delta > 0,
    returned as (t, 1 - t).

    Near b = 1 the Lambert-W route loses half its digits (its argument sits
    at the branch point), so the equation is solved there in the variables
    tau = 1 - t and delta: log(1-tau) + tau = log(1+delta) - delta, with
    both sides summed by series and Newton on tau.  The caller supplies
    delta formed without cancellation; b - 1.0 would throw away half the
    low digits exactly where this path needs them.
    """
    if delta <= 0.05:
        psi = _log1p_minus_x(delta)
        tau = delta
        for _ in range(60):
            phi = _log1p_minus_x(-tau)
            step = (phi - psi) * (1.0 - tau) / tau
            tau += step
            if abs(step) <= 1e-16 * tau:
                break
        return 1.0 - tau, tau
    b = 1.0 + delta
    t = -lambert_w0(-b * math.exp(-b))
    return t, 1.0 - t


def rate_from_q(q: float, K: int) -> float:
    """Optimal fixed rate for access probability q in a K-user network.

    With B = (1-q)/(1-Kq) > 1 the rate is log2(-B / W(-B e^-B)), computed
    as (log B - log t)/log 2 where t = -W(-B e^-B) is the nontrivial root
    of t e^-t = B e^-B in (0, 1).  Beyond B ~ 700 the correction term
    underflows double precision entirely and R = B/log 2 is exact.
    """
    if K < 2:
        raise DomainError(f"rate_from_q: K={K!r} must be >= 2")
    if not (0.0 < q < 1.0 / K):
        raise DomainError(f"rate_from_q: q={q!r} must be in (0, 1/K) for K={K}")
    delta = (K - 1.0) * q / (1.0 - K * q)  # B - 1, formed without cancellation
    if delta > 699.0:
        return (1.0 + delta) / _LN2
    t, one_minus_t = _nontrivial_root(delta)
    log_t = math.log1p(-one_minus_t) if one_minus_t <= 0.5 else math.log(t)
    return (math.log1p(delta) - log_t) / _LN2


def _log_f_aux(m: float, x: float) -> float:
    """log of x^m e^-x / Gamma(m, x); -inf at x = 0, +inf at x = inf."""
    if x <= 0.0:
        return -math.inf
    if math.isinf(x):
        return math.inf
    return m * math.log(x) - x - log_upper_incomplete_gamma(m, x)


def _bisect_decreasing(
    fn: Callable[[float], float],
    lo: float,
    hi: float,
    width_tol: float,
    max_iter: int = 200,
    label: str = "bisection",
) -> tuple[float, int]:
    """Root of a strictly decreasing function by bisection.

    Verifies the sign change up front and reports the bracket on failure.
    """
    f_lo = fn(lo)
    f_hi = fn(hi)
    if not (f_lo > 0.0 >= f_hi or f_lo >= 0.0 > f_hi):
        raise ConvergenceError(
            f"{label}: no sign change on bracket [{lo!r}, {hi!r}] "
            f"(f(lo)={f_lo!r}, f(hi)={f_hi!r})"
        )
    iters = 0
    while hi - lo > width_tol and iters < max_iter:
        mid = 0.5 * (lo + hi)
        if fn(mid) > 0.0:
            lo = mid
        else:
            hi = mid
        iters += 1
    return 0.5 * (lo + hi), iters


def _q_balance(
    user: UserProfile, tau0: float, K: int, p0: float, n0: float
) -> Callable[[float], float]:
    """Log-domain residual of the access-probability equation, strictly
    decreasing in q: log[(1-Kq)/(1-q)] - log f(m, X(q))."""
    a_k = gain_coefficient(user, n0)
    coef = (1.0 - tau0) / (tau0 * p0 * a_k)
    m = user.m

    def balance(q: float) -> float:
        lhs = (1.0 - K * q) / (1.0 - q)
        rate = rate_from_q(q, K)
        z = rate * _LN2
        if z > 700.0:
            return -math.inf
        x = math.expm1(z) * q * coef
        return math.log(lhs) - _log_f_aux(m, x)

    return balance


def _solve_q(
    user: UserProfile, tau0: float, K: int, p0: float, n0: float
) -> tuple[float, int]:
    if not (0.0 < tau0 < 1.0):
        raise DomainError(f"solve_q_given_tau0: tau0={tau0!r} must be in (0, 1)")
    if not p0 > 0.0:
        raise DomainError(f"solve_q_given_tau0: p0={p0!r} must be positive")
    balance = _q_balance(user, tau0, K, p0, n0)
    lo = _Q_EDGE
    hi = 1.0 / K - _Q_EDGE
    # bisect in log q: extreme tau0 pushes the root many orders of magnitude
    # below the bracket midpoint, and the residual needs q to full relative
    # precision there, not absolute
    u, iters = _bisect_decreasing(
        lambda v: balance(math.exp(v)), math.log(lo), math.log(hi),
        width_tol=1e-15, label="access-probability solve",
    )
    q = math.exp(u)
    lhs = (1.0 - K * q) / (1.0 - q)
    rhs_log = math.log(lhs) - balance(q)
    residual = abs(lhs - math.exp(rhs_log))
    if not residual <= 1e-10:
        raise ConvergenceError(
            f"access-probability solve: residual {residual!r} > 1e-10 "
            f"on bracket [{lo!r}, {hi!r}] at q={q!r}"
        )
    return q, iters


def solve_q_given_tau0(
    user: UserProfile, tau0: float, K: int, p0: float, n0: float
) -> float:
    """Unique access probability in (0, 1/K) balancing collision pressure
    (1-Kq)/(1-q), which falls from 1 to 0, against the outage-pressure
    ratio f(m, X(q)), which climbs from 0 to infinity."""
    return _solve_q(user, tau0, K, p0, n0)[0]


def _solve_tau0(config: NetworkConfig) -> tuple[float, int, int]:
    if config.channel_mode != "nakagami":
        raise DomainError("solve_tau0_fixed_point: requires nakagami channel mode")
    K = config.num_users
    inner_max = 0

    def gap(tau0: float) -> float:
        nonlocal inner_max
        total = 0.0
        for user in config.users:
            q, iters = _solve_q(user, tau0, K, config.p_max, config.n0)
            inner_max = max(inner_max, iters)
            total += (1.0 - K * q) / (1.0 - q)
        return total / K - tau0

    tau0, outer = _bisect_decreasing(
        gap, _TAU_EDGE, 1.0 - _TAU_EDGE, width_tol=1e-12,
        label="EH-fraction fixed point",
    )
    return tau0, outer, inner_max


def solve_tau0_fixed_point(config: NetworkConfig) -> float:
    """Unconstrained EH-phase fraction: the unique tau0 in (0, 1) equal to
    the mean of (1-Kq_k(tau0))/(1-q_k(tau0)) at peak BS power."""
    return _solve_tau0(config)[0]


def solve_proportional_fair(config: NetworkConfig) -> tuple[AllocationPolicy, SolveDiagnostics]:
    """Proportionally fair allocation for a Nakagami-fading network.

    BS power is pinned at p_max.  If the unconstrained EH fraction
    respects the average-power cap it is used as is (case 1); otherwise
    tau0 is clamped to p_avg/p_max and the access probabilities are
    re-solved at the clamp (case 2, ties clamp).  Rates follow from the
    access probabilities, transmit powers from energy neutrality.
    """
    if config.channel_mode != "nakagami":
        raise DomainError("solve_proportional_fair: requires nakagami channel mode")
    K = config.num_users
    p0 = config.p_max
    ratio = config.p_avg / config.p_max
    tau0_star, outer, inner_max = _solve_tau0(config)
    if tau0_star < ratio:
        case = "case1_interior"
        tau0 = tau0_star
    else:
        case = "case2_clamped"
        tau0 = ratio
    qs = []
    for user in config.users:
        q, iters = _solve_q(user, tau0, K, p0, config.n0)
        inner_max = max(inner_max, iters)
        qs.append(q)
    rates = [rate_from_q(q, K) for q in qs]
    policy = make_policy(config, tau0, p0, qs, rates)
    residuals = stationarity_residuals(policy, config)
    if case == "case1_interior":
        norm = max(abs(r) for r in residuals)
    else:
        norm = max(abs(r) for r in residuals[: 2 * K])
    diagnostics = SolveDiagnostics(
        case_taken=case,
        outer_iterations=outer,
        inner_iterations_max=inner_max,
        residual_norm=norm,
        tau0_unconstrained=tau0_star,
    )
    return policy, diagnostics


def _grid_golden_max(
    fn: Callable[[float], float],
    lo: float,
    hi: float,
    n_grid: int = 64,
    tol: float = 1e-12,
    max_iter: int = 200,
) -> tuple[float, float]:
    """1-D maximization: coarse scan to localize, golden-section to refine."""
    xs = [lo + (hi - lo) * i / (n_grid - 1) for i in range(n_grid)]
    vals = [fn(x) for x in xs]
    best = max(range(n_grid), key=vals.__getitem__)
    a = xs[max(best - 1, 0)]
    b = xs[min(best + 1, n_grid - 1)]
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc = fn(c)
    fd = fn(d)
    for _ in range(max_iter):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = fn(d)
        if b - a <= tol * max(1.0, abs(a)):
            break
    x = 0.5 * (a + b)
    return x, fn(x)


def solve_benchmark(config: NetworkConfig, r1: float, r2: float) -> AllocationPolicy:
    """Uniform baseline: tau0 = p_avg/p_max, q_k = 1/K, and a single common
    rate maximizing the outage-discounted rate of a hypothetical user at
    the mid radius (r1 + r2)/2.  Per-user transmit powers still follow
    energy neutrality with each user's own gain."""
    ratio = config.p_avg / config.p_max
    if not ratio < 1.0:
        raise ValueError(
            "solve_benchmark: needs p_avg < p_max (tau0 is pinned to their ratio)"
        )
    K = config.num_users
    tau0 = ratio
    q = 1.0 / K
    base = config.users[0]
    reference = UserProfile(
        eta=base.eta, omega=path_loss((r1 + r2) / 2.0), m=base.m,
        distance=(r1 + r2) / 2.0,
    )
    p_ref = transmit_power(reference, tau0, config.p_max, q)
    if config.channel_mode == "static":
        # no outage below capacity, zero above: the maximizer is capacity itself
        r0 = math.log2(1.0 + p_ref * reference.omega / config.n0)
    else:
        def avg_rate(rate: float) -> float:
            return rate_hat(reference, tau0, p_ref, rate, config.n0)

        r0, _ = _grid_golden_max(avg_rate, 1e-9, _RATE_CAP, n_grid=128)
    return make_policy(config, tau0, config.p_max, [q] * K, [r0] * K)


def _static_capacity(s: float, tau0: float, q: float) -> float:
    """Static-channel rate with energy neutrality substituted:
    log2(1 + tau0 s / ((1 - tau0) q)), s = p0 eta omega^2 / n0."""
    return math.log2(1.0 + tau0 * s / ((1.0 - tau0) * q))


def solve_static(config: NetworkConfig) -> AllocationPolicy:
    """Proportionally fair allocation for the no-fading channel.

    At the optimum each rate sits exactly at link capacity, so the
    objective separates per user given tau0.  Nested 1-D searches (grid
    scan plus golden section) maximize per-user terms over q and the total
    over tau0; the average-power cap is applied by clamping tau0 and
    re-optimizing the access probabilities.
    """
    if config.channel_mode != "static":
        raise DomainError("solve_static: requires static channel mode")
    K = config.num_users
    p0 = config.p_max
    strengths = [
        p0 * user.eta * user.omega ** 2 / config.n0 for user in config.users
    ]

    def best_q(tau0: float, s: float) -> tuple[float, float]:
        def per_user(q: float) -> float:
            rate = _static_capacity(s, tau0, q)
            return math.log(rate) + math.log(q) + (K - 1) * math.log1p(-q)

        return _grid_golden_max(per_user, 1e-9, 1.0 - 1e-9, n_grid=64)

    def total(tau0: float) -> float:
        return K * math.log1p(-tau0) + sum(best_q(tau0, s)[1] for s in strengths)

    tau0_free, _ = _grid_golden_max(total, 1e-6, 1.0 - 1e-6, n_grid=48)
    tau0 = min(tau0_free, config.p_avg / config.p_max)
    qs = [best_q(tau0, s)[0] for s in strengths]
    rates = [_static_capacity(s, tau0, q) for s, q in zip(strengths, qs)]
    return make_policy(config, tau0, p0, qs, rates)


def _log_tail_integer_m(m_int: int, x: np.ndarray) -> np.ndarray:
    """log Q(m, x) for integer m via the finite series e^-x sum x^j/j!,
    accumulated in log space so big grid arguments cannot overflow."""
    with np.errstate(divide="ignore"):
        log_x = np.log(x)
    acc = np.zeros_like(x)  # j = 0 term
    log_fact = 0.0
    for j in range(1, m_int):
        log_fact += math.log(j)
        acc = np.logaddexp(acc, j * log_x - log_fact)
    return -x + acc


def _log_tail_generic(m: float, x: np.ndarray) -> np.ndarray:
    lg = ln_gamma(m)
    flat = np.asarray(x, dtype=float).ravel()
    out = np.empty_like(flat)
    for i, xi in enumerate(flat):
        out[i] = (log_upper_incomplete_gamma(m, float(xi)) - lg) if xi > 0 else 0.0
    return out.reshape(np.shape(x))


def _log_tail_array(m: float, x: np.ndarray) -> np.ndarray:
    if float(m).is_integer() and 1 <= int(m) <= 60:
        return _log_tail_integer_m(int(m), x)
    return _log_tail_generic(m, x)


def _zoom_argmax_2d(
    value: Callable[[np.ndarray, np.ndarray], np.ndarray],
    q_grid: np.ndarray,
    r_grid: np.ndarray,
    levels: int,
    n: int,
) -> tuple[float, float, float]:
    """Argmax of value(q, R) by repeated grid evaluation, zooming into the
    best point's neighborhood each level.

    The window keeps two cells on each side so a ridge running diagonally
    through the best cell is not clipped out between levels.
    """
    best_q = best_r = best_v = None
    for _ in range(levels):
        qq, rr = np.meshgrid(q_grid, r_grid, indexing="ij")
        vals = value(qq, rr)
        idx = np.unravel_index(np.argmax(vals), vals.shape)
        best_q = float(q_grid[idx[0]])
        best_r = float(r_grid[idx[1]])
        best_v = float(vals[idx])
        q_lo = q_grid[max(idx[0] - 2, 0)]
        q_hi = q_grid[min(idx[0] + 2, len(q_grid) - 1)]
        r_lo = r_grid[max(idx[1] - 2, 0)]
        r_hi = r_grid[min(idx[1] + 2, len(r_grid) - 1)]
        q_grid = np.linspace(q_lo, q_hi, n)
        r_grid = np.linspace(r_lo, r_hi, n)
    return best_q, best_r, best_v


def brute_force_oracle(
    config: NetworkConfig,
    grid_density: int = 48,
    enforce_avg_power: bool = True,
) -> AllocationPolicy:
    """Exhaustive grid search over (tau0, q_k, R_k) at peak BS power,
    refined by progressive zooming; test-suite reference only.

    The transformed objective separates across users once tau0 is fixed
    (the cross terms reduce to per-user (K-1) log(1-q_k)), so users that
    share a profile are searched once and the per-user optima are summed.
    Guarded to K <= 3.  Set enforce_avg_power=False to search tau0 over
    all of (0, 1) instead of capping it at p_avg/p_max.
    """
    K = config.num_users
    if K > _ORACLE_MAX_USERS:
        raise ValueError(
            f"brute_force_oracle: K={K} exceeds the cost guard ({_ORACLE_MAX_USERS})"
        )
    static = config.channel_mode == "static"
    p0 = config.p_max
    n = max(grid_density, 16)

    profiles: dict[tuple[float, float, float], list[int]] = {}
    for idx, user in enumerate(config.users):
        profiles.setdefault((user.eta, user.omega, user.m), []).append(idx)
    groups = [(config.users[members[0]], members) for members in profiles.values()]

    def best_for_user(user: UserProfile, tau0: float) -> tuple[float, float, float]:
        a_k = gain_coefficient(user, config.n0)
        coef = (1.0 - tau0) / (tau0 * p0 * a_k)
        if static:
            s = p0 * user.eta * user.omega ** 2 / config.n0

            def per_q(q: float) -> float:
                rate = _static_capacity(s, tau0, q)
                return math.log(rate) + math.log(q) + (K - 1) * math.log1p(-q)

            q, val = _grid_golden_max(per_q, 1e-9, 1.0 - 1e-9, n_grid=n)
            return q, _static_capacity(s, tau0, q), val

        def value(qq: np.ndarray, rr: np.ndarray) -> np.ndarray:
            x = np.expm1(rr * _LN2) * qq * coef
            tail = _log_tail_array(user.m, x)
            return np.log(rr) + np.log(qq) + (K - 1) * np.log1p(-qq) + tail

        q_grid = np.unique(
            np.concatenate([np.geomspace(1e-6, 0.2, n // 2), np.linspace(1e-4, 1.0 - 1e-6, n)])
        )
        r_grid = np.unique(
            np.concatenate([np.geomspace(1e-4, 1.0, n // 2), np.linspace(0.01, _RATE_CAP, n)])
        )
        q, rate, val = _zoom_argmax_2d(value, q_grid, r_grid, levels=10, n=n)
        return q, rate, val

    def total(tau0: float) -> float:
        acc = K * math.log1p(-tau0)
        for user, members in groups:
            acc += len(members) * best_for_user(user, tau0)[2]
        return acc

    tau_hi = 1.0 - _TAU_EDGE
    if enforce_avg_power:
        tau_hi = min(tau_hi, config.p_avg / config.p_max)
    tau_grid = np.linspace(1e-4, tau_hi, max(n // 2, 24))
    for _ in range(5):
        vals = [total(float(t)) for t in tau_grid]
        i = int(np.argmax(vals))
        lo = float(tau_grid[max(i - 1, 0)])
        hi = float(tau_grid[min(i + 1, len(tau_grid) - 1)])
        tau0 = float(tau_grid[i])
        tau_grid = np.linspace(lo, hi, 17)

    qs = [0.0] * K
    rates = [0.0] * K
    for user, members in groups:
        q, rate, _ = best_for_user(user, tau0)
        for idx in members:
            qs[idx] = q
            rates[idx] = rate
    return make_policy(
        config, tau0, p0, qs, rates, check_avg_power=enforce_avg_power
    )
