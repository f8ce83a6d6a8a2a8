"""Problem-instance data model: users, topology, and resource allocations.

Time is normalized throughout: slot duration is 1 and bandwidth is 1 Hz,
so rates are bits/s/Hz and energies are watt-slots.  The slot duration
cancels in the energy-neutrality balance either way.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

__all__ = [
    "UserProfile",
    "NetworkConfig",
    "AllocationPolicy",
    "CHANNEL_MODES",
    "CONFIG_FILE_KEYS",
    "path_loss",
    "two_ring_topology",
    "gain_coefficient",
    "build_config",
    "make_policy",
    "validate_policy",
    "parse_config_file",
]

CHANNEL_MODES = ("nakagami", "static")


@dataclass(frozen=True)
class UserProfile:
    """Physical parameters of one energy-harvesting user.

    eta: energy conversion efficiency in (0, 1].
    omega: average channel power gain (same for both link directions).
    m: Nakagami fading parameter, >= 0.5.
    distance: meters from the base station; provenance only.
    """

    eta: float
    omega: float
    m: float
    distance: float | None = None

    def __post_init__(self) -> None:
        if not (0.0 < self.eta <= 1.0):
            raise ValueError(f"UserProfile: eta={self.eta!r} must be in (0, 1]")
        if not self.omega > 0.0:
            raise ValueError(f"UserProfile: omega={self.omega!r} must be positive")
        if not self.m >= 0.5:
            raise ValueError(f"UserProfile: m={self.m!r} must be >= 0.5")
        if self.distance is not None and not self.distance > 0.0:
            raise ValueError(f"UserProfile: distance={self.distance!r} must be positive")


@dataclass(frozen=True)
class NetworkConfig:
    """A full problem instance.

    Single-user networks are rejected: with K = 1 the optimal-rate map
    degenerates (its access-probability bracket (0, 1/K) is empty), so the
    allocation below is only defined for K >= 2.
    """

    users: tuple[UserProfile, ...]
    p_max: float = 5.0
    p_avg: float = 1.0
    n0: float = 1e-12
    channel_mode: str = "nakagami"

    def __post_init__(self) -> None:
        object.__setattr__(self, "users", tuple(self.users))
        if len(self.users) < 2:
            raise ValueError("NetworkConfig: at least 2 users are required")
        if not self.p_max > 0.0:
            raise ValueError(f"NetworkConfig: p_max={self.p_max!r} must be positive")
        if not (0.0 < self.p_avg <= self.p_max):
            raise ValueError(
                f"NetworkConfig: p_avg={self.p_avg!r} must be in (0, p_max={self.p_max!r}]"
            )
        if not self.n0 > 0.0:
            raise ValueError(f"NetworkConfig: n0={self.n0!r} must be positive")
        if self.channel_mode not in CHANNEL_MODES:
            raise ValueError(
                f"NetworkConfig: channel_mode={self.channel_mode!r} not in {CHANNEL_MODES}"
            )

    @property
    def num_users(self) -> int:
        return len(self.users)


@dataclass(frozen=True)
class AllocationPolicy:
    """A complete resource allocation: EH-phase fraction, BS power, and
    per-user access probability, fixed rate, and transmit power."""

    tau0: float
    p0: float
    q: tuple[float, ...]
    rate: tuple[float, ...]
    p_tx: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "q", tuple(self.q))
        object.__setattr__(self, "rate", tuple(self.rate))
        object.__setattr__(self, "p_tx", tuple(self.p_tx))
        if not (0.0 < self.tau0 < 1.0):
            raise ValueError(f"AllocationPolicy: tau0={self.tau0!r} must be in (0, 1)")
        if not self.p0 > 0.0:
            raise ValueError(f"AllocationPolicy: p0={self.p0!r} must be positive")
        if not (len(self.q) == len(self.rate) == len(self.p_tx)) or not self.q:
            raise ValueError("AllocationPolicy: q, rate, p_tx must have equal nonzero length")
        for k, (qk, rk, pk) in enumerate(zip(self.q, self.rate, self.p_tx)):
            if not (0.0 < qk < 1.0):
                raise ValueError(f"AllocationPolicy: q[{k}]={qk!r} must be in (0, 1)")
            if not rk >= 0.0:
                raise ValueError(f"AllocationPolicy: rate[{k}]={rk!r} must be >= 0")
            if not pk > 0.0:
                raise ValueError(f"AllocationPolicy: p_tx[{k}]={pk!r} must be positive")

    @property
    def num_users(self) -> int:
        return len(self.q)


def path_loss(r: float) -> float:
    """Deterministic path loss 10^-3 * r^-3 for a link of r meters."""
    if not r > 0.0:
        raise ValueError(f"path_loss: r={r!r} must be positive")
    return 1e-3 * r ** -3


def two_ring_topology(
    K: int, r1: float, r2: float, m: float = 3.0, eta: float = 1.0
) -> list[UserProfile]:
    """K users split evenly over two rings of radii r1 and r2 around the BS."""
    if K < 2 or K % 2 != 0:
        raise ValueError(f"two_ring_topology: K={K!r} must be even and >= 2")
    ring1 = UserProfile(eta=eta, omega=path_loss(r1), m=m, distance=r1)
    ring2 = UserProfile(eta=eta, omega=path_loss(r2), m=m, distance=r2)
    return [ring1] * (K // 2) + [ring2] * (K // 2)


def gain_coefficient(user: UserProfile, n0: float) -> float:
    """Per-user constant eta * omega^2 / (m * n0).

    The squared mean gain is what couples harvested energy to uplink SNR,
    so distance enters twice; this constant carries that compounding.
    """
    if not n0 > 0.0:
        raise ValueError(f"gain_coefficient: n0={n0!r} must be positive")
    return user.eta * user.omega ** 2 / (user.m * n0)


def build_config(
    K: int,
    r1: float,
    r2: float,
    m: float = 3.0,
    eta: float = 1.0,
    p_max: float = 5.0,
    p_avg: float = 1.0,
    n0: float = 1e-12,
    channel_mode: str = "nakagami",
) -> NetworkConfig:
    """NetworkConfig on a two-ring topology with the study's default powers."""
    users = two_ring_topology(K, r1, r2, m=m, eta=eta)
    return NetworkConfig(
        users=tuple(users), p_max=p_max, p_avg=p_avg, n0=n0, channel_mode=channel_mode
    )


def transmit_power(
    user: UserProfile, tau0: float, p0: float, q: float
) -> float:
    """Per-transmission power that balances mean harvested and spent energy:
    eta * p0 * tau0 * omega = p_tx * (1 - tau0) * q."""
    return user.eta * p0 * tau0 * user.omega / ((1.0 - tau0) * q)


def make_policy(
    config: NetworkConfig,
    tau0: float,
    p0: float,
    q: Sequence[float],
    rates: Sequence[float],
    check_avg_power: bool = True,
) -> AllocationPolicy:
    """Build a policy whose transmit powers satisfy energy neutrality exactly.

    check_avg_power=False skips the average-power cap (used by diagnostics
    that intentionally probe the unconstrained optimum).
    """
    if len(q) != config.num_users or len(rates) != config.num_users:
        raise ValueError("make_policy: q and rates must have one entry per user")
    p_tx = tuple(
        transmit_power(user, tau0, p0, qk) for user, qk in zip(config.users, q)
    )
    policy = AllocationPolicy(tau0=tau0, p0=p0, q=tuple(q), rate=tuple(rates), p_tx=p_tx)
    validate_policy(policy, config, check_avg_power=check_avg_power)
    return policy


def validate_policy(
    policy: AllocationPolicy,
    config: NetworkConfig,
    rel_tol: float = 1e-9,
    check_avg_power: bool = True,
) -> None:
    """Check a policy against a config: user count, the power caps, and
    per-user energy neutrality to within rel_tol."""
    if policy.num_users != config.num_users:
        raise ValueError(
            f"policy has {policy.num_users} users, config has {config.num_users}"
        )
    slack = 1.0 + rel_tol
    if policy.p0 > config.p_max * slack:
        raise ValueError(f"policy violates peak power: p0={policy.p0!r} > {config.p_max!r}")
    if check_avg_power and policy.p0 * policy.tau0 > config.p_avg * slack:
        raise ValueError(
            f"policy violates average power: p0*tau0={policy.p0 * policy.tau0!r} > {config.p_avg!r}"
        )
    for k, user in enumerate(config.users):
        harvested = user.eta * policy.p0 * policy.tau0 * user.omega
        spent = policy.p_tx[k] * (1.0 - policy.tau0) * policy.q[k]
        if abs(harvested - spent) > rel_tol * max(abs(harvested), abs(spent)):
            raise ValueError(
                f"policy violates energy neutrality for user {k}: "
                f"harvested={harvested!r}, spent={spent!r}"
            )


CONFIG_FILE_KEYS = ("K", "r1", "r2", "m", "eta", "p_max", "p_avg", "n0", "channel_mode")

_CONFIG_PARSERS = {
    "K": int,
    "r1": float,
    "r2": float,
    "m": float,
    "eta": float,
    "p_max": float,
    "p_avg": float,
    "n0": float,
    "channel_mode": str,
}


def parse_config_file(path: str) -> dict:
    """Read a flat `key = value` config file.

    Recognized keys: K, r1, r2, m, eta, p_max, p_avg, n0, channel_mode.
    Blank lines and `#` comments are ignored.  Errors name the offending key.
    """
    values: dict = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(
                    f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}"
                )
            key, _, val = line.partition("=")
            key = key.strip()
            val = val.strip()
            if key not in _CONFIG_PARSERS:
                raise ValueError(
                    f"{path}:{lineno}: unknown key {key!r} "
                    f"(expected one of {', '.join(CONFIG_FILE_KEYS)})"
                )
            try:
                parsed = _CONFIG_PARSERS[key](val)
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: bad value for key {key!r}: {val!r}") from exc
            if key == "channel_mode" and parsed not in CHANNEL_MODES:
                raise ValueError(
                    f"{path}:{lineno}: bad value for key 'channel_mode': {val!r} "
                    f"(expected one of {', '.join(CHANNEL_MODES)})"
                )
            values[key] = parsed
    return values
