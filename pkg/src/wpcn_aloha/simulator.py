"""Seeded slot-level Monte-Carlo of the harvest-then-contend protocol.

Each slot: every user harvests from the broadcast (its own downlink fading
draw), flips a Bernoulli coin for channel access, and, if it transmits,
succeeds exactly when it was the sole transmitter and its uplink draw
clears the outage threshold.  Two or more simultaneous transmitters always
collide.  In tracked-battery mode a user that wants to transmit but cannot
afford the slot's transmit energy stays silent and the event is counted as
energy-blocked; the attempt still counts toward its Bernoulli statistics.

Every user consumes its own PCG64 substream spawned from the master seed
(draw order per user: downlink gains, uplink gains, access coins), so a
trace is reproducible bit-for-bit regardless of how users are iterated.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import IO, Iterable

import numpy as np

from .analysis import PerformanceReport, report_from_throughputs
from .model import AllocationPolicy, NetworkConfig, UserProfile, validate_policy

__all__ = [
    "SimulationTrace",
    "BATTERY_MODES",
    "sample_channel_power",
    "simulate",
    "aggregate",
    "write_trace_csv",
    "TRACE_CSV_HEADER",
]

BATTERY_MODES = ("ideal", "tracked")

TRACE_CSV_HEADER = (
    "user",
    "attempts",
    "successes",
    "collisions",
    "outages",
    "energy_blocked",
    "emp_throughput",
    "final_battery",
)

# Boundary convention shared with the analytic model: a rate exactly at
# capacity counts as non-outage (matters only for the static channel).
_OUTAGE_SLACK = 1e-12


@dataclass(frozen=True)
class SimulationTrace:
    """Per-user accounting of one simulation run.

    attempts = successes + collisions_participated + outages + energy_blocked
    holds per user; empirical_throughput is successes * (1 - tau0) * rate / slots.
    final_battery is harvested minus spent energy (watt-slots) and may be
    negative only in ideal mode, where energy is not enforced.
    """

    slots: int
    seed: int
    battery_mode: str
    successes: tuple[int, ...]
    collisions_participated: tuple[int, ...]
    outages: tuple[int, ...]
    energy_blocked: tuple[int, ...]
    attempts: tuple[int, ...]
    empirical_throughput: tuple[float, ...]
    final_battery: tuple[float, ...]

    @property
    def num_users(self) -> int:
        return len(self.successes)


def sample_channel_power(
    user: UserProfile,
    rng: np.random.Generator,
    size: int | None = None,
    static: bool = False,
) -> float | np.ndarray:
    """Fading power gain draw(s) for one link of a user.

    Nakagami-m envelope fading makes the power gain gamma-distributed with
    shape m and mean omega; the static channel returns omega itself.
    """
    if static:
        if size is None:
            return user.omega
        return np.full(size, user.omega)
    return rng.gamma(shape=user.m, scale=user.omega / user.m, size=size)


def simulate(
    config: NetworkConfig,
    policy: AllocationPolicy,
    slots: int,
    seed: int,
    battery_mode: str = "ideal",
    initial_battery: float = 0.0,
) -> tuple[SimulationTrace, PerformanceReport]:
    """Run the protocol for `slots` slots and return (trace, report).

    battery_mode 'ideal' lets every access attempt transmit; 'tracked'
    starts each battery at initial_battery joules and blocks attempts the
    battery cannot fund.  Deterministic given (seed, config, policy,
    slots, battery_mode, initial_battery).
    """
    if slots < 1:
        raise ValueError(f"simulate: slots={slots!r} must be >= 1")
    if battery_mode not in BATTERY_MODES:
        raise ValueError(f"simulate: battery_mode={battery_mode!r} not in {BATTERY_MODES}")
    validate_policy(policy, config)

    K = config.num_users
    static = config.channel_mode == "static"
    tau0 = policy.tau0
    children = np.random.SeedSequence(seed).spawn(K)

    tx = np.zeros((K, slots), dtype=bool)
    no_outage = np.zeros((K, slots), dtype=bool)
    attempts = [0] * K
    blocked = [0] * K
    transmissions = [0] * K
    final_battery = [0.0] * K

    for k in range(K):
        user = config.users[k]
        rng = np.random.Generator(np.random.PCG64(children[k]))
        down = sample_channel_power(user, rng, size=slots, static=static)
        up = sample_channel_power(user, rng, size=slots, static=static)
        wants = rng.random(slots) < policy.q[k]
        attempts[k] = int(wants.sum())

        harvest = user.eta * policy.p0 * tau0 * down
        cost = policy.p_tx[k] * (1.0 - tau0)
        if battery_mode == "ideal":
            tx[k] = wants
            transmissions[k] = attempts[k]
        else:
            stored = np.cumsum(harvest)
            row = tx[k]
            n_tx = 0
            for i in np.flatnonzero(wants):
                if initial_battery + stored[i] - cost * n_tx >= cost:
                    row[i] = True
                    n_tx += 1
                else:
                    blocked[k] += 1
            transmissions[k] = n_tx
        final_battery[k] = float(
            initial_battery + harvest.sum() - cost * transmissions[k]
        )
        capacity = np.log2(1.0 + policy.p_tx[k] * up / config.n0)
        no_outage[k] = capacity + _OUTAGE_SLACK >= policy.rate[k]

    transmitters = tx.sum(axis=0)
    alone = transmitters == 1
    crowded = transmitters >= 2

    successes = [0] * K
    outages = [0] * K
    collisions = [0] * K
    empirical = [0.0] * K
    for k in range(K):
        solo = tx[k] & alone
        successes[k] = int((solo & no_outage[k]).sum())
        outages[k] = int((solo & ~no_outage[k]).sum())
        collisions[k] = int((tx[k] & crowded).sum())
        empirical[k] = successes[k] * (1.0 - tau0) * policy.rate[k] / slots

    trace = SimulationTrace(
        slots=slots,
        seed=seed,
        battery_mode=battery_mode,
        successes=tuple(successes),
        collisions_participated=tuple(collisions),
        outages=tuple(outages),
        energy_blocked=tuple(blocked),
        attempts=tuple(attempts),
        empirical_throughput=tuple(empirical),
        final_battery=tuple(final_battery),
    )
    return trace, aggregate(trace, policy)


def aggregate(trace: SimulationTrace, policy: AllocationPolicy) -> PerformanceReport:
    """Fold a trace into a PerformanceReport (source 'simulated')."""
    if trace.num_users != policy.num_users:
        raise ValueError("aggregate: trace and policy disagree on user count")
    return report_from_throughputs(trace.empirical_throughput, "simulated")


def _trace_rows(trace: SimulationTrace) -> Iterable[list]:
    for k in range(trace.num_users):
        yield [
            k + 1,
            trace.attempts[k],
            trace.successes[k],
            trace.collisions_participated[k],
            trace.outages[k],
            trace.energy_blocked[k],
            f"{trace.empirical_throughput[k]:.12g}",
            f"{trace.final_battery[k]:.12g}",
        ]


def write_trace_csv(trace: SimulationTrace, stream: IO[str]) -> None:
    """Write the per-user trace table (one row per user, 1-based index)."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(TRACE_CSV_HEADER)
    for row in _trace_rows(trace):
        writer.writerow(row)
