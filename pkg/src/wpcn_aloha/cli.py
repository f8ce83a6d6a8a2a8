"""Experiment runner.

Subcommands:
  sweep     solve (and optionally simulate) every (K, scheme) point and
            write one CSV row per (K, scheme, source); optionally render
            the two report figures next to the CSV.
  policy    solve one (K, scheme) point and print the full allocation with
            solver diagnostics as a one-row CSV.
  simulate  solve one point, run the slot-level simulation, and write the
            per-user trace CSV.

Defaults reproduce the reference study: two rings at 10 m and 20 m,
fading parameter 3, unit conversion efficiency, peak power 5 W, average
power 1 W, noise 1e-12 W.  A flat `key = value` config file can override
the physics; explicit command-line flags override the config file.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from dataclasses import dataclass
from typing import IO, Sequence

from .analysis import analytic_report
from .figures import render_sweep_figures
from .model import CHANNEL_MODES, build_config, parse_config_file
from .simulator import BATTERY_MODES, simulate, write_trace_csv
from .solver import solve_benchmark, solve_static, solve_proportional_fair

__all__ = ["ExperimentSpec", "run_sweep", "emit_policy", "write_sweep_csv", "main"]

SCHEMES = ("proposed", "benchmark", "static")

_DEFAULTS = {
    "r1": 10.0,
    "r2": 20.0,
    "m": 3.0,
    "eta": 1.0,
    "p_max": 5.0,
    "p_avg": 1.0,
    "n0": 1e-12,
    "channel_mode": "nakagami",
}
_DEFAULT_K_LIST = (2, 4, 6, 8, 10, 12, 14, 16)


@dataclass(frozen=True)
class ExperimentSpec:
    """One sweep: K values, topology, physics, schemes, and simulation knobs."""

    k_values: tuple[int, ...] = _DEFAULT_K_LIST
    r1: float = 10.0
    r2: float = 20.0
    m: float = 3.0
    eta: float = 1.0
    p_max: float = 5.0
    p_avg: float = 1.0
    n0: float = 1e-12
    channel_mode: str = "nakagami"
    schemes: tuple[str, ...] = SCHEMES
    simulate: bool = False
    slots: int = 200_000
    seed: int = 1
    battery_mode: str = "ideal"

    def __post_init__(self) -> None:
        object.__setattr__(self, "k_values", tuple(self.k_values))
        object.__setattr__(self, "schemes", tuple(self.schemes))
        if not self.k_values:
            raise ValueError("ExperimentSpec: k_values must be non-empty")
        for k in self.k_values:
            if k < 2 or k % 2 != 0:
                raise ValueError(f"ExperimentSpec: K={k} must be even and >= 2")
        if not self.schemes:
            raise ValueError("ExperimentSpec: schemes must be non-empty")
        for scheme in self.schemes:
            if scheme not in SCHEMES:
                raise ValueError(f"ExperimentSpec: unknown scheme {scheme!r}")
        if self.channel_mode not in CHANNEL_MODES:
            raise ValueError(f"ExperimentSpec: unknown channel mode {self.channel_mode!r}")
        if self.battery_mode not in BATTERY_MODES:
            raise ValueError(f"ExperimentSpec: unknown battery mode {self.battery_mode!r}")
        if self.simulate and self.slots < 1:
            raise ValueError("ExperimentSpec: slots must be >= 1 when simulating")


def _solve_point(spec: ExperimentSpec, k: int, scheme: str):
    """Build the config for one sweep point and solve its policy.

    The 'static' scheme is the proposed allocation on the no-fading
    channel; 'proposed' honors the experiment's channel mode.
    """
    channel = "static" if scheme == "static" else spec.channel_mode
    config = build_config(
        k, spec.r1, spec.r2, m=spec.m, eta=spec.eta,
        p_max=spec.p_max, p_avg=spec.p_avg, n0=spec.n0, channel_mode=channel,
    )
    diagnostics = None
    if scheme == "benchmark":
        policy = solve_benchmark(config, spec.r1, spec.r2)
    elif channel == "static":
        policy = solve_static(config)
    else:
        policy, diagnostics = solve_proportional_fair(config)
    return config, policy, diagnostics


def _row(
    k: int, scheme: str, channel: str, source: str,
    policy=None, report=None, error: str | None = None,
) -> dict:
    row = {
        "K": k,
        "scheme": scheme,
        "channel": channel,
        "source": source,
        "error": error,
    }
    if policy is not None and report is not None:
        row.update(
            tau0=policy.tau0,
            p0=policy.p0,
            sum_throughput=report.sum_throughput,
            jain=report.jain_index,
            q=list(policy.q),
            rates=list(policy.rate),
        )
    return row


def run_sweep(spec: ExperimentSpec) -> list[dict]:
    """Solve every (K, scheme) point; one result row per (K, scheme, source).

    A failed point is reported in its row's `error` field (and on stderr by
    the CLI) without aborting the rest of the sweep.  Simulated rows use
    seed + <row index> so points get independent, reproducible streams.
    """
    rows: list[dict] = []
    point_index = 0
    for k in spec.k_values:
        for scheme in spec.schemes:
            channel = "static" if scheme == "static" else spec.channel_mode
            try:
                config, policy, _ = _solve_point(spec, k, scheme)
            except Exception as exc:  # noqa: BLE001 - reported per row
                rows.append(_row(k, scheme, channel, "analytic", error=str(exc)))
                if spec.simulate:
                    rows.append(_row(k, scheme, channel, "simulated", error=str(exc)))
                point_index += 1
                continue
            rows.append(_row(k, scheme, channel, "analytic",
                             policy, analytic_report(policy, config)))
            if spec.simulate:
                _, report = simulate(
                    config, policy, spec.slots, spec.seed + point_index,
                    battery_mode=spec.battery_mode,
                )
                rows.append(_row(k, scheme, channel, "simulated", policy, report))
            point_index += 1
    return rows


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def write_sweep_csv(rows: Sequence[dict], stream: IO[str]) -> None:
    """Write sweep rows with the stable header
    K,scheme,channel,source,tau0,p0,sum_throughput,jain,q_1..q_K,R_1..R_K
    where K in the header is the largest K among the rows."""
    k_max = max((row["K"] for row in rows), default=0)
    header = ["K", "scheme", "channel", "source", "tau0", "p0", "sum_throughput", "jain"]
    header += [f"q_{i}" for i in range(1, k_max + 1)]
    header += [f"R_{i}" for i in range(1, k_max + 1)]
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        cells = [row["K"], row["scheme"], row["channel"], row["source"]]
        if row.get("error"):
            cells += [""] * (4 + 2 * k_max)
        else:
            cells += [_fmt(row["tau0"]), _fmt(row["p0"]),
                      _fmt(row["sum_throughput"]), _fmt(row["jain"])]
            qs = row["q"]
            rates = row["rates"]
            cells += [_fmt(v) for v in qs] + [""] * (k_max - len(qs))
            cells += [_fmt(v) for v in rates] + [""] * (k_max - len(rates))
        writer.writerow(cells)


def emit_policy(spec: ExperimentSpec, k: int, scheme: str) -> dict:
    """Solve one point and return the full allocation row, including the
    per-user transmit powers and solver diagnostics."""
    config, policy, diagnostics = _solve_point(spec, k, scheme)
    return {
        "K": k,
        "scheme": scheme,
        "channel": config.channel_mode,
        "case": diagnostics.case_taken if diagnostics else "",
        "residual_norm": diagnostics.residual_norm if diagnostics else None,
        "tau0": policy.tau0,
        "p0": policy.p0,
        "q": list(policy.q),
        "rates": list(policy.rate),
        "p_tx": list(policy.p_tx),
    }


def write_policy_csv(row: dict, stream: IO[str]) -> None:
    k = row["K"]
    header = ["K", "scheme", "channel", "case", "residual_norm", "tau0", "p0"]
    header += [f"q_{i}" for i in range(1, k + 1)]
    header += [f"R_{i}" for i in range(1, k + 1)]
    header += [f"Ptx_{i}" for i in range(1, k + 1)]
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(header)
    cells = [row["K"], row["scheme"], row["channel"], row["case"], _fmt(row["residual_norm"]),
             _fmt(row["tau0"]), _fmt(row["p0"])]
    cells += [_fmt(v) for v in row["q"]]
    cells += [_fmt(v) for v in row["rates"]]
    cells += [_fmt(v) for v in row["p_tx"]]
    writer.writerow(cells)


def _add_common_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat key = value config file")
    parser.add_argument("--r1", type=float, help="inner ring radius [m] (default 10)")
    parser.add_argument("--r2", type=float, help="outer ring radius [m] (default 20)")
    parser.add_argument("--m", type=float, help="Nakagami fading parameter (default 3)")
    parser.add_argument("--eta", type=float, help="energy conversion efficiency (default 1)")
    parser.add_argument("--pmax", type=float, help="peak BS power [W] (default 5)")
    parser.add_argument("--pavg", type=float, help="average BS power [W] (default 1)")
    parser.add_argument("--n0", type=float, help="noise power [W] (default 1e-12)")
    parser.add_argument("--channel", choices=CHANNEL_MODES,
                        help="channel mode (default nakagami)")
    parser.add_argument("--seed", type=int, default=1, help="master RNG seed (default 1)")
    parser.add_argument("--out", help="output file (default stdout)")


def _parse_k_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad K list {text!r}") from exc


def _parse_schemes(text: str) -> tuple[str, ...]:
    schemes = tuple(part.strip() for part in text.split(",") if part.strip())
    if not schemes:
        raise argparse.ArgumentTypeError("scheme list is empty")
    for scheme in schemes:
        if scheme not in SCHEMES:
            raise argparse.ArgumentTypeError(
                f"unknown scheme {scheme!r} (choose from {', '.join(SCHEMES)})"
            )
    return schemes


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wpcn-aloha",
        description="Proportionally fair allocations for an RF-energy-harvesting "
                    "slotted-ALOHA network, with slot-level validation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sweep = sub.add_parser("sweep", help="sweep K and schemes; emit CSV (and figures)")
    _add_common_options(p_sweep)
    p_sweep.add_argument("--k-list", type=_parse_k_list,
                         help="comma-separated even user counts (default 2,4,...,16)")
    p_sweep.add_argument("--scheme", type=_parse_schemes,
                         help="comma-separated subset of proposed,benchmark,static "
                              "(default all)")
    p_sweep.add_argument("--simulate", action="store_true",
                         help="append simulated rows to the analytic ones")
    p_sweep.add_argument("--slots", type=int, default=200_000,
                         help="slots per simulated point (default 200000)")
    p_sweep.add_argument("--battery", choices=BATTERY_MODES, default="ideal",
                         help="battery accounting for simulated rows (default ideal)")
    p_sweep.add_argument("--fig-dir", help="directory for rendered figures (enables plotting)")

    p_policy = sub.add_parser("policy", help="solve one point; print the allocation")
    _add_common_options(p_policy)
    p_policy.add_argument("--k", type=int,
                          help="number of users (default: config K, else 2)")
    p_policy.add_argument("--scheme", choices=SCHEMES, default="proposed")

    p_sim = sub.add_parser("simulate", help="simulate one point; write the trace CSV")
    _add_common_options(p_sim)
    p_sim.add_argument("--k", type=int,
                       help="number of users (default: config K, else 2)")
    p_sim.add_argument("--scheme", choices=SCHEMES, default="proposed")
    p_sim.add_argument("--slots", type=int, default=200_000,
                       help="slots to simulate (default 200000)")
    p_sim.add_argument("--battery", choices=BATTERY_MODES, default="ideal")
    p_sim.add_argument("--initial-battery", type=float, default=0.0,
                       help="starting battery in tracked mode [J] (default 0)")
    return parser


_FLAG_TO_KEY = {
    "r1": "r1", "r2": "r2", "m": "m", "eta": "eta",
    "pmax": "p_max", "pavg": "p_avg", "n0": "n0", "channel": "channel_mode",
}


def _resolve_params(args: argparse.Namespace) -> dict:
    """defaults < config file < explicit flags."""
    params = dict(_DEFAULTS)
    if args.config:
        params.update(parse_config_file(args.config))
    for flag, key in _FLAG_TO_KEY.items():
        value = getattr(args, flag, None)
        if value is not None:
            params[key] = value
    return params


def _spec_from_args(args: argparse.Namespace) -> ExperimentSpec:
    params = dict(_resolve_params(args))
    config_k = params.pop("K", None)
    k_values = getattr(args, "k_list", None)
    if k_values is None:
        k_values = (config_k,) if config_k is not None else _DEFAULT_K_LIST
    schemes = getattr(args, "scheme", None)
    if schemes is None:
        schemes = SCHEMES
    elif isinstance(schemes, str):
        schemes = (schemes,)
    return ExperimentSpec(
        k_values=tuple(k_values),
        schemes=tuple(schemes),
        simulate=getattr(args, "simulate", False),
        slots=getattr(args, "slots", 200_000),
        seed=args.seed,
        battery_mode=getattr(args, "battery", "ideal"),
        **params,
    )


def _open_out(path: str | None):
    if path:
        parent = os.path.dirname(path)
        if parent:
            os.makedirs(parent, exist_ok=True)
        return open(path, "w", encoding="utf-8", newline="")
    return None


def _cmd_sweep(args: argparse.Namespace) -> int:
    spec = _spec_from_args(args)
    rows = run_sweep(spec)
    failures = [row for row in rows if row.get("error")]
    for row in failures:
        print(
            f"error: K={row['K']} scheme={row['scheme']}: {row['error']}",
            file=sys.stderr,
        )
    out = _open_out(args.out)
    try:
        write_sweep_csv(rows, out if out else sys.stdout)
    finally:
        if out:
            out.close()
    if args.fig_dir:
        for path in render_sweep_figures(rows, args.fig_dir):
            print(f"wrote {path}", file=sys.stderr)
    return 1 if failures else 0


def _single_point_spec(args: argparse.Namespace) -> tuple[ExperimentSpec, int]:
    params = dict(_resolve_params(args))
    config_k = params.pop("K", None)
    k = args.k if args.k is not None else (config_k if config_k is not None else 2)
    spec = ExperimentSpec(
        k_values=(k,),
        schemes=(args.scheme,),
        slots=getattr(args, "slots", 200_000),
        seed=args.seed,
        battery_mode=getattr(args, "battery", "ideal"),
        **params,
    )
    return spec, k


def _cmd_policy(args: argparse.Namespace) -> int:
    spec, k = _single_point_spec(args)
    try:
        row = emit_policy(spec, k, args.scheme)
    except Exception as exc:  # noqa: BLE001 - surfaced as exit status
        print(f"error: {exc}", file=sys.stderr)
        return 1
    out = _open_out(args.out)
    try:
        write_policy_csv(row, out if out else sys.stdout)
    finally:
        if out:
            out.close()
    return 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    spec, k = _single_point_spec(args)
    try:
        config, policy, _ = _solve_point(spec, k, args.scheme)
    except Exception as exc:  # noqa: BLE001
        print(f"error: {exc}", file=sys.stderr)
        return 1
    trace, report = simulate(
        config, policy, args.slots, args.seed,
        battery_mode=args.battery, initial_battery=args.initial_battery,
    )
    out = _open_out(args.out)
    try:
        write_trace_csv(trace, out if out else sys.stdout)
    finally:
        if out:
            out.close()
    analytic = analytic_report(policy, config)
    print(
        f"analytic sum={analytic.sum_throughput:.6g} jain={analytic.jain_index:.6g}; "
        f"simulated sum={report.sum_throughput:.6g} jain={report.jain_index:.6g}",
        file=sys.stderr,
    )
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "sweep":
            return _cmd_sweep(args)
        if args.command == "policy":
            return _cmd_policy(args)
        if args.command == "simulate":
            return _cmd_simulate(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
