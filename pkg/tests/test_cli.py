"""CLI and experiment-runner contracts: sweep rows, CSV schema, config
precedence, determinism, figure output, and exit codes."""

import io

import pytest

from wpcn_aloha.cli import (
    ExperimentSpec,
    emit_policy,
    main,
    run_sweep,
    write_sweep_csv,
)
from wpcn_aloha.simulator import TRACE_CSV_HEADER


def rows_by(rows, **match):
    out = [r for r in rows if all(r[k] == v for k, v in match.items())]
    assert out, f"no row matching {match}"
    return out


# ------------------------------------------------------------------- spec

def test_spec_validation():
    with pytest.raises(ValueError):
        ExperimentSpec(k_values=())
    with pytest.raises(ValueError):
        ExperimentSpec(k_values=(3,))
    with pytest.raises(ValueError):
        ExperimentSpec(k_values=(2,), schemes=())
    with pytest.raises(ValueError):
        ExperimentSpec(k_values=(2,), schemes=("greedy",))
    with pytest.raises(ValueError):
        ExperimentSpec(k_values=(2,), simulate=True, slots=0)


# ------------------------------------------------------------------ sweep

def test_sweep_rows_and_ordering():
    spec = ExperimentSpec(k_values=(2, 4), schemes=("proposed", "benchmark"))
    rows = run_sweep(spec)
    assert [(r["K"], r["scheme"]) for r in rows] == [
        (2, "proposed"), (2, "benchmark"), (4, "proposed"), (4, "benchmark"),
    ]
    for k in (2, 4):
        proposed = rows_by(rows, K=k, scheme="proposed")[0]
        benchmark = rows_by(rows, K=k, scheme="benchmark")[0]
        assert proposed["sum_throughput"] >= benchmark["sum_throughput"]
        assert proposed["jain"] >= benchmark["jain"]


def test_sweep_simulated_rows():
    spec = ExperimentSpec(k_values=(2,), schemes=("proposed",), simulate=True,
                          slots=20_000, seed=5)
    rows = run_sweep(spec)
    assert [r["source"] for r in rows] == ["analytic", "simulated"]
    analytic, simulated = rows
    assert simulated["tau0"] == analytic["tau0"]
    assert simulated["sum_throughput"] == pytest.approx(
        analytic["sum_throughput"], rel=0.05
    )


def test_sweep_csv_header_exact():
    spec = ExperimentSpec(k_values=(2, 4), schemes=("proposed",))
    rows = run_sweep(spec)
    buffer = io.StringIO()
    write_sweep_csv(rows, buffer)
    header = buffer.getvalue().split("\n", 1)[0]
    assert header == ("K,scheme,channel,source,tau0,p0,sum_throughput,jain,"
                      "q_1,q_2,q_3,q_4,R_1,R_2,R_3,R_4")


def test_sweep_failure_reported_per_row():
    # benchmark needs p_avg < p_max: the point fails, the sweep continues
    spec = ExperimentSpec(k_values=(2,), schemes=("benchmark", "proposed"),
                          p_avg=5.0, p_max=5.0)
    rows = run_sweep(spec)
    assert rows[0]["error"] is not None
    assert rows[1]["error"] is None


# ------------------------------------------------------------- emit_policy

def test_emit_policy_proposed():
    spec = ExperimentSpec(k_values=(2,), schemes=("proposed",))
    row = emit_policy(spec, 2, "proposed")
    assert row["p0"] == 5.0
    assert row["case"] == "case2_clamped"
    assert len(row["q"]) == len(row["rates"]) == len(row["p_tx"]) == 2


def test_emit_policy_benchmark():
    spec = ExperimentSpec(k_values=(4,), schemes=("benchmark",))
    row = emit_policy(spec, 4, "benchmark")
    assert row["tau0"] == pytest.approx(0.2, abs=1e-15)
    assert all(q == 0.25 for q in row["q"])
    assert row["case"] == ""


def test_emit_policy_interior_residual():
    spec = ExperimentSpec(k_values=(2,), schemes=("proposed",), p_avg=5.0)
    row = emit_policy(spec, 2, "proposed")
    assert row["case"] == "case1_interior"
    assert row["residual_norm"] <= 1e-6


# ------------------------------------------------------------ CLI surface

def test_cli_policy_stdout(capsys):
    code = main(["policy", "--k", "2", "--scheme", "proposed"])
    captured = capsys.readouterr()
    assert code == 0
    lines = captured.out.strip().split("\n")
    assert lines[0].startswith("K,scheme,channel,case,residual_norm,tau0,p0")
    assert lines[1].split(",")[:4] == ["2", "proposed", "nakagami", "case2_clamped"]


def test_cli_sweep_deterministic_bytes(tmp_path):
    args = ["sweep", "--k-list", "2", "--scheme", "proposed,benchmark",
            "--simulate", "--slots", "20000", "--seed", "3"]
    out1 = tmp_path / "a.csv"
    out2 = tmp_path / "b.csv"
    assert main(args + ["--out", str(out1)]) == 0
    assert main(args + ["--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    assert out1.read_bytes().startswith(b"K,scheme,channel,source,")


def test_cli_sweep_seed_changes_simulated_rows(tmp_path):
    args = ["sweep", "--k-list", "2", "--scheme", "proposed", "--simulate",
            "--slots", "20000"]
    out1 = tmp_path / "a.csv"
    out2 = tmp_path / "b.csv"
    assert main(args + ["--seed", "3", "--out", str(out1)]) == 0
    assert main(args + ["--seed", "4", "--out", str(out2)]) == 0
    assert out1.read_bytes() != out2.read_bytes()


def test_cli_config_file_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "net.cfg"
    cfg.write_text("K = 4\nr2 = 12.5\np_max = 5\np_avg = 1\n")
    code = main(["policy", "--config", str(cfg), "--k", "4", "--scheme", "benchmark"])
    assert code == 0
    out = capsys.readouterr().out
    # benchmark reference radius uses the config's r2 = 12.5
    row = out.strip().split("\n")[1].split(",")
    assert row[0] == "4"

    # explicit flag overrides the config file
    code = main(["policy", "--config", str(cfg), "--r2", "20", "--k", "2"])
    assert code == 0


def test_cli_config_file_k_default(tmp_path):
    cfg = tmp_path / "net.cfg"
    cfg.write_text("K = 4\n")
    out = tmp_path / "o.csv"
    assert main(["sweep", "--config", str(cfg), "--scheme", "proposed",
                 "--out", str(out)]) == 0
    body = out.read_text().strip().split("\n")
    assert len(body) == 2  # header + single K=4 row
    assert body[1].startswith("4,proposed")


def test_cli_bad_config_key_exit_code(tmp_path, capsys):
    cfg = tmp_path / "net.cfg"
    cfg.write_text("bandwidth = 10\n")
    code = main(["policy", "--config", str(cfg)])
    assert code == 2
    assert "bandwidth" in capsys.readouterr().err


def test_cli_empty_scheme_usage_error():
    with pytest.raises(SystemExit) as excinfo:
        main(["sweep", "--scheme", ""])
    assert excinfo.value.code == 2


def test_cli_odd_k_usage_error(capsys):
    code = main(["sweep", "--k-list", "3", "--scheme", "proposed"])
    assert code == 2
    assert "even" in capsys.readouterr().err


def test_cli_failure_exit_code(tmp_path, capsys):
    out = tmp_path / "o.csv"
    code = main(["sweep", "--k-list", "2", "--scheme", "benchmark",
                 "--pavg", "5", "--out", str(out)])
    assert code == 1
    assert "error:" in capsys.readouterr().err
    body = out.read_text().strip().split("\n")
    assert body[1].startswith("2,benchmark,nakagami,analytic,,")


def test_cli_simulate_trace(tmp_path, capsys):
    out = tmp_path / "trace.csv"
    code = main(["simulate", "--k", "2", "--scheme", "proposed",
                 "--slots", "5000", "--battery", "tracked", "--out", str(out)])
    assert code == 0
    lines = out.read_text().strip().split("\n")
    assert lines[0] == ",".join(TRACE_CSV_HEADER)
    assert len(lines) == 3
    assert "analytic sum=" in capsys.readouterr().err


def test_cli_figures_written(tmp_path):
    figs = tmp_path / "figs"
    out = tmp_path / "o.csv"
    code = main(["sweep", "--k-list", "2,4", "--scheme", "proposed,benchmark",
                 "--out", str(out), "--fig-dir", str(figs)])
    assert code == 0
    for stem in ("throughput_vs_k", "jain_vs_k"):
        for ext in ("png", "pdf"):
            path = figs / f"{stem}.{ext}"
            assert path.exists() and path.stat().st_size > 0


def test_cli_static_scheme_channel_column(tmp_path):
    out = tmp_path / "o.csv"
    assert main(["sweep", "--k-list", "2", "--scheme", "static",
                 "--out", str(out)]) == 0
    body = out.read_text().strip().split("\n")
    assert body[1].startswith("2,static,static,analytic")
