"""End-to-end CLI behavior: subcommands, exit codes, file outputs."""

import numpy as np
import pytest

from pushsched.cli import main
from pushsched.pushsim import gen_periodic_trace
from pushsched.trace import parse_trace_csv, write_trace_csv

WEEKDAY_9_TO_17 = [d * 24 + h for d in range(5) for h in range(9, 18)]


def _synthetic_csv(path, rate=4.0, weeks=12, seed=0, user_id="synthetic"):
    profile = np.zeros(168)
    profile[WEEKDAY_9_TO_17] = rate
    trace = gen_periodic_trace(profile, weeks, seed=seed, user_id=user_id)
    write_trace_csv([trace], path)
    return trace


def _write_message(path, date_line):
    path.write_text(f"Date: {date_line}\nFrom: a@b.c\n\nbody\n", encoding="utf-8")


# --- ingest -------------------------------------------------------------------

def test_ingest_csv_is_idempotent(tmp_path):
    raw = tmp_path / "raw.csv"
    raw.write_text("u2,9999\nu1,3600\nu1,0\n", encoding="utf-8")
    first = tmp_path / "first.csv"
    second = tmp_path / "second.csv"
    assert main(["ingest", str(raw), "--out", str(first)]) == 0
    assert main(["ingest", str(first), "--out", str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()
    traces = parse_trace_csv(first.read_text())
    assert [t.user_id for t in traces] == ["u1", "u2"]
    assert traces[0].arrivals == (0, 3600)


def test_ingest_maildir(tmp_path, capsys):
    root = tmp_path / "mail"
    for user, hour in (("alice", 1), ("bob", 2)):
        box = root / user
        box.mkdir(parents=True)
        _write_message(box / "1.", f"Mon, 5 Jan 1970 0{hour}:00:00 +0000")
    out = tmp_path / "trace.csv"
    assert main(["ingest", str(root), "--out", str(out), "--tz-offset", "0"]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "user,timestamp"
    assert lines[1:] == ["alice,349200", "bob,352800"]


def test_ingest_empty_directory_warns(tmp_path, capsys):
    root = tmp_path / "empty"
    root.mkdir()
    out = tmp_path / "trace.csv"
    assert main(["ingest", str(root), "--out", str(out)]) == 0
    assert out.read_text() == "user,timestamp\n"
    assert "no" in capsys.readouterr().err


def test_ingest_missing_path_exits_2(tmp_path):
    assert main(["ingest", str(tmp_path / "nope"), "--out", str(tmp_path / "o.csv")]) == 2


def test_ingest_malformed_csv_exits_2(tmp_path):
    raw = tmp_path / "raw.csv"
    raw.write_text("u1,notanumber\n", encoding="utf-8")
    assert main(["ingest", str(raw), "--out", str(tmp_path / "o.csv")]) == 2


# --- stats --------------------------------------------------------------------

def test_stats_outputs_per_user_iit(tmp_path):
    raw = tmp_path / "trace.csv"
    raw.write_text("u1,0\nu1,3600\nu1,10800\nu2,50\n", encoding="utf-8")
    out = tmp_path / "stats.csv"
    assert main(["stats", str(raw), "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "user,message_count,mean_iit_hours,std_iit_hours"
    assert lines[1] == "u1,3,1.5,0.5"
    assert lines[2] == "u2,1,0,0"


def test_stats_renders_figures(tmp_path):
    csv = tmp_path / "trace.csv"
    _synthetic_csv(csv, weeks=4)
    figdir = tmp_path / "figs"
    out = tmp_path / "stats.csv"
    assert main(["stats", str(csv), "--out", str(out), "--figdir", str(figdir)]) == 0
    profile_png = figdir / "week_profile.png"
    iit_png = figdir / "iit_hist.png"
    assert profile_png.is_file() and profile_png.stat().st_size > 0
    assert iit_png.is_file() and iit_png.stat().st_size > 0


# --- sweep --------------------------------------------------------------------

def test_sweep_fixed_full_grid(tmp_path):
    csv = tmp_path / "trace.csv"
    _synthetic_csv(csv)
    out = tmp_path / "curves"
    assert main(
        ["sweep", str(csv), "--method", "fixed", "--out", str(out), "--jobs", "1"]
    ) == 0
    agg = (out / "aggregate.csv").read_text().splitlines()
    assert len(agg) == 170  # header + k = 0..168
    curve = (out / "curve_synthetic.csv").read_text().splitlines()
    assert len(curve) == 170
    by_k = {int(line.split(",")[0]): line for line in curve[1:]}
    assert float(by_k[45].split(",")[2]) == 1.0  # all mass inside 45 hours
    assert float(by_k[0].split(",")[2]) == 0.0
    assert float(by_k[168].split(",")[2]) == 1.0
    # the tradeoff figure lands next to the CSVs by default
    assert (out / "tradeoff.png").stat().st_size > 0


def test_sweep_no_figs_flag(tmp_path):
    csv = tmp_path / "trace.csv"
    _synthetic_csv(csv, weeks=4)
    out = tmp_path / "curves"
    assert main(
        ["sweep", str(csv), "--method", "fixed", "--out", str(out),
         "--jobs", "1", "--no-figs"]
    ) == 0
    assert not (out / "tradeoff.png").exists()


def test_sweep_k_stride(tmp_path):
    csv = tmp_path / "trace.csv"
    _synthetic_csv(csv, weeks=6)
    out = tmp_path / "curves"
    assert main(
        ["sweep", str(csv), "--method", "adaptive", "--out", str(out),
         "--k-stride", "8", "--jobs", "1"]
    ) == 0
    agg = (out / "aggregate.csv").read_text().splitlines()
    assert len(agg) == 23  # header + k in {0, 8, ..., 168}


def test_sweep_skips_short_users_and_fails_when_none_left(tmp_path, capsys):
    raw = tmp_path / "trace.csv"
    raw.write_text("solo,345600\nsolo,349200\n", encoding="utf-8")  # one week only
    out = tmp_path / "curves"
    code = main(["sweep", str(raw), "--method", "fixed", "--out", str(out), "--jobs", "1"])
    assert code == 3
    assert "skipping solo" in capsys.readouterr().err


def test_sweep_parallel_matches_serial(tmp_path):
    csv = tmp_path / "trace.csv"
    profile = np.zeros(168)
    profile[WEEKDAY_9_TO_17] = 3.0
    traces = [
        gen_periodic_trace(profile, 8, seed=s, user_id=f"user{s}") for s in range(3)
    ]
    write_trace_csv(traces, csv)
    serial = tmp_path / "serial"
    parallel = tmp_path / "parallel"
    args = ["sweep", str(csv), "--method", "adaptive", "--k-stride", "4"]
    assert main(args + ["--out", str(serial), "--jobs", "1"]) == 0
    assert main(args + ["--out", str(parallel), "--jobs", "2"]) == 0
    names = ["aggregate.csv", "tradeoff.png"] + [f"curve_user{s}.csv" for s in range(3)]
    for name in names:
        assert (serial / name).read_bytes() == (parallel / name).read_bytes()


def test_sweep_schedule_out_and_figures(tmp_path):
    csv = tmp_path / "trace.csv"
    _synthetic_csv(csv)
    out = tmp_path / "curves"
    sched = tmp_path / "sched.csv"
    figdir = tmp_path / "figs"
    assert main(
        ["sweep", str(csv), "--method", "fixed", "--out", str(out), "--jobs", "1",
         "--schedule-out", str(sched), "--schedule-k", "45", "--figdir", str(figdir)]
    ) == 0
    hours = [int(x) for x in sched.read_text().splitlines() if not x.startswith("#")]
    assert sorted(hours) == WEEKDAY_9_TO_17
    assert (figdir / "tradeoff.png").stat().st_size > 0


# --- simulate -------------------------------------------------------------------

def test_simulate_short_poll_summary(tmp_path, capsys):
    out = tmp_path / "summary.csv"
    code = main(
        ["simulate", "--mode", "short_poll", "--period", "60", "--horizon", "86400",
         "--out", str(out)]
    )
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("mode,connections_opened")
    assert lines[1].split(",")[1] == "1441"
    assert "1441" in capsys.readouterr().out


def test_simulate_requires_horizon_without_trace(tmp_path):
    code = main(
        ["simulate", "--mode", "short_poll", "--period", "60",
         "--out", str(tmp_path / "s.csv")]
    )
    assert code == 2


def test_simulate_scheduled_needs_schedule(tmp_path):
    code = main(
        ["simulate", "--mode", "scheduled_push", "--horizon", "604800",
         "--out", str(tmp_path / "s.csv")]
    )
    assert code == 2


def test_simulate_rejects_unknown_mode(tmp_path):
    code = main(
        ["simulate", "--mode", "smoke_signals", "--horizon", "100",
         "--out", str(tmp_path / "s.csv")]
    )
    assert code == 2


def test_simulate_deterministic_outputs(tmp_path):
    results = []
    for name in ("a", "b"):
        d = tmp_path / name
        d.mkdir()
        code = main(
            ["simulate", "--mode", "long_poll", "--horizon", "86400",
             "--uniform", "500", "--seed", "9",
             "--out", str(d / "summary.csv"),
             "--delays-out", str(d / "delays.csv"),
             "--lifetimes-out", str(d / "lifetimes.csv"),
             "--figdir", str(d / "figs")]
        )
        assert code == 0
        results.append(d)
    for rel in ("summary.csv", "delays.csv", "lifetimes.csv",
                "figs/delay_hist.png", "figs/lifetime_hist.png"):
        assert (results[0] / rel).read_bytes() == (results[1] / rel).read_bytes()


def test_simulate_trace_replay_with_schedule(tmp_path):
    csv = tmp_path / "trace.csv"
    _synthetic_csv(csv, rate=6.0, weeks=6)
    out = tmp_path / "curves"
    sched = tmp_path / "sched.csv"
    assert main(
        ["sweep", str(csv), "--method", "fixed", "--fraction", "0.5",
         "--out", str(out), "--jobs", "1",
         "--schedule-out", str(sched), "--schedule-k", "45"]
    ) == 0
    summary = tmp_path / "summary.csv"
    code = main(
        ["simulate", "--mode", "scheduled_push", "--trace", str(csv),
         "--schedule", str(sched), "--rtt", "0", "--reconnect-delay", "0",
         "--hold-timeout", "inf", "--out", str(summary)]
    )
    assert code == 0
    row = summary.read_text().splitlines()[1].split(",")
    total, realtime = int(row[2]), int(row[3])
    assert total > 0
    # the learned 45-hour schedule covers the generating support exactly
    assert realtime == total


def test_simulate_trace_requires_user_when_ambiguous(tmp_path):
    csv = tmp_path / "trace.csv"
    csv.write_text("u1,345600\nu2,349200\n", encoding="utf-8")
    code = main(
        ["simulate", "--mode", "long_poll", "--trace", str(csv),
         "--out", str(tmp_path / "s.csv")]
    )
    assert code == 2


def test_simulate_uniform_and_trace_conflict(tmp_path):
    csv = tmp_path / "trace.csv"
    csv.write_text("u1,345600\n", encoding="utf-8")
    code = main(
        ["simulate", "--mode", "long_poll", "--trace", str(csv), "--uniform", "10",
         "--horizon", "1000", "--out", str(tmp_path / "s.csv")]
    )
    assert code == 2


def test_write_failure_exits_4(tmp_path):
    raw = tmp_path / "trace.csv"
    raw.write_text("u1,0\nu1,3600\n", encoding="utf-8")
    missing_dir = tmp_path / "not" / "created"
    assert main(["stats", str(raw), "--out", str(missing_dir / "s.csv")]) == 4


def test_no_command_prints_help(capsys):
    assert main([]) == 2
    assert "usage" in capsys.readouterr().err.lower()
