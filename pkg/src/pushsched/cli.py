"""Command-line pipeline: ingest -> stats/sweep -> simulate.

Each subcommand is one pipeline stage and writes machine-readable CSVs;
`--figdir` additionally renders PNG figures next to them. Diagnostics go
to stderr so stdout and the output files stay machine-consumable.

Exit codes: 0 success, 2 usage/validation error, 3 no eligible data,
4 I/O failure.
"""

from __future__ import annotations

import argparse
import math
import os
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import evaluator, learner, pushsim, trace
from .trace import HOURS_PER_WEEK, WEEK_SECONDS, _EPOCH_TO_MONDAY

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NO_DATA = 3
EXIT_IO = 4

DEFAULT_INGEST_TZ = -21600  # US Central standard time, no DST


class NoEligibleData(Exception):
    pass


def _warn(message: str) -> None:
    print(f"pushsched: {message}", file=sys.stderr)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pushsched",
        description="Learn hour-of-week arrival patterns, build push schedules, "
        "and simulate push-delivery protocols.",
    )
    sub = parser.add_subparsers(dest="command", metavar="command")

    p_ingest = sub.add_parser(
        "ingest", help="Convert a maildir tree or trace CSV to canonical trace CSV"
    )
    p_ingest.add_argument("input", help="maildir root directory or trace CSV file")
    p_ingest.add_argument("--out", required=True, help="canonical trace CSV to write")
    p_ingest.add_argument(
        "--tz-offset",
        type=int,
        default=DEFAULT_INGEST_TZ,
        help="seconds added to parsed UTC Date headers to get analysis-local "
        f"timestamps (maildir input only; default {DEFAULT_INGEST_TZ})",
    )
    p_ingest.set_defaults(handler=cmd_ingest)

    p_stats = sub.add_parser(
        "stats", help="Per-user inter-arrival statistics from a trace CSV"
    )
    p_stats.add_argument("trace", help="canonical trace CSV")
    p_stats.add_argument("--out", required=True, help="stats CSV to write")
    p_stats.add_argument("--tz-offset", type=int, default=0)
    p_stats.add_argument("--figdir", help="also render figures into this directory")
    p_stats.set_defaults(handler=cmd_stats)

    p_sweep = sub.add_parser(
        "sweep", help="Per-user k-sweep tradeoff curves plus the user aggregate"
    )
    p_sweep.add_argument("trace", help="canonical trace CSV")
    p_sweep.add_argument("--method", required=True, choices=("fixed", "adaptive"))
    p_sweep.add_argument("--out", required=True, help="output directory for curve CSVs")
    p_sweep.add_argument("--alpha", type=float, default=learner.DEFAULT_ALPHA)
    p_sweep.add_argument("--fraction", type=float, default=learner.DEFAULT_FRACTION)
    p_sweep.add_argument("--k-stride", type=int, default=1)
    p_sweep.add_argument("--tz-offset", type=int, default=0)
    p_sweep.add_argument(
        "--jobs",
        type=int,
        default=os.cpu_count() or 1,
        help="worker processes for per-user sweeps (default: CPU count)",
    )
    p_sweep.add_argument(
        "--figdir",
        help="directory for the tradeoff figure (default: the --out directory)",
    )
    p_sweep.add_argument(
        "--no-figs",
        action="store_true",
        help="skip rendering the tradeoff figure",
    )
    p_sweep.add_argument(
        "--schedule-out",
        help="write the trained model's top-k schedule here (single-user input only)",
    )
    p_sweep.add_argument("--schedule-k", type=int, default=84)
    p_sweep.set_defaults(handler=cmd_sweep)

    p_sim = sub.add_parser("simulate", help="Run one push-protocol simulation")
    p_sim.add_argument(
        "--mode", required=True, choices=pushsim.MODES, help="protocol to simulate"
    )
    p_sim.add_argument("--horizon", type=float, help="simulated seconds")
    p_sim.add_argument("--period", type=float, help="short_poll polling period (s)")
    p_sim.add_argument("--hold-timeout", type=float, default=660.0)
    p_sim.add_argument("--proxy-timeout", type=float, default=math.inf)
    p_sim.add_argument("--restart-period", type=float, help="websocket recycle period (s)")
    p_sim.add_argument("--rtt", type=float, default=0.0)
    p_sim.add_argument("--reconnect-delay", type=float, default=1.0)
    p_sim.add_argument("--schedule", help="schedule CSV of on-hour indices")
    p_sim.add_argument("--tz-offset", type=int, default=0)
    p_sim.add_argument("--uniform", type=int, help="generate N uniform arrivals")
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--trace", help="replay a user's arrivals from a trace CSV")
    p_sim.add_argument("--user", help="user id to replay (required if several)")
    p_sim.add_argument("--out", required=True, help="summary CSV to write")
    p_sim.add_argument("--delays-out", help="per-message delay CSV")
    p_sim.add_argument("--lifetimes-out", help="connection-lifetime CSV")
    p_sim.add_argument("--figdir", help="also render delay/lifetime histograms here")
    p_sim.set_defaults(handler=cmd_simulate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code
        return int(code) if code is not None else EXIT_OK
    if getattr(args, "handler", None) is None:
        parser.print_help(sys.stderr)
        return EXIT_USAGE
    try:
        return args.handler(args)
    except NoEligibleData as exc:
        _warn(str(exc))
        return EXIT_NO_DATA
    except (trace.TraceParseError, ValueError) as exc:
        _warn(str(exc))
        return EXIT_USAGE
    except OSError as exc:
        _warn(f"i/o failure: {exc}")
        return EXIT_IO


# --- ingest ----------------------------------------------------------------

def cmd_ingest(args) -> int:
    src = Path(args.input)
    if src.is_file():
        traces = trace.parse_trace_csv(src.read_text(encoding="utf-8"))
    elif src.is_dir():
        traces = []
        mailboxes = sorted(p for p in src.iterdir() if p.is_dir())
        if not mailboxes:
            mailboxes = [src]
        total_skipped = 0
        for mailbox in mailboxes:
            tr, skipped = trace.extract_dates_from_messages(mailbox, args.tz_offset)
            total_skipped += skipped
            if skipped:
                _warn(f"{mailbox.name}: skipped {skipped} unparseable message(s)")
            if tr.arrivals:
                traces.append(tr)
            else:
                _warn(f"{mailbox.name}: no usable messages")
        traces.sort(key=lambda t: t.user_id)
        if total_skipped:
            _warn(f"total skipped messages: {total_skipped}")
    else:
        raise ValueError(f"input path does not exist: {src}")
    if not traces:
        _warn("no arrivals found; writing empty trace CSV")
    trace.write_trace_csv(traces, args.out)
    _warn(f"wrote {args.out} ({sum(len(t) for t in traces)} arrivals, {len(traces)} users)")
    return EXIT_OK


# --- stats -----------------------------------------------------------------

def cmd_stats(args) -> int:
    traces = _load_traces(args.trace)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("user,message_count,mean_iit_hours,std_iit_hours\n")
        for tr in traces:
            st = trace.iit_stats(tr)
            fh.write(
                f"{tr.user_id},{st.message_count},"
                f"{format(st.mean_hours, '.12g')},{format(st.std_hours, '.12g')}\n"
            )
    _warn(f"wrote {args.out}")
    if args.figdir:
        _render_stats_figures(traces, args.tz_offset, args.figdir)
    return EXIT_OK


def _render_stats_figures(traces, tz_offset, figdir) -> None:
    from . import plots

    os.makedirs(figdir, exist_ok=True)
    all_weeks = []
    for tr in traces:
        all_weeks.extend(trace.split_weeks(tr, tz_offset))
    if all_weeks:
        profile = learner.weekly_profile(all_weeks)
        path = os.path.join(figdir, "week_profile.png")
        plots.save_week_profile(profile.bins, path)
        _warn(f"wrote {path}")
    with_gaps = [tr for tr in traces if len(tr) >= 2]
    if with_gaps:
        by_rate = sorted(with_gaps, key=lambda tr: trace.iit_stats(tr).mean_hours)
        panels = [("fastest: " + by_rate[0].user_id, np.diff(by_rate[0].arrivals) / 3600.0)]
        if len(by_rate) > 1:
            panels.append(
                ("slowest: " + by_rate[-1].user_id, np.diff(by_rate[-1].arrivals) / 3600.0)
            )
        path = os.path.join(figdir, "iit_hist.png")
        plots.save_iit_hist(panels, path)
        _warn(f"wrote {path}")


# --- sweep -----------------------------------------------------------------

def _k_grid(stride: int) -> list[int]:
    if stride < 1:
        raise ValueError("--k-stride must be >= 1")
    grid = list(range(0, HOURS_PER_WEEK + 1, stride))
    if grid[-1] != HOURS_PER_WEEK:
        grid.append(HOURS_PER_WEEK)
    return grid


def _safe_name(user_id: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]", "_", user_id) or "_"


def _sweep_worker(job):
    user_id, weeks, method, alpha, fraction, grid = job
    try:
        if method == "fixed":
            curve = evaluator.sweep_fixed(weeks, fraction, grid)
        else:
            curve = evaluator.sweep_adaptive(weeks, alpha, grid)
    except ValueError as exc:
        return user_id, None, str(exc)
    return user_id, curve, None


def cmd_sweep(args) -> int:
    traces = _load_traces(args.trace)
    grid = _k_grid(args.k_stride)
    jobs = []
    for tr in traces:
        weeks = trace.split_weeks(tr, args.tz_offset)
        if len(weeks) < 2:
            _warn(f"skipping {tr.user_id}: fewer than 2 weeks of data")
            continue
        jobs.append((tr.user_id, weeks, args.method, args.alpha, args.fraction, grid))

    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_sweep_worker, jobs))
    else:
        results = [_sweep_worker(job) for job in jobs]

    curves: dict[str, evaluator.TradeoffCurve] = {}
    for user_id, curve, problem in results:
        if curve is None:
            _warn(f"skipping {user_id}: {problem}")
        else:
            curves[user_id] = curve
    if not curves:
        raise NoEligibleData("no users with enough weeks of data to sweep")

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    used_names: set[str] = set()
    ordered = sorted(curves.items())
    for user_id, curve in ordered:
        name = _safe_name(user_id)
        candidate = name
        suffix = 1
        while candidate in used_names:
            suffix += 1
            candidate = f"{name}__{suffix}"
        used_names.add(candidate)
        evaluator.write_curve_csv(curve, out_dir / f"curve_{candidate}.csv")
    aggregate = evaluator.aggregate_users([curve for _, curve in ordered])
    evaluator.write_aggregate_csv(aggregate, out_dir / "aggregate.csv")
    _warn(f"wrote {len(ordered)} per-user curve(s) and aggregate.csv under {out_dir}")

    if args.schedule_out:
        _write_sweep_schedule(args, [job for job in jobs if job[0] in curves])
    figdir = args.figdir if args.figdir else (None if args.no_figs else str(out_dir))
    if figdir:
        from . import plots

        os.makedirs(figdir, exist_ok=True)
        path = os.path.join(figdir, "tradeoff.png")
        plots.save_tradeoff(
            [curve for _, curve in ordered],
            aggregate,
            path,
            title=f"{args.method} learning tradeoff",
        )
        _warn(f"wrote {path}")
    return EXIT_OK


def _write_sweep_schedule(args, jobs) -> None:
    if len(jobs) != 1:
        raise ValueError("--schedule-out needs exactly one eligible user in the trace")
    _, weeks, method, alpha, fraction, _ = jobs[0]
    if method == "fixed":
        model = learner.fixed_learn(weeks, fraction)
    else:
        model = evaluator.final_adaptive_model(weeks, alpha)
    schedule = learner.top_k_schedule(learner.rank_hours(model), args.schedule_k)
    learner.save_schedule(schedule, args.schedule_out)
    _warn(f"wrote {args.schedule_out} (k={schedule.k})")


# --- simulate ----------------------------------------------------------------

def _replay_arrivals(args) -> tuple[list[float], int, float]:
    """Rebased arrivals, gate offset, and a whole-week default horizon."""
    traces = _load_traces(args.trace)
    if args.user is not None:
        matches = [tr for tr in traces if tr.user_id == args.user]
        if not matches:
            raise ValueError(f"user {args.user!r} not present in {args.trace}")
        tr = matches[0]
    elif len(traces) == 1:
        tr = traces[0]
    else:
        raise ValueError("--user is required when the trace has several users")
    if not tr.arrivals:
        raise NoEligibleData(f"user {tr.user_id!r} has no arrivals")
    shifted = [a + args.tz_offset for a in tr.arrivals]
    if shifted[0] < 0:
        raise ValueError("arrival before epoch after timezone shift")
    base = trace.week_start(shifted[0])
    rebased = [float(a - base) for a in shifted]
    # rebased time 0 is a Monday 00:00, so the gate needs this offset
    gate_offset = WEEK_SECONDS - _EPOCH_TO_MONDAY
    default_horizon = (math.floor(rebased[-1] / WEEK_SECONDS) + 1) * WEEK_SECONDS
    return rebased, gate_offset, float(default_horizon)


def cmd_simulate(args) -> int:
    if args.uniform is not None and args.trace is not None:
        raise ValueError("--uniform and --trace are mutually exclusive")

    gate_offset = args.tz_offset
    if args.trace is not None:
        arrivals, gate_offset, default_horizon = _replay_arrivals(args)
        horizon = args.horizon if args.horizon is not None else default_horizon
        kept = [a for a in arrivals if a <= horizon]
        if len(kept) < len(arrivals):
            _warn(f"dropping {len(arrivals) - len(kept)} arrival(s) beyond the horizon")
        arrivals = kept
    else:
        if args.horizon is None:
            raise ValueError("--horizon is required unless replaying --trace")
        horizon = args.horizon
        if args.uniform is not None:
            arrivals = pushsim.gen_uniform_arrivals(args.uniform, horizon, args.seed)
        else:
            arrivals = []

    schedule = learner.load_schedule(args.schedule) if args.schedule else None
    config = pushsim.SimConfig(
        mode=args.mode,
        horizon_s=horizon,
        poll_period_s=args.period,
        server_hold_timeout_s=args.hold_timeout,
        proxy_idle_timeout_s=args.proxy_timeout,
        restart_period_s=args.restart_period,
        rtt_s=args.rtt,
        reconnect_delay_s=args.reconnect_delay,
        schedule=schedule,
        tz_offset_seconds=gate_offset,
    )
    stats = pushsim.simulate(arrivals, config)

    pushsim.write_summary_csv(stats, config, args.out)
    print(pushsim.SUMMARY_CSV_HEADER)
    print(pushsim.summary_row(stats, config))
    _warn(f"wrote {args.out}")
    if args.delays_out:
        pushsim.write_delay_csv(stats, args.delays_out)
        _warn(f"wrote {args.delays_out}")
    if args.lifetimes_out:
        pushsim.write_lifetime_csv(stats, args.lifetimes_out)
        _warn(f"wrote {args.lifetimes_out}")
    if args.figdir:
        from . import plots

        os.makedirs(args.figdir, exist_ok=True)
        delay_path = os.path.join(args.figdir, "delay_hist.png")
        plots.save_delay_hist(stats.per_message_delay_s, delay_path)
        life_path = os.path.join(args.figdir, "lifetime_hist.png")
        plots.save_lifetime_hist(stats.connection_lifetimes_s, life_path)
        _warn(f"wrote {delay_path} and {life_path}")
    return EXIT_OK


def _load_traces(path) -> list[trace.ArrivalTrace]:
    p = Path(path)
    if not p.is_file():
        raise ValueError(f"trace CSV not found: {p}")
    return trace.parse_trace_csv(p.read_text(encoding="utf-8"))


if __name__ == "__main__":
    raise SystemExit(main())
