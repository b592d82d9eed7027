"""Discrete simulation of push-delivery protocols.

Four client/server protocols are modeled over a single client and a
stream of message arrivals:

* short_poll — the client opens a throwaway connection every
  poll_period_s; each poll picks up everything queued since the last.
* long_poll — the client keeps one request pending; the server answers
  the moment a message is available or resets after a hold timeout, and
  the client reopens after reconnect_delay_s. A proxy idle timeout lower
  than the server hold acts exactly like a shorter server reset.
* websocket — one persistent connection, recycled every
  restart_period_s; messages push immediately while connected and queue
  during the recycle gap. A finite proxy idle timeout kills the
  connection after that much quiet time.
* scheduled_push — long polling gated by an hour-of-week schedule: the
  connection exists only during on-hours (half-open hour intervals, so a
  message landing exactly on an off boundary belongs to the off hour),
  closes at the first off boundary even mid-hold, and off-hour messages
  queue until the next on-hour boundary.

Network latency is a symmetric half-RTT per leg: requests reach the
server rtt_s/2 after they are sent and responses reach the client
rtt_s/2 after they are issued. A message is delivered in real time when
its delay is at most rtt_s (plus a 1e-9 guard).

Every arrival is eventually delivered: cycles continue past the horizon
until the queue drains. Connection accounting, however, is clipped to
[0, horizon] — only connections opened before the horizon are counted
and their lifetimes stop at the horizon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .learner import Schedule
from .trace import (
    _EPOCH_TO_MONDAY,
    HOUR_SECONDS,
    HOURS_PER_WEEK,
    WEEK_SECONDS,
    ArrivalTrace,
)

MODES = ("short_poll", "long_poll", "websocket", "scheduled_push")

REALTIME_GUARD_S = 1e-9

SUMMARY_CSV_HEADER = (
    "mode,connections_opened,total_messages,delivered_realtime_count,"
    "delivered_realtime_fraction,mean_delay_s,max_delay_s,"
    "connection_on_time_s,on_time_fraction,mean_connection_lifetime_s"
)
DELAY_CSV_HEADER = "arrival_ts,delay_s"
LIFETIME_CSV_HEADER = "open_ts,lifetime_s"


@dataclass(frozen=True)
class SimConfig:
    """Parameters for one simulation run. Defaults follow observed
    long-poll deployments: ~11-minute server holds, 1 s reconnects, no
    proxy idle limit unless set."""

    mode: str
    horizon_s: float
    poll_period_s: float | None = None
    server_hold_timeout_s: float = 660.0
    proxy_idle_timeout_s: float = math.inf
    restart_period_s: float | None = None
    rtt_s: float = 0.0
    reconnect_delay_s: float = 1.0
    schedule: Schedule | None = None
    tz_offset_seconds: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if not self.horizon_s > 0:
            raise ValueError("horizon_s must be positive")
        if self.rtt_s < 0:
            raise ValueError("rtt_s must be non-negative")
        if self.reconnect_delay_s < 0:
            raise ValueError("reconnect_delay_s must be non-negative")
        if not self.server_hold_timeout_s > 0:
            raise ValueError("server_hold_timeout_s must be positive")
        if not self.proxy_idle_timeout_s > 0:
            raise ValueError("proxy_idle_timeout_s must be positive (or infinite)")
        if self.mode == "short_poll":
            if self.poll_period_s is None or not self.poll_period_s > 0:
                raise ValueError("short_poll requires a positive poll_period_s")
        if self.mode == "websocket":
            if self.restart_period_s is None or not self.restart_period_s > 0:
                raise ValueError("websocket requires a positive restart_period_s")
            if math.isinf(self.restart_period_s):
                raise ValueError("restart_period_s must be finite")
        if self.mode == "scheduled_push":
            if self.schedule is None or self.schedule.k == 0:
                raise ValueError(
                    "scheduled_push requires a schedule with at least one on-hour"
                )
            if self.rtt_s >= 2 * HOUR_SECONDS:
                # a request leg longer than an hour can never land inside
                # a one-hour on-window, so nothing would ever deliver
                raise ValueError("scheduled_push requires rtt_s below two hours")


@dataclass
class SimStats:
    """Connection-load and delivery-delay outcome of one run.

    per_message_delay_s[i] is the delay of arrivals[i]; conservation
    holds (one delay per arrival, nothing lost). Lifetimes and on-time
    are clipped to the horizon.
    """

    connections_opened: int
    connection_open_ts_s: list[float]
    connection_lifetimes_s: list[float]
    arrival_ts_s: list[float]
    per_message_delay_s: list[float]
    delivered_realtime_count: int
    total_messages: int
    connection_on_time_s: float

    @property
    def mean_delay_s(self) -> float:
        if not self.per_message_delay_s:
            return 0.0
        return float(np.mean(self.per_message_delay_s))

    @property
    def max_delay_s(self) -> float:
        if not self.per_message_delay_s:
            return 0.0
        return float(max(self.per_message_delay_s))


def simulate(arrivals: Sequence[float], config: SimConfig) -> SimStats:
    """Run one protocol over the arrivals; see the module docstring."""
    times = [float(a) for a in arrivals]
    for prev, cur in zip(times, times[1:]):
        if cur < prev:
            raise ValueError("arrivals must be sorted non-decreasing")
    if times and (times[0] < 0 or times[-1] > config.horizon_s):
        raise ValueError("arrivals must lie within [0, horizon_s]")

    if config.mode == "short_poll":
        conns, delays = _run_short_poll(times, config)
        # polls on the cadence include one at the horizon itself
        return _collect_stats(times, conns, delays, config, include_boundary=True)
    if config.mode == "websocket":
        conns, delays = _run_websocket(times, config)
    else:
        conns, delays = _run_held(times, config, gated=config.mode == "scheduled_push")
    return _collect_stats(times, conns, delays, config)


# --- hour-of-week gating -------------------------------------------------

def _gate_shift(config: SimConfig) -> int:
    return config.tz_offset_seconds + _EPOCH_TO_MONDAY


def _hour_at(t: float, shift: int) -> int:
    return int(((t + shift) % WEEK_SECONDS) // HOUR_SECONDS)


def _next_on_instant(t: float, on_hours: frozenset[int], shift: int) -> float:
    """First instant >= t whose hour-of-week is on-schedule."""
    if _hour_at(t, shift) in on_hours:
        return t
    boundary = (math.floor((t + shift) / HOUR_SECONDS) + 1) * HOUR_SECONDS
    for _ in range(HOURS_PER_WEEK + 1):
        if int((boundary % WEEK_SECONDS) // HOUR_SECONDS) in on_hours:
            return boundary - shift
        boundary += HOUR_SECONDS
    raise RuntimeError("schedule has no on-hours")  # excluded by SimConfig


def _next_off_instant(t: float, on_hours: frozenset[int], shift: int) -> float:
    """First instant >= t whose hour-of-week is off-schedule (inf if none)."""
    if _hour_at(t, shift) not in on_hours:
        return t
    boundary = (math.floor((t + shift) / HOUR_SECONDS) + 1) * HOUR_SECONDS
    for _ in range(HOURS_PER_WEEK + 1):
        if int((boundary % WEEK_SECONDS) // HOUR_SECONDS) not in on_hours:
            return boundary - shift
        boundary += HOUR_SECONDS
    return math.inf


# --- protocol walks ------------------------------------------------------

def _run_short_poll(times, config):
    period = config.poll_period_s
    half = config.rtt_s / 2.0
    horizon = config.horizon_s

    delays = []
    for a in times:
        q = a / period
        if abs(q - round(q)) < 1e-9:
            poll = round(q) * period  # on-cadence arrival rides that poll
        else:
            poll = (math.floor(q) + 1) * period
        delays.append(max(poll - a, 0.0) + half)

    q = horizon / period
    n_polls = (round(q) if abs(q - round(q)) < 1e-9 else math.floor(q)) + 1
    conns = [(j * period, j * period + config.rtt_s) for j in range(int(n_polls))]
    return conns, delays


def _run_held(times, config, gated):
    """Long-poll cycle shared by long_poll and scheduled_push."""
    half = config.rtt_s / 2.0
    hold = min(config.server_hold_timeout_s, config.proxy_idle_timeout_s)
    horizon = config.horizon_s
    reconnect = config.reconnect_delay_s
    shift = _gate_shift(config)
    on_hours = config.schedule.on_hours if gated else frozenset()

    n = len(times)
    delays = [0.0] * n
    conns: list[tuple[float, float]] = []
    i = 0
    t = 0.0
    while True:
        if i >= n and t >= horizon:
            break
        t_open = _next_on_instant(t, on_hours, shift) if gated else t
        if i >= n and t_open >= horizon:
            break
        gate_close = _next_off_instant(t_open, on_hours, shift) if gated else math.inf
        t_land = t_open + half
        if t_land >= gate_close:
            # on-block shorter than the request leg: nothing can land
            conns.append((t_open, gate_close))
            t = gate_close
            continue
        if i < n and times[i] <= t_land:
            # backlog waiting when the request lands: immediate response
            t_recv = t_land + half
            while i < n and times[i] <= t_land:
                delays[i] = t_recv - times[i]
                i += 1
            conns.append((t_open, t_recv))
            t = t_recv + reconnect
            continue
        deadline = t_land + hold
        nxt = times[i] if i < n else math.inf
        if nxt <= deadline and nxt < gate_close:
            # message pushed mid-hold; same-instant arrivals ride along
            t_recv = nxt + half
            while i < n and times[i] <= nxt:
                delays[i] = t_recv - times[i]
                i += 1
            conns.append((t_open, t_recv))
            t = t_recv + reconnect
        elif gate_close <= deadline:
            # scheduled close at the off-hour boundary (or never: clipped)
            conns.append((t_open, gate_close))
            t = gate_close
        else:
            # server/proxy reset after the hold timeout
            t_recv = deadline + half
            conns.append((t_open, t_recv))
            t = t_recv + reconnect
    return conns, delays


def _run_websocket(times, config):
    half = config.rtt_s / 2.0
    restart = config.restart_period_s
    idle = config.proxy_idle_timeout_s
    horizon = config.horizon_s

    n = len(times)
    delays = [0.0] * n
    conns: list[tuple[float, float]] = []
    i = 0
    t = 0.0
    while True:
        if i >= n and t >= horizon:
            break
        t_open = t
        t_established = t_open + half
        recycle = t_open + restart
        # queued messages push as soon as the channel is up
        t_recv = t_established + half
        while i < n and times[i] <= t_established:
            delays[i] = t_recv - times[i]
            i += 1
        last_traffic = t_established
        end = min(recycle, last_traffic + idle)
        while i < n and times[i] <= end:
            a = times[i]
            while i < n and times[i] <= a:
                delays[i] = half
                i += 1
            last_traffic = a
            end = min(recycle, last_traffic + idle)
        conns.append((t_open, end))
        t = end + config.reconnect_delay_s
    return conns, delays


# --- stats assembly ------------------------------------------------------

def _union_length(intervals, horizon):
    """Total time covered by >= 1 interval, clipped to [0, horizon]."""
    clipped = sorted(
        (max(lo, 0.0), min(hi, horizon)) for lo, hi in intervals if lo < horizon
    )
    total = 0.0
    cur_lo = None
    cur_hi = None
    for lo, hi in clipped:
        if hi <= lo:
            continue
        if cur_hi is None or lo > cur_hi:
            if cur_hi is not None:
                total += cur_hi - cur_lo
            cur_lo, cur_hi = lo, hi
        elif hi > cur_hi:
            cur_hi = hi
    if cur_hi is not None:
        total += cur_hi - cur_lo
    return total


def _collect_stats(times, conns, delays, config, include_boundary=False) -> SimStats:
    horizon = config.horizon_s
    open_ts = []
    lifetimes = []
    for t_open, t_close in conns:
        if t_open < horizon or (include_boundary and t_open <= horizon):
            open_ts.append(t_open)
            lifetimes.append(min(t_close, horizon) - t_open)
    realtime = sum(1 for d in delays if d <= config.rtt_s + REALTIME_GUARD_S)
    return SimStats(
        connections_opened=len(open_ts),
        connection_open_ts_s=open_ts,
        connection_lifetimes_s=lifetimes,
        arrival_ts_s=list(times),
        per_message_delay_s=list(delays),
        delivered_realtime_count=realtime,
        total_messages=len(times),
        connection_on_time_s=_union_length(conns, horizon),
    )


# --- synthetic arrival generators ----------------------------------------

def gen_uniform_arrivals(n: int, horizon_s: float, seed: int) -> list[float]:
    """n i.i.d. uniform arrival times on (0, horizon), sorted."""
    if n < 0:
        raise ValueError("n must be non-negative")
    if not horizon_s > 0:
        raise ValueError("horizon_s must be positive")
    rng = np.random.default_rng(seed)
    return np.sort(rng.uniform(0.0, horizon_s, n)).tolist()


def gen_periodic_trace(
    profile: Sequence[float], weeks: int, seed: int, user_id: str = "synthetic"
) -> ArrivalTrace:
    """Poisson arrivals following an hour-of-week rate profile.

    profile[h] is the expected messages in hour-of-week bin h; each
    week's bin count is drawn Poisson at that rate and the arrivals are
    placed uniformly inside the hour. Week 0 starts at the first Monday
    after the epoch, so bins line up with hour_of_week at offset 0.
    """
    rates = np.asarray(profile, dtype=float)
    if rates.shape != (HOURS_PER_WEEK,):
        raise ValueError(f"profile must have {HOURS_PER_WEEK} rates")
    if (rates < 0).any():
        raise ValueError("rates must be non-negative")
    if weeks < 1:
        raise ValueError("weeks must be >= 1")
    base = WEEK_SECONDS - _EPOCH_TO_MONDAY  # 1970-01-05 Mon 00:00
    rng = np.random.default_rng(seed)
    stamps: list[int] = []
    for w in range(weeks):
        counts = rng.poisson(rates)
        for h in range(HOURS_PER_WEEK):
            c = int(counts[h])
            if c == 0:
                continue
            start = base + w * WEEK_SECONDS + h * HOUR_SECONDS
            offsets = rng.uniform(0.0, HOUR_SECONDS, c)
            stamps.extend(start + int(o) for o in offsets)
    stamps.sort()
    return ArrivalTrace(user_id, tuple(stamps))


# --- CSV output -----------------------------------------------------------

def _fmt(x: float) -> str:
    return format(x, ".12g")


def summary_row(stats: SimStats, config: SimConfig) -> str:
    on_fraction = stats.connection_on_time_s / config.horizon_s
    rt_fraction = (
        stats.delivered_realtime_count / stats.total_messages
        if stats.total_messages
        else 0.0
    )
    mean_lifetime = (
        float(np.mean(stats.connection_lifetimes_s))
        if stats.connection_lifetimes_s
        else 0.0
    )
    return ",".join(
        [
            config.mode,
            str(stats.connections_opened),
            str(stats.total_messages),
            str(stats.delivered_realtime_count),
            _fmt(rt_fraction),
            _fmt(stats.mean_delay_s),
            _fmt(stats.max_delay_s),
            _fmt(stats.connection_on_time_s),
            _fmt(on_fraction),
            _fmt(mean_lifetime),
        ]
    )


def write_summary_csv(stats: SimStats, config: SimConfig, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(SUMMARY_CSV_HEADER + "\n")
        fh.write(summary_row(stats, config) + "\n")


def write_delay_csv(stats: SimStats, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(DELAY_CSV_HEADER + "\n")
        for a, d in zip(stats.arrival_ts_s, stats.per_message_delay_s):
            fh.write(f"{_fmt(a)},{_fmt(d)}\n")


def write_lifetime_csv(stats: SimStats, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(LIFETIME_CSV_HEADER + "\n")
        for o, life in zip(stats.connection_open_ts_s, stats.connection_lifetimes_s):
            fh.write(f"{_fmt(o)},{_fmt(life)}\n")
