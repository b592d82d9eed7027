"""Message-arrival traces and hour-of-week binning.

A trace is one user's sorted list of arrival timestamps (integer epoch
seconds). Weeks run Monday 00:00 to Monday 00:00 in the analysis
timezone, so hour-of-week index 0 is Monday 00:00-01:00 and index 167 is
Sunday 23:00-24:00. Timezone handling is a single fixed offset in
seconds added to every timestamp before binning; there is no DST logic.

All values here are immutable after construction and safe to share
across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import timezone
from email import policy
from email.parser import BytesParser
from email.utils import parsedate_to_datetime
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

HOURS_PER_WEEK = 168
HOUR_SECONDS = 3600
WEEK_SECONDS = 7 * 24 * HOUR_SECONDS

# The epoch (1970-01-01 00:00 UTC) is a Thursday, three days after a
# Monday 00:00; adding this makes Monday-aligned modular arithmetic work.
_EPOCH_TO_MONDAY = 3 * 24 * HOUR_SECONDS

TRACE_CSV_HEADER = "user,timestamp"


class TraceParseError(ValueError):
    """Malformed trace CSV input; remembers the offending line number."""

    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


@dataclass(frozen=True)
class ArrivalTrace:
    """One user's message arrivals, sorted, as epoch seconds."""

    user_id: str
    arrivals: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "arrivals", tuple(self.arrivals))
        last = None
        for a in self.arrivals:
            if a < 0:
                raise ValueError(f"negative arrival timestamp {a}")
            if last is not None and a < last:
                raise ValueError("arrivals must be sorted non-decreasing")
            last = a

    def __len__(self) -> int:
        return len(self.arrivals)


@dataclass(frozen=True)
class WeekHistogram:
    """Relative-frequency histogram of one week's arrivals over 168 hour bins.

    Either the week is empty (total_count 0, all bins 0) or the bins sum
    to 1 within 1e-9.
    """

    bins: tuple[float, ...]
    total_count: int

    def __post_init__(self):
        object.__setattr__(self, "bins", tuple(float(b) for b in self.bins))
        if len(self.bins) != HOURS_PER_WEEK:
            raise ValueError(f"expected {HOURS_PER_WEEK} bins, got {len(self.bins)}")
        if any(b < 0 for b in self.bins):
            raise ValueError("bins must be non-negative")
        if self.total_count < 0:
            raise ValueError("total_count must be non-negative")
        total = sum(self.bins)
        if self.total_count == 0:
            if total != 0.0:
                raise ValueError("empty week must have all-zero bins")
        elif abs(total - 1.0) > 1e-9:
            raise ValueError(f"bins must sum to 1, got {total!r}")


@dataclass(frozen=True)
class IitStats:
    """Mean/std of inter-arrival times in hours, population std."""

    mean_hours: float
    std_hours: float
    message_count: int


def parse_trace_csv(source: str | Iterable[str]) -> list[ArrivalTrace]:
    """Parse `user_id,epoch_seconds` lines into per-user sorted traces.

    Blank lines and `#` comments are ignored; a single optional header
    line `user,timestamp` is skipped. Traces come back sorted by user id
    with arrivals sorted even when the input is not.

    Raises TraceParseError (with the line number) for a wrong field
    count, a non-integer timestamp, or a negative timestamp.
    """
    lines = source.splitlines() if isinstance(source, str) else source
    per_user: dict[str, list[int]] = {}
    header_candidate = True
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if header_candidate:
            header_candidate = False
            if line == TRACE_CSV_HEADER:
                continue
        parts = line.split(",")
        if len(parts) != 2:
            raise TraceParseError(lineno, f"expected 'user_id,epoch_seconds', got {line!r}")
        user, ts_text = parts[0].strip(), parts[1].strip()
        if not user:
            raise TraceParseError(lineno, "empty user id")
        try:
            ts = int(ts_text)
        except ValueError:
            raise TraceParseError(lineno, f"timestamp {ts_text!r} is not an integer") from None
        if ts < 0:
            raise TraceParseError(lineno, f"negative timestamp {ts}")
        per_user.setdefault(user, []).append(ts)
    return [
        ArrivalTrace(user, tuple(sorted(stamps)))
        for user, stamps in sorted(per_user.items())
    ]


def write_trace_csv(traces: Sequence[ArrivalTrace], path) -> None:
    """Write traces in the canonical CSV form (header, LF endings)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(TRACE_CSV_HEADER + "\n")
        for trace in traces:
            for a in trace.arrivals:
                fh.write(f"{trace.user_id},{a}\n")


def hour_of_week(timestamp, tz_offset_seconds: int = 0) -> int:
    """Map an epoch timestamp to its hour-of-week bin in [0, 167].

    Weeks start Monday 00:00 in the shifted (analysis) timezone. The
    shifted timestamp must be non-negative.
    """
    shifted = timestamp + tz_offset_seconds
    if shifted < 0:
        raise ValueError(f"timestamp {timestamp} is before epoch after shifting")
    return int(((shifted + _EPOCH_TO_MONDAY) % WEEK_SECONDS) // HOUR_SECONDS)


def week_start(timestamp, tz_offset_seconds: int = 0):
    """Monday-00:00 boundary at or before `timestamp`, in the same frame."""
    shifted = timestamp + tz_offset_seconds
    return timestamp - ((shifted + _EPOCH_TO_MONDAY) % WEEK_SECONDS)


def split_weeks(trace: ArrivalTrace, tz_offset_seconds: int = 0) -> list[np.ndarray]:
    """Bin a trace into consecutive per-week 168-count vectors.

    Week 0 starts at the Monday boundary at or before the first arrival;
    the result runs through the week containing the last arrival, with
    interior empty weeks present as all-zero vectors. Every arrival lands
    in exactly one bin of exactly one week.
    """
    if not trace.arrivals:
        return []
    shifted = np.asarray(trace.arrivals, dtype=np.int64) + int(tz_offset_seconds)
    if int(shifted[0]) < 0:
        raise ValueError("arrival before epoch after timezone shift")
    aligned = shifted + _EPOCH_TO_MONDAY
    origin = (int(aligned[0]) // WEEK_SECONDS) * WEEK_SECONDS
    week_idx = (aligned - origin) // WEEK_SECONDS
    hour_idx = (aligned % WEEK_SECONDS) // HOUR_SECONDS
    n_weeks = int(week_idx[-1]) + 1
    flat = np.bincount(
        week_idx * HOURS_PER_WEEK + hour_idx,
        minlength=n_weeks * HOURS_PER_WEEK,
    )
    return list(flat.reshape(n_weeks, HOURS_PER_WEEK))


def normalize(counts) -> WeekHistogram:
    """Turn a 168-count vector into a relative-frequency WeekHistogram."""
    arr = np.asarray(counts, dtype=float)
    if arr.shape != (HOURS_PER_WEEK,):
        raise ValueError(f"expected {HOURS_PER_WEEK} counts, got shape {arr.shape}")
    if (arr < 0).any():
        raise ValueError("counts must be non-negative")
    total = float(arr.sum())
    if total == 0:
        return WeekHistogram((0.0,) * HOURS_PER_WEEK, 0)
    return WeekHistogram(tuple(arr / total), int(round(total)))


def iit_stats(trace: ArrivalTrace) -> IitStats:
    """Mean and population std of consecutive inter-arrival gaps, in hours.

    With fewer than two arrivals both statistics are 0 by definition.
    """
    n = len(trace.arrivals)
    if n < 2:
        return IitStats(0.0, 0.0, n)
    gaps = np.diff(np.asarray(trace.arrivals, dtype=float)) / HOUR_SECONDS
    return IitStats(float(gaps.mean()), float(gaps.std()), n)


def extract_dates_from_messages(
    directory, tz_offset_seconds: int, user_id: str | None = None
) -> tuple[ArrivalTrace, int]:
    """Build a trace from one mailbox directory of RFC-2822-style files.

    Every regular file under `directory` (recursively) is one message;
    its Date header, shifted into the analysis timezone, becomes one
    arrival. Files with a missing or unparseable Date header, and
    messages whose shifted timestamp is negative, are skipped and
    counted. Returns (trace, skipped_count); the user id defaults to the
    directory name.
    """
    root = Path(directory)
    if not root.is_dir():
        raise ValueError(f"not a directory: {root}")
    uid = user_id if user_id is not None else root.name
    arrivals: list[int] = []
    skipped = 0
    for path in sorted(p for p in root.rglob("*") if p.is_file()):
        ts = _message_timestamp(path)
        if ts is None:
            skipped += 1
            continue
        shifted = ts + tz_offset_seconds
        if shifted < 0:
            skipped += 1
            continue
        arrivals.append(shifted)
    arrivals.sort()
    return ArrivalTrace(uid, tuple(arrivals)), skipped


def _message_timestamp(path: Path) -> int | None:
    try:
        with open(path, "rb") as fh:
            msg = BytesParser(policy=policy.default).parse(fh, headersonly=True)
        raw = msg["Date"]
        if raw is None:
            return None
        parsed = parsedate_to_datetime(str(raw))
        if parsed.tzinfo is None:
            parsed = parsed.replace(tzinfo=timezone.utc)
        return int(math.floor(parsed.timestamp()))
    except Exception:
        return None
