"""Schedule scoring, k-sweep tradeoff curves, and cross-user aggregation.

A message counts as delivered in real time iff its hour-of-week bin is
in the schedule, so scoring a schedule against held-out weeks is a pure
bin-membership sum. Sweeps exploit schedule nesting: for one ranking,
the top-k schedules are prefixes, so per-week delivered counts for every
k come from one cumulative sum over the ranking-permuted bins.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .learner import (
    FrequencyModel,
    Schedule,
    bootstrap_adaptive,
    adaptive_update,
    fixed_learn,
    rank_hours,
    training_week_count,
)
from .trace import HOURS_PER_WEEK, normalize

FULL_K_GRID = tuple(range(HOURS_PER_WEEK + 1))

CURVE_CSV_HEADER = "k,on_fraction,delivered_fraction,delivered_count,total_count"
AGGREGATE_CSV_HEADER = "k,on_fraction,mean,std,user_count"


@dataclass(frozen=True)
class ScheduleScore:
    delivered_count: int
    total_count: int

    @property
    def delivered_fraction(self) -> float:
        if self.total_count == 0:
            return 0.0
        return self.delivered_count / self.total_count


@dataclass(frozen=True)
class CurvePoint:
    k: int
    on_fraction: float
    delivered_fraction: float
    delivered_count: int
    total_count: int


@dataclass(frozen=True)
class TradeoffCurve:
    points: tuple[CurvePoint, ...]

    def ks(self) -> list[int]:
        return [p.k for p in self.points]

    def fraction_at(self, k: int) -> float:
        for p in self.points:
            if p.k == k:
                return p.delivered_fraction
        raise KeyError(f"k={k} not on this curve's grid")


@dataclass(frozen=True)
class AggregatePoint:
    k: int
    mean_delivered: float
    std_delivered: float
    user_count: int

    @property
    def on_fraction(self) -> float:
        return self.k / HOURS_PER_WEEK


@dataclass(frozen=True)
class AggregateCurve:
    points: tuple[AggregatePoint, ...]

    def ks(self) -> list[int]:
        return [p.k for p in self.points]

    def mean_at(self, k: int) -> float:
        for p in self.points:
            if p.k == k:
                return p.mean_delivered
        raise KeyError(f"k={k} not on this curve's grid")


def evaluate_schedule(schedule: Schedule, test_weeks: Sequence) -> ScheduleScore:
    """Count messages landing in on-schedule bins across the test weeks."""
    on = sorted(schedule.on_hours)
    delivered = 0
    total = 0
    for week in test_weeks:
        arr = np.asarray(week)
        delivered += int(arr[on].sum())
        total += int(arr.sum())
    return ScheduleScore(delivered, total)


def _clean_ks(ks: Sequence[int] | None) -> list[int]:
    if ks is None:
        return list(FULL_K_GRID)
    out = sorted({int(k) for k in ks})
    for k in out:
        if not 0 <= k <= HOURS_PER_WEEK:
            raise ValueError(f"k must be in [0, {HOURS_PER_WEEK}], got {k}")
    if not out:
        raise ValueError("empty k grid")
    return out


def _delivered_prefix(ranking: Sequence[int], week) -> np.ndarray:
    """delivered[k] for k = 0..168 against one week, via prefix sums."""
    arr = np.asarray(week, dtype=np.int64)
    out = np.zeros(HOURS_PER_WEEK + 1, dtype=np.int64)
    out[1:] = np.cumsum(arr[np.asarray(ranking)])
    return out


def _build_curve(ks: Sequence[int], delivered_by_k: np.ndarray, total: int) -> TradeoffCurve:
    points = []
    for k in ks:
        delivered = int(delivered_by_k[k])
        fraction = delivered / total if total > 0 else 0.0
        points.append(CurvePoint(k, k / HOURS_PER_WEEK, fraction, delivered, total))
    return TradeoffCurve(tuple(points))


def sweep_fixed(
    weeks: Sequence, fraction: float, ks: Sequence[int] | None = None
) -> TradeoffCurve:
    """Train on the leading fraction of weeks, test top-k on the rest."""
    grid = _clean_ks(ks)
    n_weeks = len(weeks)
    if n_weeks < 2:
        raise ValueError("need at least two weeks (one to train, one to test)")
    n_train = training_week_count(fraction, n_weeks)
    if n_train >= n_weeks:
        raise ValueError(
            f"fraction {fraction} leaves no test weeks ({n_train} of {n_weeks} used for training)"
        )
    model = fixed_learn(weeks, fraction)
    ranking = rank_hours(model)
    delivered_by_k = np.zeros(HOURS_PER_WEEK + 1, dtype=np.int64)
    total = 0
    for week in weeks[n_train:]:
        delivered_by_k += _delivered_prefix(ranking, week)
        total += int(np.asarray(week).sum())
    return _build_curve(grid, delivered_by_k, total)


def walk_adaptive(
    weeks: Sequence, alpha: float
) -> Iterator[tuple[int, FrequencyModel]]:
    """Walk-forward iterator: (week_index, model state before that week).

    Week 0 only bootstraps the model; weeks 1..W-1 are each yielded with
    the model trained on strictly earlier weeks, then absorbed.
    """
    if len(weeks) < 2:
        raise ValueError("need at least two weeks (one to bootstrap, one to test)")
    model = bootstrap_adaptive(normalize(weeks[0]), alpha)
    for i in range(1, len(weeks)):
        yield i, model
        model = adaptive_update(model, normalize(weeks[i]))


def final_adaptive_model(weeks: Sequence, alpha: float) -> FrequencyModel:
    """Model state after absorbing every week of the walk."""
    model = bootstrap_adaptive(normalize(weeks[0]), alpha)
    for i in range(1, len(weeks)):
        model = adaptive_update(model, normalize(weeks[i]))
    return model


def sweep_adaptive(
    weeks: Sequence, alpha: float, ks: Sequence[int] | None = None
) -> TradeoffCurve:
    """Walk-forward sweep: week i is scored with the pre-i model state."""
    grid = _clean_ks(ks)
    delivered_by_k = np.zeros(HOURS_PER_WEEK + 1, dtype=np.int64)
    total = 0
    for i, model in walk_adaptive(weeks, alpha):
        ranking = rank_hours(model)
        delivered_by_k += _delivered_prefix(ranking, weeks[i])
        total += int(np.asarray(weeks[i]).sum())
    return _build_curve(grid, delivered_by_k, total)


def aggregate_users(curves: Sequence[TradeoffCurve]) -> AggregateCurve:
    """Per-k unweighted mean and population std across users' curves."""
    if not curves:
        raise ValueError("no curves to aggregate")
    grid = curves[0].ks()
    for curve in curves[1:]:
        if curve.ks() != grid:
            raise ValueError("curves have mismatched k grids")
    fractions = np.array(
        [[p.delivered_fraction for p in curve.points] for curve in curves]
    )
    means = fractions.mean(axis=0)
    stds = fractions.std(axis=0)
    points = tuple(
        AggregatePoint(k, float(means[j]), float(stds[j]), len(curves))
        for j, k in enumerate(grid)
    )
    return AggregateCurve(points)


def _fmt(x: float) -> str:
    return format(x, ".12g")


def write_curve_csv(curve: TradeoffCurve, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(CURVE_CSV_HEADER + "\n")
        for p in curve.points:
            fh.write(
                f"{p.k},{_fmt(p.on_fraction)},{_fmt(p.delivered_fraction)},"
                f"{p.delivered_count},{p.total_count}\n"
            )


def write_aggregate_csv(curve: AggregateCurve, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(AGGREGATE_CSV_HEADER + "\n")
        for p in curve.points:
            fh.write(
                f"{p.k},{_fmt(p.on_fraction)},{_fmt(p.mean_delivered)},"
                f"{_fmt(p.std_delivered)},{p.user_count}\n"
            )
