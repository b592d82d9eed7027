"""Hour-of-week frequency models, rankings, and top-k schedules.

Two learners produce the same kind of model: a 168-element weight vector
over hour-of-week bins. Fixed learning sums the raw counts of an initial
fraction of the weeks and freezes; adaptive learning starts from the
first week's histogram and blends each subsequent week in with an
exponential decay (new = alpha * old + (1 - alpha) * week).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .trace import HOURS_PER_WEEK, WeekHistogram, normalize

DEFAULT_ALPHA = 0.9
DEFAULT_FRACTION = 0.1


@dataclass(frozen=True)
class FrequencyModel:
    """Per-hour arrival weights plus the decay used to build them.

    Weights are non-negative; after absorbing any non-empty week they sum
    to 1, but scaled weight vectors are accepted too (ranking only cares
    about order). alpha is the adaptive decay and is 0.0 on models built
    by fixed learning, which never uses it.
    """

    weights: tuple[float, ...]
    alpha: float
    weeks_absorbed: int

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if len(self.weights) != HOURS_PER_WEEK:
            raise ValueError(f"expected {HOURS_PER_WEEK} weights, got {len(self.weights)}")
        if any(w < 0 for w in self.weights):
            raise ValueError("weights must be non-negative")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.weeks_absorbed < 0:
            raise ValueError("weeks_absorbed must be non-negative")


@dataclass(frozen=True)
class Schedule:
    """The hour-of-week bins during which the push connection stays up."""

    on_hours: frozenset[int]

    def __post_init__(self):
        object.__setattr__(self, "on_hours", frozenset(int(h) for h in self.on_hours))
        for h in self.on_hours:
            if not 0 <= h < HOURS_PER_WEEK:
                raise ValueError(f"hour index {h} out of range")

    @property
    def k(self) -> int:
        return len(self.on_hours)


def training_week_count(fraction: float, n_weeks: int) -> int:
    """Number of leading weeks a fixed learner trains on: ceil(fraction * W).

    Rounded before the ceiling so that e.g. fraction 0.1 of 100 weeks is
    10 rather than 11 (0.1 * 100 is just above 10 in binary floats).
    """
    return math.ceil(round(fraction * n_weeks, 9))


def fixed_learn(week_counts: Sequence, fraction: float) -> FrequencyModel:
    """Build a frozen model from the first ceil(fraction * W) weeks.

    Raw counts are summed bin-wise over the training weeks and then
    normalized, so busy weeks weigh more than sparse ones. An all-empty
    training window yields a valid all-zero model (ranking then falls
    back to hour-index order).
    """
    n_weeks = len(week_counts)
    if n_weeks == 0:
        raise ValueError("at least one week of data is required")
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    n_train = training_week_count(fraction, n_weeks)
    total = np.zeros(HOURS_PER_WEEK, dtype=float)
    for week in week_counts[:n_train]:
        arr = np.asarray(week, dtype=float)
        if arr.shape != (HOURS_PER_WEEK,):
            raise ValueError(f"expected {HOURS_PER_WEEK}-count weeks, got shape {arr.shape}")
        if (arr < 0).any():
            raise ValueError("counts must be non-negative")
        total += arr
    mass = total.sum()
    if mass > 0:
        weights = tuple(total / mass)
    else:
        weights = (0.0,) * HOURS_PER_WEEK
    return FrequencyModel(weights, 0.0, n_train)


def bootstrap_adaptive(first_week: WeekHistogram, alpha: float) -> FrequencyModel:
    """Start an adaptive model from the first observed week."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    return FrequencyModel(first_week.bins, alpha, 1)


def adaptive_update(model: FrequencyModel, week: WeekHistogram) -> FrequencyModel:
    """Blend one week into the model: alpha * old + (1 - alpha) * week.

    An empty week leaves the weights untouched (blending in a zero
    vector would scale every weight equally, changing nothing about the
    ranking); weeks_absorbed still advances.
    """
    if week.total_count == 0:
        return FrequencyModel(model.weights, model.alpha, model.weeks_absorbed + 1)
    a = model.alpha
    blended = tuple(
        a * old + (1.0 - a) * new for old, new in zip(model.weights, week.bins)
    )
    return FrequencyModel(blended, a, model.weeks_absorbed + 1)


def rank_hours(model: FrequencyModel) -> list[int]:
    """Hour indices by descending weight, ties broken by ascending index."""
    weights = model.weights
    return sorted(range(HOURS_PER_WEEK), key=lambda h: (-weights[h], h))


def top_k_schedule(ranking: Sequence[int], k: int) -> Schedule:
    """Schedule made of the first k entries of a ranking."""
    if not 0 <= k <= HOURS_PER_WEEK:
        raise ValueError(f"k must be in [0, {HOURS_PER_WEEK}], got {k}")
    return Schedule(frozenset(ranking[:k]))


def save_model(model: FrequencyModel, path) -> None:
    """Write a model as `hour_index,weight` lines under a comment header."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# alpha={model.alpha!r}\n")
        fh.write(f"# weeks_absorbed={model.weeks_absorbed}\n")
        for hour, weight in enumerate(model.weights):
            fh.write(f"{hour},{weight!r}\n")


def load_model(path) -> FrequencyModel:
    alpha = 0.0
    weeks_absorbed = 0
    weights: list[float | None] = [None] * HOURS_PER_WEEK
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line.lstrip("#").strip()
                if body.startswith("alpha="):
                    alpha = float(body.split("=", 1)[1])
                elif body.startswith("weeks_absorbed="):
                    weeks_absorbed = int(body.split("=", 1)[1])
                continue
            hour_text, weight_text = line.split(",")
            hour = int(hour_text)
            if not 0 <= hour < HOURS_PER_WEEK:
                raise ValueError(f"hour index {hour} out of range")
            weights[hour] = float(weight_text)
    if any(w is None for w in weights):
        missing = sum(1 for w in weights if w is None)
        raise ValueError(f"model file is missing {missing} hour rows")
    return FrequencyModel(tuple(weights), alpha, weeks_absorbed)  # type: ignore[arg-type]


def save_schedule(schedule: Schedule, path) -> None:
    """Write a schedule as one hour index per line, ascending."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# on-hours schedule, k={schedule.k}\n")
        for hour in sorted(schedule.on_hours):
            fh.write(f"{hour}\n")


def load_schedule(path) -> Schedule:
    hours: list[int] = []
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#") or line == "hour":
                continue
            hours.append(int(line))
    if len(hours) != len(set(hours)):
        raise ValueError("schedule file contains duplicate hour indices")
    return Schedule(frozenset(hours))


def weekly_profile(week_counts: Sequence) -> WeekHistogram:
    """Relative frequency over all weeks pooled (count-weighted)."""
    total = np.zeros(HOURS_PER_WEEK, dtype=float)
    for week in week_counts:
        total += np.asarray(week, dtype=float)
    return normalize(total)
