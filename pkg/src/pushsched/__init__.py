"""pushsched: learn when messages arrive, schedule push connections.

The toolkit ingests per-user message-arrival traces, learns hour-of-week
arrival patterns (fixed or adaptively decayed frequency models), turns
them into top-k on-hour schedules, scores the real-time-delivery /
connection-on-time tradeoff, and simulates push-delivery protocols
(short polling, long polling, websocket-style push, schedule-gated
push).
"""

from .trace import (
    ArrivalTrace,
    IitStats,
    TraceParseError,
    WeekHistogram,
    extract_dates_from_messages,
    hour_of_week,
    iit_stats,
    normalize,
    parse_trace_csv,
    split_weeks,
    week_start,
    write_trace_csv,
    HOURS_PER_WEEK,
)
from .learner import (
    FrequencyModel,
    Schedule,
    adaptive_update,
    bootstrap_adaptive,
    fixed_learn,
    load_model,
    load_schedule,
    rank_hours,
    save_model,
    save_schedule,
    top_k_schedule,
    training_week_count,
    weekly_profile,
)
from .evaluator import (
    AggregateCurve,
    AggregatePoint,
    CurvePoint,
    ScheduleScore,
    TradeoffCurve,
    aggregate_users,
    evaluate_schedule,
    final_adaptive_model,
    sweep_adaptive,
    sweep_fixed,
    walk_adaptive,
    write_aggregate_csv,
    write_curve_csv,
)
from .pushsim import (
    SimConfig,
    SimStats,
    gen_periodic_trace,
    gen_uniform_arrivals,
    simulate,
)

__version__ = "0.1.0"

__all__ = [
    "ArrivalTrace",
    "IitStats",
    "TraceParseError",
    "WeekHistogram",
    "extract_dates_from_messages",
    "hour_of_week",
    "iit_stats",
    "normalize",
    "parse_trace_csv",
    "split_weeks",
    "week_start",
    "write_trace_csv",
    "HOURS_PER_WEEK",
    "FrequencyModel",
    "Schedule",
    "adaptive_update",
    "bootstrap_adaptive",
    "fixed_learn",
    "load_model",
    "load_schedule",
    "rank_hours",
    "save_model",
    "save_schedule",
    "top_k_schedule",
    "training_week_count",
    "weekly_profile",
    "AggregateCurve",
    "AggregatePoint",
    "CurvePoint",
    "ScheduleScore",
    "TradeoffCurve",
    "aggregate_users",
    "evaluate_schedule",
    "final_adaptive_model",
    "sweep_adaptive",
    "sweep_fixed",
    "walk_adaptive",
    "write_aggregate_csv",
    "write_curve_csv",
    "SimConfig",
    "SimStats",
    "gen_periodic_trace",
    "gen_uniform_arrivals",
    "simulate",
    "__version__",
]
