"""Competition scoring: arithmetic, event-driven sessions, official record, reports."""

from . import table1
from .model import (
    ALPHA_BY_MODE,
    LEGAL_ALPHAS,
    MAX_SUBTASK_POINTS,
    MIN_BETA_S,
    SUBTASK_BY_ID,
    SUBTASKS,
    MissingBeta,
    RoundRecord,
    SubtaskResult,
    SubtaskSpec,
    round_score,
    subtask_score,
    total_score,
)
from .report import format_beta, mean_round_durations, render_scorecard, report
from .session import (
    DEFAULT_WINDOW_S,
    EVENT_COMPONENT,
    EVENT_KINDS,
    EVENT_ROUND_FINISH,
    EVENT_ROUND_START,
    EVENT_SUBTASK_COMPLETE,
    EVENT_SUBTASK_START,
    DuplicateComponent,
    IllegalTransition,
    LogEvent,
    ScoringSession,
    SessionExpired,
    SessionLog,
    UnknownComponent,
)

__all__ = [
    "SUBTASKS",
    "SUBTASK_BY_ID",
    "SubtaskSpec",
    "SubtaskResult",
    "RoundRecord",
    "LEGAL_ALPHAS",
    "ALPHA_BY_MODE",
    "MAX_SUBTASK_POINTS",
    "MIN_BETA_S",
    "MissingBeta",
    "subtask_score",
    "round_score",
    "total_score",
    "ScoringSession",
    "SessionLog",
    "LogEvent",
    "IllegalTransition",
    "UnknownComponent",
    "DuplicateComponent",
    "SessionExpired",
    "DEFAULT_WINDOW_S",
    "EVENT_KINDS",
    "EVENT_ROUND_START",
    "EVENT_SUBTASK_START",
    "EVENT_COMPONENT",
    "EVENT_SUBTASK_COMPLETE",
    "EVENT_ROUND_FINISH",
    "render_scorecard",
    "report",
    "format_beta",
    "mean_round_durations",
    "table1",
]
