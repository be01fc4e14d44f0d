"""The championship final's official record, as data and as a replayable log.

Nine rounds, all at the remote-teleoperation coefficient (alpha = 1). Every
subtask earned full base points except the last round's third subtask,
which shows 1 base point and no completion time — the engine represents
that cell as beta-absent rather than dividing by zero.
"""

from __future__ import annotations

from typing import List, Optional, Tuple

from .model import RoundRecord, SubtaskResult
from .session import ScoringSession, SessionLog

ALPHA = 1.0

# Completion times in seconds per (round, subtask); None = never timed.
BETA_S: Tuple[Tuple[Optional[int], ...], ...] = (
    (107, 13, 116),
    (84, 40, 75),
    (63, 56, 92),
    (138, 27, 30),
    (130, 55, 52),
    (58, 22, 59),
    (103, 16, 84),
    (84, 28, 102),
    (84, 10, None),
)

# Base points per (round, subtask).
BASE_POINTS: Tuple[Tuple[int, ...], ...] = (
    (5, 5, 5),
    (5, 5, 5),
    (5, 5, 5),
    (5, 5, 5),
    (5, 5, 5),
    (5, 5, 5),
    (5, 5, 5),
    (5, 5, 5),
    (5, 5, 1),
)

# Component achievement orders that realize the base points above.
_FULL_COMPONENTS = {
    1: ("unfold tablecloth",),
    2: ("unlock two sides", "remove lid"),
    3: ("place pizza", "align lid", "lock two sides"),
}
# Round 9's third subtask earned only the 1-point pizza placement.
_ROUND9_SUBTASK3 = ("place pizza",)


def official_rounds() -> List[RoundRecord]:
    """The record as RoundRecord values (pure data, no state machine)."""
    rounds = []
    for i, (betas, points) in enumerate(zip(BETA_S, BASE_POINTS), start=1):
        results = tuple(
            SubtaskResult(subtask_id=k + 1, s=float(points[k]), beta_s=betas[k], alpha=ALPHA) for k in range(3)
        )
        rounds.append(RoundRecord(index=i, results=results))
    return rounds


def official_log(gap_s: float = 2.0) -> SessionLog:
    """A synthetic event log that replays to the official record.

    Subtask durations equal the recorded times exactly; component marks land
    just before each completion. Rounds are separated by ``gap_s`` so the
    whole session stays inside the 30-minute window, as it did live.
    """
    session = ScoringSession()

    def at(seconds: float) -> int:
        return int(round(seconds * 1e9))

    clock_s = 0.0
    for round_i, (betas, points) in enumerate(zip(BETA_S, BASE_POINTS), start=1):
        session.start_round(at(clock_s))
        for k in range(3):
            subtask_id = k + 1
            beta = betas[k]
            session.start_subtask(subtask_id, ALPHA, at(clock_s))
            if round_i == 9 and subtask_id == 3:
                labels = _ROUND9_SUBTASK3
            else:
                labels = _FULL_COMPONENTS[subtask_id]
            if beta is None:
                # Interrupted: components land, the round ends, no timing.
                for j, label in enumerate(labels, start=1):
                    session.achieve(label, at(clock_s + j * 0.5))
                clock_s += len(labels) * 0.5
                break
            for j, label in enumerate(labels, start=1):
                session.achieve(label, at(clock_s + beta * j / (len(labels) + 1)))
            clock_s += beta
            session.complete_subtask(at(clock_s))
        session.finish_round(at(clock_s))
        clock_s += gap_s
    return session.log
