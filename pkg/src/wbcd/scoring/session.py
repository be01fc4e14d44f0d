"""Event-driven scoring state machine with an explicit clock.

Every transition takes the event timestamp as an argument, so live sessions
(driven by a monotonic clock) and replayed logs (driven by recorded
timestamps) run the identical code path and produce identical records.

State machine: idle -> round -> subtask 1 -> 2 -> 3 -> round done -> idle.
A 30-minute countdown starting at the first round gate new round starts; a
round already in progress may always be finished.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import List, Optional, Tuple

from .model import (
    LEGAL_ALPHAS,
    MIN_BETA_S,
    SUBTASK_BY_ID,
    RoundRecord,
    SubtaskResult,
    SubtaskSpec,
)

DEFAULT_WINDOW_S = 1800.0

EVENT_ROUND_START = "round_start"
EVENT_SUBTASK_START = "subtask_start"
EVENT_COMPONENT = "component_achieved"
EVENT_SUBTASK_COMPLETE = "subtask_complete"
EVENT_ROUND_FINISH = "round_finish"

EVENT_KINDS = (
    EVENT_ROUND_START,
    EVENT_SUBTASK_START,
    EVENT_COMPONENT,
    EVENT_SUBTASK_COMPLETE,
    EVENT_ROUND_FINISH,
)


class IllegalTransition(RuntimeError):
    pass


class UnknownComponent(ValueError):
    pass


class DuplicateComponent(ValueError):
    pass


class SessionExpired(RuntimeError):
    pass


@dataclass(frozen=True)
class LogEvent:
    kind: str
    t_ns: int
    subtask_id: int = 0
    alpha: float = 0.0
    label: str = ""


@dataclass
class SessionLog:
    """Ordered, replayable record of every scoring event."""

    events: List[LogEvent]

    def to_json(self) -> str:
        return json.dumps({"schema": "wbcd-session-log/1", "events": [asdict(e) for e in self.events]}, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "SessionLog":
        raw = json.loads(text)
        if raw.get("schema") != "wbcd-session-log/1":
            raise ValueError(f"unsupported session log schema {raw.get('schema')!r}")
        return cls(events=[LogEvent(**e) for e in raw["events"]])

    def save(self, path) -> Path:
        p = Path(path)
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(self.to_json() + "\n")
        return p

    @classmethod
    def load(cls, path) -> "SessionLog":
        return cls.from_json(Path(path).read_text())


class ScoringSession:
    """Single-owner scoring engine; all mutation goes through transitions."""

    def __init__(self, window_s: float = DEFAULT_WINDOW_S):
        self.window_s = window_s
        self.state = "idle"  # idle | round | subtask
        self.session_start_ns: Optional[int] = None
        self.last_event_ns: Optional[int] = None
        self.rounds: List[RoundRecord] = []
        self.log = SessionLog(events=[])
        self._round_index = 0
        self._round_results: List[SubtaskResult] = []
        self._next_subtask = 1
        self._active: Optional[SubtaskSpec] = None
        self._active_alpha = 0.0
        self._active_start_ns = 0
        self._achieved: dict = {}

    # -- helpers -------------------------------------------------------------

    def _advance_clock(self, t_ns: int) -> None:
        if self.last_event_ns is not None and t_ns < self.last_event_ns:
            raise ValueError(f"event time {t_ns} precedes previous event {self.last_event_ns}; the clock is monotonic")
        self.last_event_ns = t_ns

    def _record(self, event: LogEvent) -> None:
        self.log.events.append(event)

    # -- transitions -----------------------------------------------------------

    def start_round(self, t_ns: int) -> int:
        if self.state != "idle":
            raise IllegalTransition(f"cannot start a round while {self.state}")
        self._advance_clock(t_ns)
        if self.session_start_ns is None:
            self.session_start_ns = t_ns
        elif (t_ns - self.session_start_ns) / 1e9 >= self.window_s:
            raise SessionExpired(f"the {self.window_s:.0f}-second session window has elapsed; no new rounds")
        self._round_index += 1
        self._round_results = []
        self._next_subtask = 1
        self.state = "round"
        self._record(LogEvent(kind=EVENT_ROUND_START, t_ns=t_ns))
        return self._round_index

    def start_subtask(self, subtask_id: int, alpha: float, t_ns: int) -> None:
        if self.state == "subtask":
            raise IllegalTransition(f"subtask {self._active.id} is still active")
        if self.state != "round":
            raise IllegalTransition("no round in progress")
        if subtask_id != self._next_subtask:
            raise IllegalTransition(
                f"subtasks run in prescribed order; expected {self._next_subtask}, got {subtask_id}"
            )
        if subtask_id not in SUBTASK_BY_ID:
            raise IllegalTransition(f"no such subtask {subtask_id}")
        if alpha not in LEGAL_ALPHAS:
            raise ValueError(f"alpha {alpha} not in {LEGAL_ALPHAS}")
        self._advance_clock(t_ns)
        self._active = SUBTASK_BY_ID[subtask_id]
        self._active_alpha = alpha
        self._active_start_ns = t_ns
        self._achieved = {}
        self.state = "subtask"
        self._record(LogEvent(kind=EVENT_SUBTASK_START, t_ns=t_ns, subtask_id=subtask_id, alpha=alpha))

    def achieve(self, label: str, t_ns: int) -> int:
        """Mark one component of the active subtask done; returns its points."""
        if self.state != "subtask":
            raise IllegalTransition("no subtask active")
        points = self._active.points_for(label)
        if points is None:
            raise UnknownComponent(f"{label!r} is not a component of subtask {self._active.id} ({self._active.labels})")
        if label in self._achieved:
            raise DuplicateComponent(f"{label!r} already achieved in this subtask")
        self._advance_clock(t_ns)
        self._achieved[label] = points
        self._record(LogEvent(kind=EVENT_COMPONENT, t_ns=t_ns, subtask_id=self._active.id, label=label))
        return points

    def complete_subtask(self, t_ns: int) -> SubtaskResult:
        if self.state != "subtask":
            raise IllegalTransition("no subtask active")
        self._advance_clock(t_ns)
        beta_s = max((t_ns - self._active_start_ns) / 1e9, MIN_BETA_S)
        result = SubtaskResult(
            subtask_id=self._active.id,
            s=float(sum(self._achieved.values())),
            beta_s=beta_s,
            alpha=self._active_alpha,
        )
        self._round_results.append(result)
        self._record(LogEvent(kind=EVENT_SUBTASK_COMPLETE, t_ns=t_ns, subtask_id=self._active.id))
        self._active = None
        self._next_subtask += 1
        self.state = "round"
        return result

    def finish_round(self, t_ns: int) -> RoundRecord:
        """Close the round; in-progress and unattempted subtasks go untimed.

        An interrupted subtask keeps the base points already achieved but has
        no completion time (beta absent); unattempted subtasks score 0.
        """
        if self.state not in ("round", "subtask"):
            raise IllegalTransition("no round in progress")
        self._advance_clock(t_ns)
        if self.state == "subtask":
            self._round_results.append(
                SubtaskResult(
                    subtask_id=self._active.id,
                    s=float(sum(self._achieved.values())),
                    beta_s=None,
                    alpha=self._active_alpha,
                )
            )
            self._next_subtask = self._active.id + 1
            self._active = None
        for missing in range(self._next_subtask, 4):
            self._round_results.append(
                SubtaskResult(subtask_id=missing, s=0.0, beta_s=None, alpha=self._round_alpha_default())
            )
        record = RoundRecord(index=self._round_index, results=tuple(self._round_results))
        self.rounds.append(record)
        self._round_results = []
        self.state = "idle"
        self._record(LogEvent(kind=EVENT_ROUND_FINISH, t_ns=t_ns))
        return record

    def _round_alpha_default(self) -> float:
        """Alpha recorded for never-started subtasks (s=0 scores 0 regardless)."""
        if self._round_results:
            return self._round_results[-1].alpha
        return 1.0

    # -- replay ----------------------------------------------------------------

    @classmethod
    def replay(cls, log: SessionLog, window_s: float = DEFAULT_WINDOW_S) -> "ScoringSession":
        """Rebuild a session by running every logged event through the machine."""
        session = cls(window_s=window_s)
        for event in log.events:
            if event.kind == EVENT_ROUND_START:
                session.start_round(event.t_ns)
            elif event.kind == EVENT_SUBTASK_START:
                session.start_subtask(event.subtask_id, event.alpha, event.t_ns)
            elif event.kind == EVENT_COMPONENT:
                session.achieve(event.label, event.t_ns)
            elif event.kind == EVENT_SUBTASK_COMPLETE:
                session.complete_subtask(event.t_ns)
            elif event.kind == EVENT_ROUND_FINISH:
                session.finish_round(event.t_ns)
            else:
                raise ValueError(f"unknown event kind {event.kind!r}")
        return session
