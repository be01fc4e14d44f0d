"""Competition scoring arithmetic: subtask, round and total scores.

Each subtask is worth up to 5 base points, split into labeled components.
A timed subtask scores (s / beta) * alpha where beta is the completion time
in seconds and alpha the operation coefficient (0.5 in-person teleop, 1
remote teleop, 4 autonomous). Untimed entries never divide by zero: the
default policy scores them 0, and an assumed-time override exists for
what-if analysis.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Tuple

LEGAL_ALPHAS = (0.5, 1.0, 4.0)
ALPHA_IN_PERSON, ALPHA_REMOTE, ALPHA_AUTONOMOUS = LEGAL_ALPHAS

ALPHA_BY_MODE = {
    "in_person": ALPHA_IN_PERSON,
    "remote": ALPHA_REMOTE,
    "autonomous": ALPHA_AUTONOMOUS,
}

MAX_SUBTASK_POINTS = 5
MIN_BETA_S = 1e-3  # zero-duration completions are clamped, never divided by zero


class MissingBeta(ValueError):
    """Subtask has no completion time; strict scoring cannot divide."""


@dataclass(frozen=True)
class SubtaskSpec:
    id: int
    name: str
    components: Tuple[Tuple[str, int], ...]  # (label, points)

    def __post_init__(self):
        total = sum(points for _, points in self.components)
        if total != MAX_SUBTASK_POINTS:
            raise ValueError(f"subtask {self.id} components sum to {total}, expected {MAX_SUBTASK_POINTS}")

    def points_for(self, label: str) -> Optional[int]:
        for name, points in self.components:
            if name == label:
                return points
        return None

    @property
    def labels(self) -> Tuple[str, ...]:
        return tuple(name for name, _ in self.components)


SUBTASKS: Tuple[SubtaskSpec, ...] = (
    SubtaskSpec(id=1, name="tablecloth unfolding", components=(("unfold tablecloth", 5),)),
    SubtaskSpec(id=2, name="container opening", components=(("unlock two sides", 3), ("remove lid", 2))),
    SubtaskSpec(
        id=3,
        name="pizza packing",
        components=(("place pizza", 1), ("align lid", 2), ("lock two sides", 2)),
    ),
)

SUBTASK_BY_ID = {spec.id: spec for spec in SUBTASKS}


@dataclass(frozen=True)
class SubtaskResult:
    subtask_id: int
    s: float  # achieved base points, 0..5
    beta_s: Optional[float]  # completion seconds; None = never timed
    alpha: float

    def __post_init__(self):
        if self.subtask_id not in SUBTASK_BY_ID:
            raise ValueError(f"unknown subtask id {self.subtask_id}")
        if not 0 <= self.s <= MAX_SUBTASK_POINTS:
            raise ValueError(f"base score {self.s} outside [0, {MAX_SUBTASK_POINTS}]")
        if self.beta_s is not None and not self.beta_s > 0:
            raise ValueError(f"completion time must be positive, got {self.beta_s}")
        if self.alpha not in LEGAL_ALPHAS:
            raise ValueError(f"alpha {self.alpha} not in {LEGAL_ALPHAS}")


@dataclass(frozen=True)
class RoundRecord:
    index: int  # 1-based round number
    results: Tuple[SubtaskResult, SubtaskResult, SubtaskResult]

    def __post_init__(self):
        if len(self.results) != 3:
            raise ValueError(f"a round holds exactly 3 subtask results, got {len(self.results)}")
        ids = tuple(r.subtask_id for r in self.results)
        if ids != (1, 2, 3):
            raise ValueError(f"subtasks must appear in prescribed order (1, 2, 3), got {ids}")


def subtask_score(result: SubtaskResult) -> float:
    """(s / beta) * alpha at full float precision."""
    if result.beta_s is None:
        raise MissingBeta(f"subtask {result.subtask_id} has no completion time")
    return (result.s / result.beta_s) * result.alpha


def round_score(
    record: RoundRecord,
    *,
    absent_policy: str = "zero",
    assumed_beta_s: Optional[float] = None,
) -> float:
    """Sum of the round's subtask scores.

    Untimed subtasks contribute 0 under the default ``"zero"`` policy; the
    ``"assume"`` policy scores them with ``assumed_beta_s`` instead.
    """
    if absent_policy not in ("zero", "assume"):
        raise ValueError(f"unknown beta-absent policy {absent_policy!r}")
    if absent_policy == "assume" and (assumed_beta_s is None or not assumed_beta_s > 0):
        raise ValueError("'assume' policy needs a positive assumed_beta_s")
    total = 0.0
    for result in record.results:
        if result.beta_s is None:
            if absent_policy == "assume":
                total += (result.s / assumed_beta_s) * result.alpha
            continue
        total += subtask_score(result)
    return total


def total_score(
    rounds: Iterable[RoundRecord],
    *,
    absent_policy: str = "zero",
    assumed_beta_s: Optional[float] = None,
) -> float:
    return sum(round_score(r, absent_policy=absent_policy, assumed_beta_s=assumed_beta_s) for r in rounds)
