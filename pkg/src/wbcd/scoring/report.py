"""Scorecard rendering: per-round alpha/beta/score rows plus totals."""

from __future__ import annotations

from pathlib import Path
from typing import List, Optional, Sequence

from .model import MissingBeta, RoundRecord, round_score, subtask_score, total_score
from .session import ScoringSession, SessionLog


def format_beta(beta_s: Optional[float]) -> str:
    """Render seconds as m'ss'' (as printed in the official record); untimed -> 0."""
    if beta_s is None:
        return "0"
    total = int(round(beta_s))
    return f"{total // 60}'{total % 60:02d}''"


def mean_round_durations(rounds: Sequence[RoundRecord]) -> tuple:
    """(mean over all rounds, mean over fully timed rounds), in seconds.

    A round's duration is the sum of its timed subtask betas; rounds with an
    untimed subtask still count toward the first mean but not the second.
    """
    if not rounds:
        return (0.0, 0.0)
    durations = []
    complete_durations = []
    for record in rounds:
        timed = [r.beta_s for r in record.results if r.beta_s is not None]
        durations.append(sum(timed))
        if len(timed) == len(record.results):
            complete_durations.append(sum(timed))
    mean_all = sum(durations) / len(durations)
    mean_complete = sum(complete_durations) / len(complete_durations) if complete_durations else 0.0
    return (mean_all, mean_complete)


def render_scorecard(rounds: Sequence[RoundRecord], *, absent_policy: str = "zero") -> str:
    """Plain-text scorecard mirroring the official table's row layout."""
    lines: List[str] = []
    lines.append("scorecard")
    lines.append("=========")
    if not rounds:
        lines.append("(empty session)")
        lines.append("")
        lines.append("total score: 0.0000")
        return "\n".join(lines) + "\n"

    col = 10
    header = " " * 12 + "".join(f"{f'task {k}':>{col}}" for k in (1, 2, 3)) + f"{'round':>{col}}"
    lines.append(header)
    for record in rounds:
        alphas = "".join(f"{r.alpha:>{col}.1f}" for r in record.results)
        betas = "".join(f"{format_beta(r.beta_s):>{col}}" for r in record.results)
        bases = "".join(f"{r.s:>{col}.0f}" for r in record.results)
        scores = []
        for r in record.results:
            try:
                scores.append(f"{subtask_score(r):>{col}.4f}")
            except MissingBeta:
                scores.append(f"{'-':>{col}}")
        rscore = round_score(record, absent_policy=absent_policy)
        lines.append(f"round {record.index}#")
        lines.append(f"{'  alpha':<12}{alphas}")
        lines.append(f"{'  beta':<12}{betas}")
        lines.append(f"{'  s':<12}{bases}")
        lines.append(f"{'  score':<12}{''.join(scores)}{rscore:>{col}.4f}")
    mean_all, mean_complete = mean_round_durations(rounds)
    untimed = sum(1 for record in rounds for r in record.results if r.beta_s is None)
    lines.append("")
    lines.append(f"rounds: {len(rounds)}")
    if untimed:
        lines.append(f"untimed subtasks scored 0 under the default policy: {untimed}")
    lines.append(f"mean round duration, all rounds: {mean_all:.2f} s")
    lines.append(f"mean round duration, fully timed rounds: {mean_complete:.2f} s")
    lines.append(f"total score: {total_score(rounds, absent_policy=absent_policy):.4f}")
    return "\n".join(lines) + "\n"


def report(log: SessionLog, out_path=None, *, window_s: float = 1800.0) -> str:
    """Replay a session log and render (optionally write) its scorecard."""
    session = ScoringSession.replay(log, window_s=window_s)
    text = render_scorecard(session.rounds)
    if out_path is not None:
        p = Path(out_path)
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(text)
    return text
