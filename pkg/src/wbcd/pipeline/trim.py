"""Static-prefix detection and trimming for recorded episodes.

Demonstrations tend to start with the robot parked while the operator gets
ready; those idle frames carry no training signal. Onset is the first frame
whose end-effector displacement from the previous frame reaches the
threshold; trimming drops everything before it except a configurable number
of context frames.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .episode import Episode

DEFAULT_THRESHOLD_M = 2e-3
DEFAULT_WINDOW = 5
DEFAULT_KEEP_PREFIX = 1


class TooShort(ValueError):
    """Episode has fewer than two steps; displacement is undefined."""


@dataclass(frozen=True)
class TrimConfig:
    threshold_m: float = DEFAULT_THRESHOLD_M
    window: int = DEFAULT_WINDOW
    keep_prefix_frames: int = DEFAULT_KEEP_PREFIX

    def __post_init__(self):
        if not self.threshold_m > 0:
            raise ValueError(f"threshold must be positive, got {self.threshold_m}")
        if self.window < 1:
            raise ValueError(f"window must be >= 1, got {self.window}")
        if self.keep_prefix_frames < 0:
            raise ValueError(f"keep_prefix_frames must be >= 0, got {self.keep_prefix_frames}")


@dataclass(frozen=True)
class TrimResult:
    onset: Optional[int]  # first moving frame index, None if fully static
    dropped_steps: int
    fully_static: bool  # warning flag: nothing ever moved, episode unchanged


def detect_motion_onset(episode: Episode, cfg: TrimConfig = TrimConfig()) -> Optional[int]:
    """First frame index i >= 1 whose displacement d(i) reaches the threshold.

    d(i) is the larger of the two arms' EE position moves from step i-1 to
    step i. The window parameter exists to express "sustained motion" but
    with the default d(i) >= tau gate it reduces to the first crossing; it is
    kept so stricter variants (require any of the next W displacements to
    also cross) stay expressible.
    """
    if episode.steps < 2:
        raise TooShort(f"need at least 2 steps to detect motion, got {episode.steps}")
    d = episode.displacement()  # d[k] is the displacement of frame k+1
    hits = np.nonzero(d >= cfg.threshold_m)[0]
    if hits.size == 0:
        return None
    first = int(hits[0])
    # Sustained-motion check over [first, first + window): satisfied by the
    # crossing itself, so this never moves the onset later than the first hit.
    window_end = min(first + cfg.window, d.size)
    if not np.any(d[first:window_end] >= cfg.threshold_m):
        return None
    return first + 1  # displacement index k corresponds to frame k+1


def trim_episode(episode: Episode, cfg: TrimConfig = TrimConfig()) -> Tuple[Episode, TrimResult]:
    """Drop the static prefix, keeping ``keep_prefix_frames`` context frames.

    Steps [0, onset - keep_prefix_frames) are removed. A fully static
    episode is returned unchanged with the ``fully_static`` flag set.
    """
    onset = detect_motion_onset(episode, cfg)
    if onset is None:
        return episode, TrimResult(onset=None, dropped_steps=0, fully_static=True)
    start = onset - cfg.keep_prefix_frames
    if start <= 0:
        return episode, TrimResult(onset=onset, dropped_steps=0, fully_static=False)
    return episode.slice_steps(start), TrimResult(onset=onset, dropped_steps=start, fully_static=False)
