"""Before/after trimming verification plots: one CSV and one SVG per arm.

These are static artifacts for eyeballing what the trimmer did. The SVG is
written by hand (no plotting dependency): displacement curves for the
original and trimmed episode, with a single vertical marker at the detected
motion onset.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import List, Optional

import numpy as np

from .episode import Episode
from .trim import TrimResult

_WIDTH = 640
_HEIGHT = 320
_MARGIN = 40


def _polyline(xs: np.ndarray, ys: np.ndarray, color: str, width: float, dash: str = "") -> str:
    pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(xs, ys))
    dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
    return f'<polyline fill="none" stroke="{color}" stroke-width="{width}"{dash_attr} points="{pts}" />'


def _svg_for_arm(
    disp_before: np.ndarray,
    disp_after: np.ndarray,
    dropped: int,
    onset: Optional[int],
    title: str,
) -> str:
    t_max = max(len(disp_before), 1)
    d_max = max(float(disp_before.max()) if disp_before.size else 0.0, 1e-6)

    def x_px(step: float) -> float:
        return _MARGIN + (step / t_max) * (_WIDTH - 2 * _MARGIN)

    def y_px(d: float) -> float:
        return _HEIGHT - _MARGIN - (d / d_max) * (_HEIGHT - 2 * _MARGIN)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}">',
        f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white" />',
        f'<text x="{_MARGIN}" y="20" font-family="monospace" font-size="13">{title}</text>',
        f'<line x1="{_MARGIN}" y1="{_HEIGHT - _MARGIN}" x2="{_WIDTH - _MARGIN}" y2="{_HEIGHT - _MARGIN}" '
        'stroke="black" stroke-width="1" />',
        f'<line x1="{_MARGIN}" y1="{_MARGIN}" x2="{_MARGIN}" y2="{_HEIGHT - _MARGIN}" '
        'stroke="black" stroke-width="1" />',
    ]
    if disp_before.size:
        steps = np.arange(1, len(disp_before) + 1, dtype=np.float64)
        parts.append(
            _polyline(np.vectorize(x_px)(steps), np.vectorize(y_px)(disp_before), "#999999", 1.5, dash="4,3")
        )
    if disp_after.size:
        # The trimmed curve is plotted at its original step indices so the
        # two curves coincide where frames were kept.
        steps = np.arange(1, len(disp_after) + 1, dtype=np.float64) + dropped
        parts.append(_polyline(np.vectorize(x_px)(steps), np.vectorize(y_px)(disp_after), "#1f6fb2", 2.0))
    if onset is not None:
        x = x_px(float(onset))
        parts.append(
            f'<line class="trim-marker" x1="{x:.2f}" y1="{_MARGIN}" x2="{x:.2f}" y2="{_HEIGHT - _MARGIN}" '
            'stroke="#c0392b" stroke-width="1.5" stroke-dasharray="6,3" />'
        )
    parts.append("</svg>")
    return "\n".join(parts)


def emit_trim_plot(
    before: Episode,
    after: Episode,
    out_base,
    result: Optional[TrimResult] = None,
) -> List[Path]:
    """Write displacement CSV and per-arm SVG overlays; returns the paths.

    ``out_base`` is a path prefix; files are ``<base>_displacement.csv``,
    ``<base>_left.svg`` and ``<base>_right.svg``. Pass the TrimResult to
    place the onset marker exactly; without it the marker is inferred from
    the dropped-step count.
    """
    base = Path(out_base)
    base.parent.mkdir(parents=True, exist_ok=True)
    dropped = before.steps - after.steps
    if result is not None:
        onset = result.onset
    else:
        onset = dropped + 1 if dropped > 0 else None

    dl_before = np.linalg.norm(np.diff(before.ee_left_pos, axis=0), axis=1)
    dr_before = np.linalg.norm(np.diff(before.ee_right_pos, axis=0), axis=1)
    dl_after = np.linalg.norm(np.diff(after.ee_left_pos, axis=0), axis=1)
    dr_after = np.linalg.norm(np.diff(after.ee_right_pos, axis=0), axis=1)

    csv_path = base.parent / f"{base.name}_displacement.csv"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "left_disp_m", "right_disp_m", "kept"])
        for i in range(len(dl_before)):
            step = i + 1  # displacement of frame `step` relative to step-1
            writer.writerow([step, f"{dl_before[i]:.9f}", f"{dr_before[i]:.9f}", int(step >= dropped + 1)])

    left_path = base.parent / f"{base.name}_left.svg"
    right_path = base.parent / f"{base.name}_right.svg"
    left_path.write_text(_svg_for_arm(dl_before, dl_after, dropped, onset, "left EE displacement per frame"))
    right_path.write_text(_svg_for_arm(dr_before, dr_after, dropped, onset, "right EE displacement per frame"))
    return [csv_path, left_path, right_path]
