"""Action chunking: fixed-horizon action windows for every episode step."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from .episode import ACTION_DIM, Episode

DEFAULT_CHUNK = 30


@dataclass(frozen=True)
class ChunkSample:
    """Training sample at step t: current observation plus the next K actions.

    Past the end of the episode the chunk repeats the last real action and
    the mask goes false, so models can ignore padding while the values stay
    in-distribution.
    """

    t: int
    joints: np.ndarray  # (16,) observed joints+grippers at t
    frame_refs: Tuple[int, int, int]  # per-camera frame index (== t)
    action_chunk: np.ndarray  # (K, 16)
    pad_mask: np.ndarray  # (K,) bool; pad_mask[i] iff t + i < T


def make_chunks(episode: Episode, chunk_size: int = DEFAULT_CHUNK) -> List[ChunkSample]:
    """One ChunkSample per step; exactly T samples."""
    if chunk_size < 1:
        raise ValueError(f"chunk size must be >= 1, got {chunk_size}")
    steps = episode.steps
    actions = episode.actions
    samples = []
    for t in range(steps):
        end = min(t + chunk_size, steps)
        real = actions[t:end]
        if end - t < chunk_size:
            pad = np.repeat(actions[steps - 1 : steps], chunk_size - (end - t), axis=0)
            chunk = np.concatenate([real, pad], axis=0)
        else:
            chunk = real.copy()
        mask = (t + np.arange(chunk_size)) < steps
        samples.append(
            ChunkSample(
                t=t,
                joints=episode.joints[t, :ACTION_DIM].copy(),
                frame_refs=(t, t, t),
                action_chunk=chunk,
                pad_mask=mask,
            )
        )
    return samples
