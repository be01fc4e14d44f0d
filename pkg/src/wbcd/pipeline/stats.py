"""Normalization statistics over episode actions and joint observations.

Statistics stream over episodes with Chan's parallel-moment merge, so
datasets never need concatenating in memory; results match the brute-force
concatenation within floating-point tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Tuple

import numpy as np

from .episode import ACTION_DIM, Episode

STD_FLOOR = 1e-2


class EmptyDataset(ValueError):
    """No episodes (or no steps) to compute over."""


@dataclass(frozen=True)
class NormStats:
    """Per-dimension mean/std for 16-vector actions and joint observations."""

    action_mean: np.ndarray
    action_std: np.ndarray
    obs_mean: np.ndarray
    obs_std: np.ndarray
    count: int

    def as_dict(self) -> dict:
        return {
            "action_mean": self.action_mean.tolist(),
            "action_std": self.action_std.tolist(),
            "obs_mean": self.obs_mean.tolist(),
            "obs_std": self.obs_std.tolist(),
            "count": self.count,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "NormStats":
        return cls(
            action_mean=np.asarray(raw["action_mean"], dtype=np.float64),
            action_std=np.asarray(raw["action_std"], dtype=np.float64),
            obs_mean=np.asarray(raw["obs_mean"], dtype=np.float64),
            obs_std=np.asarray(raw["obs_std"], dtype=np.float64),
            count=int(raw["count"]),
        )


class _Moments:
    """Running count / mean / sum-of-squared-deviations for one matrix stream."""

    def __init__(self, dim: int):
        self.n = 0
        self.mean = np.zeros(dim)
        self.m2 = np.zeros(dim)

    def update(self, block: np.ndarray) -> None:
        b_n = block.shape[0]
        if b_n == 0:
            return
        b_mean = block.mean(axis=0)
        b_m2 = ((block - b_mean) ** 2).sum(axis=0)
        if self.n == 0:
            self.n, self.mean, self.m2 = b_n, b_mean, b_m2
            return
        delta = b_mean - self.mean
        total = self.n + b_n
        self.mean = self.mean + delta * (b_n / total)
        self.m2 = self.m2 + b_m2 + delta**2 * (self.n * b_n / total)
        self.n = total

    def finish(self) -> Tuple[np.ndarray, np.ndarray, int]:
        if self.n == 0:
            raise EmptyDataset("no steps observed")
        std = np.sqrt(self.m2 / self.n)  # population std, matching np.std
        return self.mean, np.maximum(std, STD_FLOOR), self.n


def observation_vector(joints: np.ndarray) -> np.ndarray:
    """Project (T, 18) measured joints onto the 16 commanded dimensions."""
    return joints[:, :ACTION_DIM]


def compute_norm_stats(episodes: Iterable[Episode]) -> NormStats:
    """Mean/std per dimension over all steps of all episodes, std floored."""
    actions = _Moments(ACTION_DIM)
    obs = _Moments(ACTION_DIM)
    for episode in episodes:
        actions.update(episode.actions)
        obs.update(observation_vector(episode.joints))
    action_mean, action_std, count = actions.finish()
    obs_mean, obs_std, _ = obs.finish()
    return NormStats(
        action_mean=action_mean,
        action_std=action_std,
        obs_mean=obs_mean,
        obs_std=obs_std,
        count=count,
    )
