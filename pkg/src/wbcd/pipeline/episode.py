"""In-memory episode representation for recorded demonstrations."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from ..types import CAMERA_NAMES, FramePacket, ObservationBundle

ACTION_DIM = 16  # 7+7 arm joints plus 2 grippers; head is not commanded

OPERATOR_MODES = ("in_person", "remote", "autonomous")


class BadEpisode(ValueError):
    """Episode data violates a structural invariant."""


@dataclass
class EpisodeMeta:
    task: str
    operator_mode: str
    dt_s: float
    config_hash: str
    frame_counts: Dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if self.operator_mode not in OPERATOR_MODES:
            raise BadEpisode(f"operator_mode must be one of {OPERATOR_MODES}, got {self.operator_mode!r}")
        if not self.dt_s > 0:
            raise BadEpisode(f"dt_s must be positive, got {self.dt_s}")


@dataclass
class Episode:
    """All per-step series of one demonstration plus its camera frames.

    Poses are split into position and quaternion arrays so every series is a
    plain float64 matrix that can round-trip through the archive bit-exactly.
    """

    meta: EpisodeMeta
    joints: np.ndarray  # (T, 18) measured state
    actions: np.ndarray  # (T, 16) commanded joints + grippers
    ee_left_pos: np.ndarray  # (T, 3)
    ee_left_quat: np.ndarray  # (T, 4) w, x, y, z
    ee_right_pos: np.ndarray  # (T, 3)
    ee_right_quat: np.ndarray  # (T, 4)
    timestamps_ns: np.ndarray  # (T,) int64
    frames: Dict[str, List[FramePacket]]  # camera name -> one frame per step

    def __post_init__(self):
        self.joints = np.ascontiguousarray(self.joints, dtype=np.float64)
        self.actions = np.ascontiguousarray(self.actions, dtype=np.float64)
        self.ee_left_pos = np.ascontiguousarray(self.ee_left_pos, dtype=np.float64)
        self.ee_left_quat = np.ascontiguousarray(self.ee_left_quat, dtype=np.float64)
        self.ee_right_pos = np.ascontiguousarray(self.ee_right_pos, dtype=np.float64)
        self.ee_right_quat = np.ascontiguousarray(self.ee_right_quat, dtype=np.float64)
        self.timestamps_ns = np.ascontiguousarray(self.timestamps_ns, dtype=np.int64)
        self.validate()

    @property
    def steps(self) -> int:
        return self.joints.shape[0]

    def validate(self) -> None:
        t = self.joints.shape[0]
        if t < 1:
            raise BadEpisode("episode must have at least one step")
        if self.joints.shape != (t, 18):
            raise BadEpisode(f"joints must be (T, 18), got {self.joints.shape}")
        if self.actions.shape != (t, ACTION_DIM):
            raise BadEpisode(f"actions must be (T, {ACTION_DIM}), got {self.actions.shape}")
        for name, arr, width in (
            ("ee_left_pos", self.ee_left_pos, 3),
            ("ee_left_quat", self.ee_left_quat, 4),
            ("ee_right_pos", self.ee_right_pos, 3),
            ("ee_right_quat", self.ee_right_quat, 4),
        ):
            if arr.shape != (t, width):
                raise BadEpisode(f"{name} must be (T, {width}), got {arr.shape}")
        if self.timestamps_ns.shape != (t,):
            raise BadEpisode(f"timestamps_ns must be (T,), got {self.timestamps_ns.shape}")
        if t > 1 and not np.all(np.diff(self.timestamps_ns) > 0):
            raise BadEpisode("timestamps must be strictly increasing")
        for camera in CAMERA_NAMES:
            frames = self.frames.get(camera)
            if frames is None or len(frames) != t:
                n = None if frames is None else len(frames)
                raise BadEpisode(f"camera {camera!r} must have exactly T={t} frames, got {n}")
        self.meta.frame_counts = {camera: t for camera in CAMERA_NAMES}

    def displacement(self) -> np.ndarray:
        """Per-frame EE displacement d(i) for i in [1, T-1].

        d(i) is the larger of the two arms' position moves from step i-1 to
        step i; returned array has length T-1 where entry 0 is d(1).
        """
        dl = np.linalg.norm(np.diff(self.ee_left_pos, axis=0), axis=1)
        dr = np.linalg.norm(np.diff(self.ee_right_pos, axis=0), axis=1)
        return np.maximum(dl, dr)

    def slice_steps(self, start: int) -> "Episode":
        """New episode keeping steps [start, T)."""
        if not 0 <= start < self.steps:
            raise BadEpisode(f"slice start {start} out of range for T={self.steps}")
        return Episode(
            meta=EpisodeMeta(
                task=self.meta.task,
                operator_mode=self.meta.operator_mode,
                dt_s=self.meta.dt_s,
                config_hash=self.meta.config_hash,
            ),
            joints=self.joints[start:].copy(),
            actions=self.actions[start:].copy(),
            ee_left_pos=self.ee_left_pos[start:].copy(),
            ee_left_quat=self.ee_left_quat[start:].copy(),
            ee_right_pos=self.ee_right_pos[start:].copy(),
            ee_right_quat=self.ee_right_quat[start:].copy(),
            timestamps_ns=self.timestamps_ns[start:].copy(),
            frames={camera: list(self.frames[camera][start:]) for camera in CAMERA_NAMES},
        )

    def equals(self, other: "Episode") -> bool:
        """Bit-exact equality of every series, frame payload and meta field."""
        if self.meta.task != other.meta.task or self.meta.operator_mode != other.meta.operator_mode:
            return False
        if self.meta.dt_s != other.meta.dt_s or self.meta.config_hash != other.meta.config_hash:
            return False
        numeric = (
            np.array_equal(self.joints, other.joints)
            and np.array_equal(self.actions, other.actions)
            and np.array_equal(self.ee_left_pos, other.ee_left_pos)
            and np.array_equal(self.ee_left_quat, other.ee_left_quat)
            and np.array_equal(self.ee_right_pos, other.ee_right_pos)
            and np.array_equal(self.ee_right_quat, other.ee_right_quat)
            and np.array_equal(self.timestamps_ns, other.timestamps_ns)
        )
        if not numeric:
            return False
        for camera in CAMERA_NAMES:
            if len(self.frames[camera]) != len(other.frames[camera]):
                return False
            for a, b in zip(self.frames[camera], other.frames[camera]):
                if a != b:
                    return False
        return True


def episode_from_steps(
    steps: Sequence[Tuple[ObservationBundle, np.ndarray]],
    meta: EpisodeMeta,
) -> Episode:
    """Assemble an Episode from (observation, commanded action) pairs."""
    if len(steps) == 0:
        raise BadEpisode("cannot build an episode from zero steps")
    joints = np.stack([obs.joints.as_vector() for obs, _ in steps])
    actions = np.stack([np.asarray(a, dtype=np.float64) for _, a in steps])
    if actions.ndim != 2 or actions.shape[1] != ACTION_DIM:
        raise BadEpisode(f"actions must be {ACTION_DIM}-vectors, got shape {actions.shape}")
    frames: Dict[str, List[FramePacket]] = {camera: [] for camera in CAMERA_NAMES}
    for obs, _ in steps:
        for frame in obs.frames:
            frames[frame.camera_name].append(frame)
    return Episode(
        meta=meta,
        joints=joints,
        actions=actions,
        ee_left_pos=np.stack([obs.ee_left.position for obs, _ in steps]),
        ee_left_quat=np.stack([obs.ee_left.orientation for obs, _ in steps]),
        ee_right_pos=np.stack([obs.ee_right.position for obs, _ in steps]),
        ee_right_quat=np.stack([obs.ee_right.orientation for obs, _ in steps]),
        timestamps_ns=np.array([obs.timestamp_ns for obs, _ in steps], dtype=np.int64),
        frames=frames,
    )
