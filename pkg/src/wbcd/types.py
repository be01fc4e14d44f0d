"""Domain types shared across the stack."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import Pose

CAMERA_NAMES = ("head", "wrist_left", "wrist_right")
CAMERA_IDS = {name: i for i, name in enumerate(CAMERA_NAMES)}

JPEG_SOI = b"\xff\xd8"
JPEG_EOI = b"\xff\xd9"


@dataclass
class JointState:
    """Full robot configuration: 7+7 arm joints, 2 grippers in [0, 1], 2 head joints."""

    left: np.ndarray
    right: np.ndarray
    grippers: np.ndarray = field(default_factory=lambda: np.ones(2))
    head: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        self.left = np.asarray(self.left, dtype=np.float64).reshape(7).copy()
        self.right = np.asarray(self.right, dtype=np.float64).reshape(7).copy()
        self.grippers = np.asarray(self.grippers, dtype=np.float64).reshape(2).copy()
        self.head = np.asarray(self.head, dtype=np.float64).reshape(2).copy()
        if np.any(self.grippers < -1e-12) or np.any(self.grippers > 1 + 1e-12):
            raise ValueError(f"gripper values outside [0, 1]: {self.grippers}")
        self.grippers = np.clip(self.grippers, 0.0, 1.0)

    def copy(self) -> "JointState":
        return JointState(self.left, self.right, self.grippers, self.head)

    def as_vector(self) -> np.ndarray:
        """18-vector [left(7), right(7), grippers(2), head(2)]."""
        return np.concatenate([self.left, self.right, self.grippers, self.head])

    def as_action(self) -> np.ndarray:
        """Commanded 16-vector: arm joints plus grippers, head excluded."""
        return np.concatenate([self.left, self.right, self.grippers])

    @classmethod
    def from_vector(cls, v: np.ndarray) -> "JointState":
        v = np.asarray(v, dtype=np.float64).reshape(18)
        return cls(v[0:7], v[7:14], v[14:16], v[16:18])

    def allclose(self, other: "JointState", tol: float = 0.0) -> bool:
        return (
            np.allclose(self.left, other.left, atol=tol, rtol=0)
            and np.allclose(self.right, other.right, atol=tol, rtol=0)
            and np.allclose(self.grippers, other.grippers, atol=tol, rtol=0)
            and np.allclose(self.head, other.head, atol=tol, rtol=0)
        )


@dataclass(frozen=True)
class FramePacket:
    """One compressed camera image. codec 0 means baseline JFIF."""

    camera_id: int
    seq: int
    capture_time_ns: int
    codec: int
    width: int
    height: int
    payload: bytes

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("frame dimensions must be positive")
        if self.codec == 0:
            if not (self.payload.startswith(JPEG_SOI) and self.payload.endswith(JPEG_EOI)):
                raise ValueError("codec 0 payload is not a JFIF byte stream")

    @property
    def camera_name(self) -> str:
        return CAMERA_NAMES[self.camera_id]


@dataclass
class ObservationBundle:
    """Per-tick observation: joints, EE poses, and the three camera frames."""

    joints: JointState
    ee_left: Pose
    ee_right: Pose
    frames: tuple
    timestamp_ns: int

    def __post_init__(self):
        ids = sorted(f.camera_id for f in self.frames)
        if len(self.frames) != 3 or ids != [0, 1, 2]:
            raise ValueError("observation bundle requires exactly 3 frames with distinct cameras")

    def frame(self, camera_name: str) -> FramePacket:
        for f in self.frames:
            if f.camera_name == camera_name:
                return f
        raise KeyError(camera_name)
