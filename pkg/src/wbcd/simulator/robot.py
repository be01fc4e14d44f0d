"""Dual-arm robot model: arm chains composed with their body mounts."""

from __future__ import annotations

import numpy as np

from ..config import RobotConfig
from ..geometry import Pose, transform_from_pose
from ..kinematics.arm import forward_kinematics
from ..types import JointState


class RobotModel:
    """Mount-aware wrapper over the two arm chains.

    EE poses from this class are in the robot base frame; the kinematics
    module itself works in per-arm base frames.
    """

    def __init__(self, cfg: RobotConfig):
        self.cfg = cfg

    def fk_left(self, joints: np.ndarray) -> Pose:
        arm_pose = forward_kinematics(self.cfg.left_arm, joints)
        return Pose.from_transform(self.cfg.mount_left @ transform_from_pose(arm_pose))

    def fk_right(self, joints: np.ndarray) -> Pose:
        arm_pose = forward_kinematics(self.cfg.right_arm, joints)
        return Pose.from_transform(self.cfg.mount_right @ transform_from_pose(arm_pose))

    def ee_poses(self, state: JointState):
        return self.fk_left(state.left), self.fk_right(state.right)

    def clamp_targets(self, targets: JointState) -> JointState:
        """Clamp a commanded state into limits; applied on target ingestion."""
        return JointState(
            left=self.cfg.left_arm.clamp(targets.left),
            right=self.cfg.right_arm.clamp(targets.right),
            grippers=np.clip(targets.grippers, 0.0, 1.0),
            head=np.clip(targets.head, self.cfg.head_limits[:, 0], self.cfg.head_limits[:, 1]),
        )

    def assert_within_limits(self, state: JointState) -> None:
        self.cfg.left_arm.check_limits(state.left)
        self.cfg.right_arm.check_limits(state.right)
