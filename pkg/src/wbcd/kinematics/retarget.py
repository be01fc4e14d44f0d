"""Controller-pose to joint-target retargeting for the dual-arm robot.

The mapping is clutched and relative: while the clutch is engaged,
controller displacement from the engage-time anchor drives the EE target
away from the engage-time EE pose, scaled and clamped to the workspace box.
Releasing the clutch freezes the robot and lets the operator reposition the
input device.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from ..geometry import Pose, quat_conjugate, quat_multiply, quat_normalize
from ..types import JointState
from .arm import ArmConfig, forward_kinematics, ik_step


@dataclass
class RetargetParams:
    translation_scale: float = 1.0
    clutch_engaged: bool = False
    damping: float = 0.05
    max_step: float = 0.1
    workspace_min: np.ndarray = field(default_factory=lambda: np.array([-1.5, -1.5, -1.5]))
    workspace_max: np.ndarray = field(default_factory=lambda: np.array([1.5, 1.5, 1.5]))
    use_orientation: bool = True

    def __post_init__(self):
        self.workspace_min = np.asarray(self.workspace_min, dtype=np.float64).reshape(3)
        self.workspace_max = np.asarray(self.workspace_max, dtype=np.float64).reshape(3)
        if not 0 < self.translation_scale <= 10:
            raise ValueError("translation_scale must be in (0, 10]")
        if not 0 < self.damping <= 1:
            raise ValueError("damping must be in (0, 1]")
        if self.max_step <= 0:
            raise ValueError("max_step must be positive")
        if np.any(self.workspace_min >= self.workspace_max):
            raise ValueError("workspace box requires min < max per axis")


@dataclass
class ClutchAnchors:
    """Controller and EE poses captured the moment the clutch engaged."""

    left_hand: Pose
    right_hand: Pose
    ee_left: Pose
    ee_right: Pose


def capture_anchors(
    current: JointState,
    left_hand: Pose,
    right_hand: Pose,
    left_config: ArmConfig,
    right_config: ArmConfig,
) -> ClutchAnchors:
    return ClutchAnchors(
        left_hand=left_hand,
        right_hand=right_hand,
        ee_left=forward_kinematics(left_config, current.left),
        ee_right=forward_kinematics(right_config, current.right),
    )


def ee_target(hand: Pose, hand_anchor: Pose, ee_anchor: Pose, params: RetargetParams) -> Pose:
    """Anchor-relative EE target, clamped component-wise to the workspace box."""
    pos = ee_anchor.position + params.translation_scale * (hand.position - hand_anchor.position)
    pos = np.clip(pos, params.workspace_min, params.workspace_max)
    q_rel = quat_multiply(hand.orientation, quat_conjugate(hand_anchor.orientation))
    quat = quat_normalize(quat_multiply(q_rel, ee_anchor.orientation))
    return Pose(pos, quat)


def retarget(
    current: JointState,
    left_hand: Pose,
    right_hand: Pose,
    gripper_buttons: Tuple[bool, bool],
    params: RetargetParams,
    anchors: Optional[ClutchAnchors],
    left_config: ArmConfig,
    right_config: ArmConfig,
) -> JointState:
    """Map controller poses and buttons to a target JointState.

    Disengaged clutch returns ``current`` unchanged. A pressed gripper
    button commands closed (0.0), released commands open (1.0); the
    simulator slews toward those targets.
    """
    if not params.clutch_engaged or anchors is None:
        return current.copy()

    target_left = ee_target(left_hand, anchors.left_hand, anchors.ee_left, params)
    target_right = ee_target(right_hand, anchors.right_hand, anchors.ee_right, params)

    dq_left = ik_step(left_config, current.left, target_left, params)
    dq_right = ik_step(right_config, current.right, target_right, params)

    grippers = np.array([0.0 if gripper_buttons[0] else 1.0, 0.0 if gripper_buttons[1] else 1.0])
    return JointState(
        left=current.left + dq_left,
        right=current.right + dq_right,
        grippers=grippers,
        head=current.head,
    )
