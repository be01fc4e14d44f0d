from .arm import (
    ArmConfig,
    IkParams,
    JointLimitViolation,
    NumericalFailure,
    forward_kinematics,
    jacobian,
    ik_step,
    solve_ik,
)
from .retarget import RetargetParams, ClutchAnchors, capture_anchors, retarget

__all__ = [
    "ArmConfig",
    "IkParams",
    "JointLimitViolation",
    "NumericalFailure",
    "forward_kinematics",
    "jacobian",
    "ik_step",
    "solve_ik",
    "RetargetParams",
    "ClutchAnchors",
    "capture_anchors",
    "retarget",
]
