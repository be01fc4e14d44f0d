"""Forward kinematics, Jacobians and damped least-squares IK for one 7-joint arm.

All quantities live in the arm base frame; mounting an arm on the robot body
is the robot model's job. The heavy lifting is delegated to the kernels
module (numba or numpy, see kernels.py).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from ..geometry import Pose, matrix_to_quat, quat_conjugate, quat_multiply, rotvec_from_quat
from . import kernels

LIMIT_EPS = 1e-9


class JointLimitViolation(ValueError):
    """A joint value lies outside its configured [lo, hi] range."""


class NumericalFailure(ArithmeticError):
    """The damped least-squares system produced a non-finite result."""


@dataclass
class ArmConfig:
    """Geometry and limits of one 7-DoF chain.

    axes: (7, 3) unit joint axes in each joint frame.
    origins: (7, 4, 4) parent-frame mount transform of each joint.
    ee_offset: (4, 4) tool transform after joint 7.
    limits: (7, 2) [lo, hi] radians.
    max_joint_speed: (7,) rad/s, all positive.
    """

    axes: np.ndarray
    origins: np.ndarray
    ee_offset: np.ndarray
    limits: np.ndarray
    max_joint_speed: np.ndarray
    name: str = "arm"

    def __post_init__(self):
        self.axes = np.ascontiguousarray(self.axes, dtype=np.float64).reshape(7, 3)
        self.origins = np.ascontiguousarray(self.origins, dtype=np.float64).reshape(7, 4, 4)
        self.ee_offset = np.ascontiguousarray(self.ee_offset, dtype=np.float64).reshape(4, 4)
        self.limits = np.ascontiguousarray(self.limits, dtype=np.float64).reshape(7, 2)
        self.max_joint_speed = np.ascontiguousarray(
            self.max_joint_speed, dtype=np.float64
        ).reshape(7)
        norms = np.linalg.norm(self.axes, axis=1)
        if np.any(np.abs(norms - 1.0) >= 1e-9):
            raise ValueError(f"joint axes must be unit-norm, got norms {norms}")
        if np.any(self.limits[:, 0] >= self.limits[:, 1]):
            raise ValueError("joint limits require lo < hi")
        if np.any(self.max_joint_speed <= 0):
            raise ValueError("max_joint_speed must be positive")

    def check_limits(self, joints: np.ndarray) -> None:
        joints = np.asarray(joints, dtype=np.float64).reshape(7)
        lo, hi = self.limits[:, 0], self.limits[:, 1]
        bad = (joints < lo - LIMIT_EPS) | (joints > hi + LIMIT_EPS)
        if np.any(bad):
            i = int(np.argmax(bad))
            raise JointLimitViolation(
                f"{self.name} joint {i + 1} = {joints[i]:.6f} outside "
                f"[{lo[i]:.6f}, {hi[i]:.6f}]"
            )

    def clamp(self, joints: np.ndarray) -> np.ndarray:
        return np.clip(np.asarray(joints, dtype=np.float64), self.limits[:, 0], self.limits[:, 1])


def forward_kinematics(config: ArmConfig, joints: np.ndarray) -> Pose:
    """EE pose in the arm base frame. Pure and deterministic."""
    config.check_limits(joints)
    q = np.ascontiguousarray(joints, dtype=np.float64).reshape(7)
    T = kernels.fk_ee(config.origins, config.axes, q, config.ee_offset)
    return Pose(T[:3, 3].copy(), matrix_to_quat(T[:3, :3]))


def jacobian(config: ArmConfig, joints: np.ndarray) -> np.ndarray:
    """6x7 EE Jacobian, rows [linear m/rad; angular rad/rad]."""
    config.check_limits(joints)
    q = np.ascontiguousarray(joints, dtype=np.float64).reshape(7)
    return kernels.geometric_jacobian(config.origins, config.axes, q, config.ee_offset)


def pose_error(current: Pose, target: Pose, use_orientation: bool = True) -> np.ndarray:
    """6-vector [position difference; rotation-vector of target * current^-1]."""
    e = np.zeros(6)
    e[:3] = target.position - current.position
    if use_orientation:
        q_rel = quat_multiply(target.orientation, quat_conjugate(current.orientation))
        e[3:] = rotvec_from_quat(q_rel)
    return e


def ik_step(config: ArmConfig, joints: np.ndarray, target: Pose, params) -> np.ndarray:
    """One damped least-squares step toward ``target``.

    Returns joint deltas such that joints + deltas stays within limits. The
    6-D error is scaled down so its position part never exceeds
    ``params.max_step`` per call.
    """
    if params.damping <= 0:
        raise ValueError("damping must be positive")
    config.check_limits(joints)
    q = np.ascontiguousarray(joints, dtype=np.float64).reshape(7)

    T = kernels.fk_ee(config.origins, config.axes, q, config.ee_offset)
    current = Pose(T[:3, 3].copy(), matrix_to_quat(T[:3, :3]))
    err = pose_error(current, target, getattr(params, "use_orientation", True))
    pos_norm = float(np.linalg.norm(err[:3]))
    if pos_norm > params.max_step:
        err *= params.max_step / pos_norm

    J = kernels.geometric_jacobian(config.origins, config.axes, q, config.ee_offset)
    dq = kernels.dls_delta(J, err, params.damping)
    if not np.all(np.isfinite(dq)):
        raise NumericalFailure("damped least-squares step produced non-finite deltas")
    return config.clamp(q + dq) - q


@dataclass
class IkParams:
    """Solver knobs for the standalone IK loop (duck-compatible with
    the retargeting parameters, which carry the same three fields)."""

    damping: float = 0.05
    max_step: float = 0.1
    use_orientation: bool = True


def solve_ik(
    config: ArmConfig,
    joints: np.ndarray,
    target: Pose,
    params=None,
    *,
    max_iters: int = 50,
    pos_tol: float = 1e-4,
) -> Tuple[np.ndarray, bool, int]:
    """Iterate damped least-squares steps until the EE position closes.

    Returns ``(joints, converged, iterations)``; convergence means the
    position error dropped below ``pos_tol`` meters. The orientation error
    keeps shrinking along the way but only position gates convergence.
    """
    q = np.asarray(joints, dtype=np.float64).reshape(7).copy()
    if params is None:
        params = IkParams()
    for i in range(max_iters):
        current = forward_kinematics(config, q)
        if float(np.linalg.norm(target.position - current.position)) < pos_tol:
            return q, True, i
        q = q + ik_step(config, q, target, params)
    current = forward_kinematics(config, q)
    done = float(np.linalg.norm(target.position - current.position)) < pos_tol
    return q, done, max_iters
