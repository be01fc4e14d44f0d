"""Fixed-timestep robot simulator.

The simulator is deterministic by construction: time is an integer tick
counter multiplied by an integer nanosecond step, and the joint servo uses
an exact-arrival rule so repeated runs of the same command sequence land on
bit-identical states.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..config import RobotConfig
from ..types import CAMERA_NAMES, JointState, ObservationBundle
from .robot import RobotModel


@dataclass
class SimState:
    """Mutable simulation state: where the joints are and where they are going."""

    joints: JointState
    target: JointState
    tick_index: int
    dt_ns: int

    @property
    def sim_time_ns(self) -> int:
        return self.tick_index * self.dt_ns

    def copy(self) -> "SimState":
        return SimState(
            joints=self.joints.copy(),
            target=self.target.copy(),
            tick_index=self.tick_index,
            dt_ns=self.dt_ns,
        )


def initial_state(cfg: RobotConfig) -> SimState:
    """Robot parked at the ready pose, target equal to current."""
    return SimState(
        joints=cfg.ready.copy(),
        target=cfg.ready.copy(),
        tick_index=0,
        dt_ns=int(round(cfg.dt_s * 1e9)),
    )


def set_target(model: RobotModel, state: SimState, target: JointState) -> None:
    """Install a new servo target, clamped into the robot's limits."""
    state.target = model.clamp_targets(target)


def _servo(current: np.ndarray, target: np.ndarray, vmax: np.ndarray, dt: float) -> np.ndarray:
    """Rate-limited step with exact arrival.

    Once the remaining distance fits inside one step the joint is set to the
    target value itself rather than incremented, so terminal states are
    reproducible to the bit regardless of how the gap divides by the step.
    """
    delta = target - current
    step = np.asarray(vmax, dtype=np.float64) * dt
    return np.where(np.abs(delta) <= step, target, current + np.sign(delta) * step)


def tick(model: RobotModel, state: SimState) -> SimState:
    """Advance the simulation by one fixed timestep (mutates and returns state)."""
    cfg = model.cfg
    dt = cfg.dt_s
    j = state.joints
    t = state.target
    state.joints = JointState(
        left=_servo(j.left, t.left, cfg.left_arm.max_joint_speed, dt),
        right=_servo(j.right, t.right, cfg.right_arm.max_joint_speed, dt),
        grippers=_servo(j.grippers, t.grippers, np.full(2, cfg.gripper_slew_per_s), dt),
        head=_servo(j.head, t.head, cfg.head_speed, dt),
    )
    state.tick_index += 1
    return state


def snapshot(model: RobotModel, state: SimState) -> ObservationBundle:
    """Render all cameras and package the full observation for this tick."""
    from .render import render_frame  # local import: render depends on this module's types

    ee_left, ee_right = model.ee_poses(state.joints)
    frames = tuple(render_frame(model, state, name) for name in CAMERA_NAMES)
    return ObservationBundle(
        joints=state.joints.copy(),
        ee_left=ee_left,
        ee_right=ee_right,
        frames=frames,
        timestamp_ns=state.sim_time_ns,
    )
