"""Configuration loading for the robot, simulator, scene and defaults.

One YAML file configures everything; see docs/arm-config.md for the schema
and src/wbcd/config/default.yaml for the shipped default. The kinematics
section is hashed so episode archives can be checked against the robot
they were recorded on.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from .geometry import make_transform, rpy_to_matrix
from .kinematics.arm import ArmConfig
from .kinematics.retarget import RetargetParams
from .types import JointState


class BadConfig(ValueError):
    """The configuration file is missing fields or fails validation."""


@dataclass
class CameraSpec:
    width: int
    height: int
    focal_px: float
    jpeg_quality: int


@dataclass
class PropSpec:
    name: str
    position: np.ndarray
    rgb: tuple
    radius: float


@dataclass
class SceneSpec:
    background_rgb: tuple
    marker_radius: float
    left_ee_rgb: tuple
    right_ee_rgb: tuple
    props: list


@dataclass
class RobotConfig:
    left_arm: ArmConfig
    right_arm: ArmConfig
    mount_left: np.ndarray
    mount_right: np.ndarray
    ready: JointState
    head_limits: np.ndarray
    head_speed: np.ndarray
    gripper_slew_per_s: float
    dt_s: float
    stream_every_n_ticks: int
    camera: CameraSpec
    head_cam_position: np.ndarray
    head_cam_look_at: np.ndarray
    wrist_cam_offset: np.ndarray
    scene: SceneSpec
    retarget: RetargetParams
    tcp_port: int
    ws_port: int
    frame_buffer: int
    heartbeat_ms: int
    session_window_s: float
    session_default_alpha: float
    reference_all_zero_position: np.ndarray
    reference_all_zero_quat: np.ndarray
    config_hash: str
    source_path: Optional[str] = None


def _require(mapping: dict, key: str, where: str):
    if key not in mapping:
        raise BadConfig(f"missing '{key}' in {where}")
    return mapping[key]


def _transform(xyz, rpy) -> np.ndarray:
    return make_transform(rpy_to_matrix(rpy), xyz)


def _arm_from_yaml(arm: dict, name: str) -> ArmConfig:
    axes = np.array(_require(arm, "joint_axes", "arm"))
    xyz = _require(arm, "joint_origins_xyz_m", "arm")
    rpy = _require(arm, "joint_origins_rpy_rad", "arm")
    origins = np.stack([_transform(x, r) for x, r in zip(xyz, rpy)])
    ee = _transform(_require(arm, "ee_offset_xyz_m", "arm"), _require(arm, "ee_offset_rpy_rad", "arm"))
    try:
        return ArmConfig(
            axes=axes,
            origins=origins,
            ee_offset=ee,
            limits=np.array(_require(arm, "joint_limits_rad", "arm")),
            max_joint_speed=np.array(_require(arm, "max_joint_speed_rad_s", "arm")),
            name=name,
        )
    except ValueError as e:
        raise BadConfig(str(e)) from e


def kinematics_hash(raw: dict) -> str:
    """Stable hash of every config section that shapes recorded trajectories.

    Covers geometry (arm, mounts, ready pose) and dynamics (sim timestep,
    slew rates, head speed); sections that only affect rendering or network
    plumbing are deliberately excluded so cosmetic edits don't orphan
    archives.
    """
    payload = {
        "arm": raw.get("arm"),
        "mounts": raw.get("mounts"),
        "ready": raw.get("ready_joints_rad"),
        "head": raw.get("head"),
        "gripper": raw.get("gripper"),
        "dt_s": (raw.get("sim") or {}).get("dt_s"),
    }
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def default_config_text() -> str:
    return resources.files("wbcd").joinpath("data/default.yaml").read_text()


def load_config(path: Optional[str] = None) -> RobotConfig:
    """Load a robot config; ``None`` loads the packaged default."""
    if path is None:
        raw = yaml.safe_load(default_config_text())
        source = None
    else:
        p = Path(path)
        if not p.exists():
            raise BadConfig(f"config file not found: {path}")
        raw = yaml.safe_load(p.read_text())
        source = str(p)
    if not isinstance(raw, dict):
        raise BadConfig("config root must be a mapping")
    if raw.get("schema") != "wbcd-robot-config/1":
        raise BadConfig(f"unsupported config schema: {raw.get('schema')!r}")

    arm = _require(raw, "arm", "config")
    mounts = _require(raw, "mounts", "config")
    ready_raw = _require(raw, "ready_joints_rad", "config")
    head = _require(raw, "head", "config")
    sim = _require(raw, "sim", "config")
    cams = _require(raw, "cameras", "config")
    scene_raw = _require(raw, "scene", "config")
    rt = _require(raw, "retarget", "config")
    proto = _require(raw, "protocol", "config")
    sess = _require(raw, "session", "config")
    ref = _require(raw, "reference", "config")

    dt = float(_require(sim, "dt_s", "sim"))
    if not 0.001 <= dt <= 0.1:
        raise BadConfig(f"dt_s must be within [0.001, 0.1], got {dt}")

    scene = SceneSpec(
        background_rgb=tuple(_require(scene_raw, "background_rgb", "scene")),
        marker_radius=float(_require(scene_raw, "marker_radius_m", "scene")),
        left_ee_rgb=tuple(_require(scene_raw, "left_ee_rgb", "scene")),
        right_ee_rgb=tuple(_require(scene_raw, "right_ee_rgb", "scene")),
        props=[
            PropSpec(
                name=p["name"],
                position=np.array(p["position_m"], dtype=np.float64),
                rgb=tuple(p["rgb"]),
                radius=float(p["radius_m"]),
            )
            for p in scene_raw.get("props", [])
        ],
    )

    retarget = RetargetParams(
        translation_scale=float(rt.get("translation_scale", 1.0)),
        damping=float(rt.get("damping", 0.05)),
        max_step=float(rt.get("max_step_m", 0.1)),
        workspace_min=np.array(_require(rt, "workspace_min_m", "retarget")),
        workspace_max=np.array(_require(rt, "workspace_max_m", "retarget")),
        use_orientation=bool(rt.get("use_orientation", True)),
    )

    ready = JointState(
        left=np.array(_require(ready_raw, "left", "ready_joints_rad")),
        right=np.array(_require(ready_raw, "right", "ready_joints_rad")),
        grippers=np.array(ready_raw.get("grippers", [1.0, 1.0])),
        head=np.array(ready_raw.get("head", [0.0, 0.0])),
    )

    cfg = RobotConfig(
        left_arm=_arm_from_yaml(arm, "left"),
        right_arm=_arm_from_yaml(arm, "right"),
        mount_left=_transform(_require(mounts, "left_xyz_m", "mounts"), mounts.get("left_rpy_rad", [0, 0, 0])),
        mount_right=_transform(_require(mounts, "right_xyz_m", "mounts"), mounts.get("right_rpy_rad", [0, 0, 0])),
        ready=ready,
        head_limits=np.array(_require(head, "joint_limits_rad", "head")),
        head_speed=np.array(_require(head, "max_joint_speed_rad_s", "head")),
        gripper_slew_per_s=float(_require(raw["gripper"], "slew_per_s", "gripper")),
        dt_s=dt,
        stream_every_n_ticks=int(sim.get("stream_every_n_ticks", 2)),
        camera=CameraSpec(
            width=int(_require(sim, "frame_width", "sim")),
            height=int(_require(sim, "frame_height", "sim")),
            focal_px=float(_require(sim, "focal_px", "sim")),
            jpeg_quality=int(sim.get("jpeg_quality", 80)),
        ),
        head_cam_position=np.array(_require(cams["head"], "position_m", "cameras.head")),
        head_cam_look_at=np.array(_require(cams["head"], "look_at_m", "cameras.head")),
        wrist_cam_offset=_transform(
            _require(cams["wrist"], "offset_xyz_m", "cameras.wrist"),
            cams["wrist"].get("offset_rpy_rad", [0, 0, 0]),
        ),
        scene=scene,
        retarget=retarget,
        tcp_port=int(proto.get("tcp_port", 7450)),
        ws_port=int(proto.get("ws_port", 7451)),
        frame_buffer=int(proto.get("frame_buffer", 8)),
        heartbeat_ms=int(proto.get("heartbeat_ms", 500)),
        session_window_s=float(sess.get("window_s", 1800)),
        session_default_alpha=float(sess.get("default_alpha", 1.0)),
        reference_all_zero_position=np.array(_require(ref, "all_zero_ee_position_m", "reference")),
        reference_all_zero_quat=np.array(_require(ref, "all_zero_ee_quaternion_wxyz", "reference")),
        config_hash=kinematics_hash(raw),
        source_path=source,
    )
    _check_reference(cfg)
    return cfg


def _check_reference(cfg: RobotConfig) -> None:
    """Reject configs whose geometry disagrees with their own golden FK values."""
    from .kinematics import forward_kinematics  # deferred: kinematics is heavier to import

    pose = forward_kinematics(cfg.left_arm, np.zeros(7))
    q, ref_q = pose.orientation, cfg.reference_all_zero_quat
    quat_dist = min(float(np.linalg.norm(q - ref_q)), float(np.linalg.norm(q + ref_q)))
    if not np.allclose(pose.position, cfg.reference_all_zero_position, atol=1e-9) or quat_dist > 1e-9:
        raise BadConfig(
            f"reference mismatch: all-zero FK gives position {pose.position} / "
            f"quaternion {q}, config declares {cfg.reference_all_zero_position} / {ref_q}"
        )
