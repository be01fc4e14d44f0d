"""Synthetic camera rendering: colored disc markers under a pinhole model.

Rendering is intentionally minimal — flat background plus depth-sorted disc
markers for the two end effectors and the scene props — but it exercises the
full observation path (projection, rasterization, JPEG encoding) with
deterministic output bytes for a given state.
"""

from __future__ import annotations

import io

import numpy as np
from PIL import Image

from ..geometry import transform_from_pose
from ..types import CAMERA_NAMES, FramePacket
from .core import SimState
from .robot import RobotModel

JPEG_CODEC = 0

_NEAR_PLANE = 0.01


class UnknownCamera(ValueError):
    """Requested camera name is not one of the configured cameras."""


def _look_rotation(eye: np.ndarray, target: np.ndarray) -> np.ndarray:
    """World-to-camera rotation for a camera at ``eye`` looking at ``target``.

    Camera convention: +z forward, +x right, +y down (image rows grow down).
    """
    forward = target - eye
    norm = np.linalg.norm(forward)
    if norm < 1e-12:
        raise ValueError("camera eye and target coincide")
    z_c = forward / norm
    up = np.array([0.0, 0.0, 1.0])
    if abs(float(z_c @ up)) > 0.999:
        up = np.array([1.0, 0.0, 0.0])
    x_c = np.cross(z_c, up)
    x_c = x_c / np.linalg.norm(x_c)
    y_c = np.cross(z_c, x_c)
    return np.stack([x_c, y_c, z_c])


def _camera_pose(model: RobotModel, state: SimState, camera: str):
    """Return (eye, R_world_to_cam) for one of the configured cameras."""
    cfg = model.cfg
    if camera == "head":
        eye = cfg.head_cam_position
        return eye, _look_rotation(eye, cfg.head_cam_look_at)
    if camera in ("wrist_left", "wrist_right"):
        pose = model.fk_left(state.joints.left) if camera == "wrist_left" else model.fk_right(state.joints.right)
        t_cam = transform_from_pose(pose) @ cfg.wrist_cam_offset
        eye = t_cam[:3, 3]
        look_dir = transform_from_pose(pose)[:3, 2]  # along the tool axis
        return eye, _look_rotation(eye, eye + look_dir)
    raise UnknownCamera(f"unknown camera {camera!r}; expected one of {CAMERA_NAMES}")


def _markers(model: RobotModel, state: SimState):
    """World-space discs to draw: scene props plus both end effectors."""
    scene = model.cfg.scene
    ee_left, ee_right = model.ee_poses(state.joints)
    discs = [(p.position, p.radius, p.rgb) for p in scene.props]
    discs.append((ee_left.position, scene.marker_radius, scene.left_ee_rgb))
    discs.append((ee_right.position, scene.marker_radius, scene.right_ee_rgb))
    return discs


def _rasterize(model: RobotModel, state: SimState, camera: str) -> np.ndarray:
    cfg = model.cfg
    cam = cfg.camera
    w, h = cam.width, cam.height
    cx, cy = (w - 1) / 2.0, (h - 1) / 2.0
    eye, rot = _camera_pose(model, state, camera)

    img = np.empty((h, w, 3), dtype=np.uint8)
    img[:] = np.array(cfg.scene.background_rgb, dtype=np.uint8)

    projected = []
    for position, radius, rgb in _markers(model, state):
        p_cam = rot @ (np.asarray(position, dtype=np.float64) - eye)
        depth = float(p_cam[2])
        if depth <= _NEAR_PLANE:
            continue
        u = cx + cam.focal_px * float(p_cam[0]) / depth
        v = cy + cam.focal_px * float(p_cam[1]) / depth
        r_px = cam.focal_px * radius / depth
        projected.append((depth, u, v, r_px, rgb))

    # Painter's algorithm: far markers first so near ones overdraw them.
    for depth, u, v, r_px, rgb in sorted(projected, key=lambda m: -m[0]):
        x0 = max(int(np.floor(u - r_px)), 0)
        x1 = min(int(np.ceil(u + r_px)) + 1, w)
        y0 = max(int(np.floor(v - r_px)), 0)
        y1 = min(int(np.ceil(v + r_px)) + 1, h)
        if x0 >= x1 or y0 >= y1:
            continue
        yy, xx = np.mgrid[y0:y1, x0:x1]
        mask = (xx - u) ** 2 + (yy - v) ** 2 <= r_px**2
        img[y0:y1, x0:x1][mask] = np.array(rgb, dtype=np.uint8)
    return img


def encode_jpeg(img: np.ndarray, quality: int) -> bytes:
    """Baseline JPEG encode with fixed encoder options for byte determinism."""
    buf = io.BytesIO()
    Image.fromarray(img, mode="RGB").save(
        buf, format="JPEG", quality=quality, subsampling=2, optimize=False, progressive=False
    )
    return buf.getvalue()


def decode_jpeg(payload: bytes) -> np.ndarray:
    """Decode a JPEG payload to an (H, W, 3) uint8 array."""
    with Image.open(io.BytesIO(payload)) as im:
        return np.asarray(im.convert("RGB"))


def render_frame(model: RobotModel, state: SimState, camera: str) -> FramePacket:
    """Render one camera for the current state into a timestamped frame packet."""
    if camera not in CAMERA_NAMES:
        raise UnknownCamera(f"unknown camera {camera!r}; expected one of {CAMERA_NAMES}")
    img = _rasterize(model, state, camera)
    payload = encode_jpeg(img, model.cfg.camera.jpeg_quality)
    return FramePacket(
        camera_id=CAMERA_NAMES.index(camera),
        seq=state.tick_index,
        capture_time_ns=state.sim_time_ns,
        codec=JPEG_CODEC,
        width=model.cfg.camera.width,
        height=model.cfg.camera.height,
        payload=payload,
    )
