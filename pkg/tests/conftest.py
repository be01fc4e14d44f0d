import numpy as np
import pytest

from wbcd.config import load_config
from wbcd.pipeline import EpisodeMeta, episode_from_steps
from wbcd.simulator import RobotModel, initial_state, snapshot
from wbcd.types import CAMERA_NAMES, FramePacket, JointState, ObservationBundle


@pytest.fixture(scope="session")
def cfg():
    return load_config()


@pytest.fixture(scope="session")
def model(cfg):
    return RobotModel(cfg)


@pytest.fixture(scope="session")
def real_obs(cfg, model):
    """One genuinely rendered observation (shared: rendering is the slow part)."""
    state = initial_state(cfg)
    return snapshot(model, state)


# A tiny valid JFIF stream (SOI + EOI) keeps frame-shaped tests fast; tests
# that care about actual pixels use real_obs instead.
FAKE_JPEG = b"\xff\xd8stub\xff\xd9"


def make_obs(t_ns: int, joints: JointState, ee_left, ee_right, seq: int = 0) -> ObservationBundle:
    frames = tuple(
        FramePacket(
            camera_id=i,
            seq=seq,
            capture_time_ns=t_ns,
            codec=0,
            width=4,
            height=4,
            payload=FAKE_JPEG,
        )
        for i in range(len(CAMERA_NAMES))
    )
    return ObservationBundle(joints=joints, ee_left=ee_left, ee_right=ee_right, frames=frames, timestamp_ns=t_ns)


def synthetic_episode(cfg, model, n_steps: int = 8, move_from: int = 0, step_m: float = 5e-3, dt_ns: int = 20_000_000):
    """Episode whose left EE translates by step_m per step starting at frame
    ``move_from`` (frames before it are exact holds). Joint values are the
    ready pose throughout; EE series carry the motion, which is what the
    trimmer looks at."""
    joints = cfg.ready
    ee_l, ee_r = model.ee_poses(joints)
    steps = []
    pos = ee_l.position.copy()
    for t in range(n_steps):
        if move_from and t >= move_from:
            pos = pos + np.array([step_m, 0.0, 0.0])
        from wbcd.geometry import Pose

        obs = make_obs(t * dt_ns + dt_ns, joints.copy(), Pose(pos.copy(), ee_l.orientation), ee_r, seq=t)
        steps.append((obs, joints.as_action()))
    meta = EpisodeMeta(task="synthetic", operator_mode="remote", dt_s=cfg.dt_s, config_hash=cfg.config_hash)
    return episode_from_steps(steps, meta)
