"""Fixed-timestep servo semantics, the integer clock, and deterministic rendering."""

import numpy as np
import pytest

from wbcd.simulator import (
    RobotModel,
    UnknownCamera,
    decode_jpeg,
    initial_state,
    render_frame,
    set_target,
    snapshot,
    tick,
)
from wbcd.types import JPEG_EOI, JPEG_SOI, JointState


def test_initial_state_is_ready_pose(cfg):
    state = initial_state(cfg)
    assert state.joints.allclose(cfg.ready)
    assert state.tick_index == 0 and state.sim_time_ns == 0


def test_clock_is_exact_integer_ticks(cfg, model):
    state = initial_state(cfg)
    for _ in range(7):
        tick(model, state)
    assert state.tick_index == 7
    assert state.sim_time_ns == 7 * int(round(cfg.dt_s * 1e9))


def test_servo_exact_arrival_no_overshoot(cfg, model):
    state = initial_state(cfg)
    target = state.joints.copy()
    target.left[0] += 0.03  # less than one tick of travel at 2 rad/s * 0.02 s
    set_target(model, state, target)
    tick(model, state)
    assert state.joints.left[0] == pytest.approx(cfg.ready.left[0] + 0.03, abs=0)
    before = state.joints.left[0]
    tick(model, state)
    assert state.joints.left[0] == before  # parked exactly, no oscillation


def test_servo_rate_limit(cfg, model):
    state = initial_state(cfg)
    target = state.joints.copy()
    target.left[0] += 1.0
    set_target(model, state, target)
    tick(model, state)
    per_tick = cfg.left_arm.max_joint_speed[0] * cfg.dt_s
    assert state.joints.left[0] == pytest.approx(cfg.ready.left[0] + per_tick, abs=1e-15)


def test_gripper_full_close_takes_13_ticks(cfg, model):
    # slew 4.0/s at dt 0.02 moves 0.08 per tick: 12 ticks cover 0.96, the
    # 13th lands exactly on 0 thanks to exact arrival
    state = initial_state(cfg)
    target = state.joints.copy()
    target.grippers[:] = 0.0
    set_target(model, state, target)
    ticks = 0
    while state.joints.grippers[0] != 0.0:
        tick(model, state)
        ticks += 1
        assert ticks < 50
    assert ticks == 13


def test_set_target_clamps_limits(cfg, model):
    state = initial_state(cfg)
    wild = state.joints.copy()
    wild.left[:] = 100.0
    wild.head[:] = 100.0
    set_target(model, state, wild)
    assert np.all(state.target.left <= cfg.left_arm.limits[:, 1])
    assert np.all(state.target.head <= cfg.head_limits[:, 1])


def test_joint_state_rejects_bad_gripper():
    with pytest.raises(ValueError):
        JointState(left=np.zeros(7), right=np.zeros(7), grippers=np.array([1.5, 0.0]))


def test_tick_holds_position_without_target_change(cfg, model):
    state = initial_state(cfg)
    for _ in range(5):
        tick(model, state)
    assert state.joints.allclose(cfg.ready)


# -- rendering ----------------------------------------------------------------


def test_render_deterministic(cfg, model):
    state = initial_state(cfg)
    a = render_frame(model, state, "head")
    b = render_frame(model, state, "head")
    assert a.payload == b.payload
    assert a.payload.startswith(JPEG_SOI) and a.payload.endswith(JPEG_EOI)


def test_render_unknown_camera(cfg, model):
    state = initial_state(cfg)
    with pytest.raises(UnknownCamera):
        render_frame(model, state, "belly")


def test_render_dimensions_and_ids(cfg, real_obs):
    for frame in real_obs.frames:
        assert (frame.width, frame.height) == (cfg.camera.width, cfg.camera.height)
        img = decode_jpeg(frame.payload)
        assert img.shape == (cfg.camera.height, cfg.camera.width, 3)
    assert sorted(f.camera_id for f in real_obs.frames) == [0, 1, 2]


def test_head_camera_sees_the_markers(cfg, model):
    # the scene is flat background plus discs; the head view must contain
    # pixels that are not background (the EE markers and props)
    state = initial_state(cfg)
    frame = render_frame(model, state, "head")
    img = decode_jpeg(frame.payload).astype(int)
    bg = np.array(cfg.scene.background_rgb)
    nonbg = np.abs(img - bg).sum(axis=2) > 60
    assert nonbg.sum() > 50


def test_wrist_view_changes_when_arm_moves(cfg, model):
    state = initial_state(cfg)
    before = render_frame(model, state, "wrist_left").payload
    target = state.joints.copy()
    target.left[1] += 0.3
    set_target(model, state, target)
    for _ in range(30):
        tick(model, state)
    after = render_frame(model, state, "wrist_left").payload
    assert before != after


def test_snapshot_bundle(cfg, model):
    state = initial_state(cfg)
    tick(model, state)
    obs = snapshot(model, state)
    assert obs.timestamp_ns == state.sim_time_ns
    assert all(f.capture_time_ns == state.sim_time_ns for f in obs.frames)
    assert all(f.seq == state.tick_index for f in obs.frames)
    ee_l, ee_r = model.ee_poses(state.joints)
    np.testing.assert_allclose(obs.ee_left.position, ee_l.position, atol=0)
    np.testing.assert_allclose(obs.ee_right.position, ee_r.position, atol=0)


def test_mounted_fk_uses_body_frame(cfg, model):
    # left and right EEs mirror across the y axis at the symmetric ready pose
    ee_l, ee_r = model.ee_poses(cfg.ready)
    assert ee_l.position[1] > 0 > ee_r.position[1]
    np.testing.assert_allclose(ee_l.position[0], ee_r.position[0], atol=1e-12)
    np.testing.assert_allclose(ee_l.position[2], ee_r.position[2], atol=1e-12)
