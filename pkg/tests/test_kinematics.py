"""Arm kinematics: FK against an independent composition, Jacobian against
finite differences, IK convergence, and the numba/pure kernel equivalence."""

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from wbcd.geometry import Pose, quat_to_matrix
from wbcd.kinematics import (
    IkParams,
    JointLimitViolation,
    RetargetParams,
    capture_anchors,
    forward_kinematics,
    ik_step,
    jacobian,
    retarget,
    solve_ik,
)
from wbcd.kinematics.kernels import PURE_KERNELS, chain_frames, dls_delta, fk_ee, geometric_jacobian
from wbcd.types import JointState

RNG = np.random.default_rng(7)


def random_joints(arm, n):
    lo, hi = arm.limits[:, 0], arm.limits[:, 1]
    # stay 0.1 rad inside the limits so finite-difference probes remain legal
    return lo + 0.1 + RNG.random((n, 7)) * (hi - lo - 0.2)


def scipy_fk(arm, q):
    """Independent FK: compose the joint transforms with scipy rotations."""
    T = np.eye(4)
    for i in range(7):
        T = T @ arm.origins[i]
        R = np.eye(4)
        R[:3, :3] = Rotation.from_rotvec(arm.axes[i] * q[i]).as_matrix()
        T = T @ R
    return T @ arm.ee_offset


def test_fk_all_zero_matches_config_reference(cfg):
    pose = forward_kinematics(cfg.left_arm, np.zeros(7))
    np.testing.assert_allclose(pose.position, cfg.reference_all_zero_position, atol=1e-12)
    np.testing.assert_allclose(pose.orientation, cfg.reference_all_zero_quat, atol=1e-12)


def test_fk_matches_independent_composition(cfg):
    arm = cfg.left_arm
    for q in random_joints(arm, 50):
        T = scipy_fk(arm, q)
        pose = forward_kinematics(arm, q)
        np.testing.assert_allclose(pose.position, T[:3, 3], atol=1e-10)
        np.testing.assert_allclose(quat_to_matrix(pose.orientation), T[:3, :3], atol=1e-10)


def test_fk_rejects_out_of_limits(cfg):
    q = np.zeros(7)
    q[3] = cfg.left_arm.limits[3, 1] + 0.01
    with pytest.raises(JointLimitViolation):
        forward_kinematics(cfg.left_arm, q)


def test_jacobian_matches_finite_differences(cfg):
    arm = cfg.left_arm
    h = 1e-7
    for q in random_joints(arm, 20):
        J = jacobian(arm, q)
        for j in range(7):
            dq = np.zeros(7)
            dq[j] = h
            p_plus = forward_kinematics(arm, q + dq)
            p_minus = forward_kinematics(arm, q - dq)
            lin = (p_plus.position - p_minus.position) / (2 * h)
            np.testing.assert_allclose(J[:3, j], lin, atol=1e-6)


def test_jacobian_angular_part_is_rotation_axis(cfg):
    # column j's angular block equals joint axis j expressed in the base frame
    arm = cfg.left_arm
    q = random_joints(arm, 1)[0]
    J = jacobian(arm, q)
    frames = chain_frames(arm.origins, arm.axes, q)
    for j in range(7):
        w = frames[j][:3, :3] @ arm.axes[j]
        np.testing.assert_allclose(J[3:, j], w, atol=1e-12)


def test_ik_step_reduces_position_error(cfg):
    arm = cfg.left_arm
    params = IkParams()
    q = cfg.ready.left.copy()
    target_q = arm.clamp(q + 0.2)
    target = forward_kinematics(arm, target_q)
    before = np.linalg.norm(forward_kinematics(arm, q).position - target.position)
    q2 = q + ik_step(arm, q, target, params)
    after = np.linalg.norm(forward_kinematics(arm, q2).position - target.position)
    assert after < before


def test_solve_ik_converges_on_near_targets(cfg):
    arm = cfg.left_arm
    base = cfg.ready.left
    ok = 0
    for _ in range(100):
        goal_q = arm.clamp(base + RNG.uniform(-0.15, 0.15, size=7))
        target = forward_kinematics(arm, goal_q)
        _, converged, iters = solve_ik(arm, base, target)
        ok += converged
        assert iters <= 50
    assert ok >= 99


def test_solve_ik_reports_nonconvergence_for_unreachable():
    # point a meter beyond full extension can never close to 1e-4
    from wbcd.config import load_config

    arm = load_config().left_arm
    target = Pose(np.array([0.0, 0.0, 3.0]), np.array([1.0, 0.0, 0.0, 0.0]))
    _, converged, iters = solve_ik(arm, np.zeros(7), target, max_iters=20)
    assert not converged and iters == 20


# -- kernel path equivalence --------------------------------------------------


def test_pure_and_active_kernels_agree(cfg):
    arm = cfg.left_arm
    for q in random_joints(arm, 25):
        np.testing.assert_allclose(
            chain_frames(arm.origins, arm.axes, q),
            PURE_KERNELS["chain_frames"](arm.origins, arm.axes, q),
            atol=1e-13,
        )
        np.testing.assert_allclose(
            fk_ee(arm.origins, arm.axes, q, arm.ee_offset),
            PURE_KERNELS["fk_ee"](arm.origins, arm.axes, q, arm.ee_offset),
            atol=1e-13,
        )
        J_active = geometric_jacobian(arm.origins, arm.axes, q, arm.ee_offset)
        J_pure = PURE_KERNELS["geometric_jacobian"](arm.origins, arm.axes, q, arm.ee_offset)
        np.testing.assert_allclose(J_active, J_pure, atol=1e-13)
        err = RNG.normal(size=6) * 1e-2
        np.testing.assert_allclose(
            dls_delta(J_active, err, 0.05), PURE_KERNELS["dls_delta"](J_pure, err, 0.05), atol=1e-12
        )


def test_env_flag_selects_pure_path():
    # a fresh interpreter with WBCD_NUMBA=0 must report the fallback
    import subprocess
    import sys

    out = subprocess.run(
        [sys.executable, "-c", "from wbcd.kinematics import kernels; print(kernels.NUMBA_ENABLED)"],
        env={"WBCD_NUMBA": "0", "PATH": "/usr/bin:/bin"},
        capture_output=True,
        text=True,
        check=True,
    )
    assert out.stdout.strip() == "False"


# -- retargeting ---------------------------------------------------------------


IDENT = np.array([1.0, 0.0, 0.0, 0.0])


def hand(x, y, z):
    return Pose(np.array([x, y, z]), IDENT)


def test_retarget_disengaged_holds_current(cfg):
    params = RetargetParams()
    params.clutch_engaged = False
    out = retarget(cfg.ready, hand(1, 2, 3), hand(4, 5, 6), (True, True), params, None, cfg.left_arm, cfg.right_arm)
    assert out.allclose(cfg.ready)
    assert out is not cfg.ready  # a copy, not an alias


def test_retarget_tracks_hand_displacement(cfg):
    params = RetargetParams()
    params.clutch_engaged = True
    h0_l, h0_r = hand(0.4, 0.2, 0.3), hand(0.4, -0.2, 0.3)
    anchors = capture_anchors(cfg.ready, h0_l, h0_r, cfg.left_arm, cfg.right_arm)
    q = cfg.ready
    # feed a steady 1 mm/step hand motion; after enough steps the EE should
    # have moved close to the commanded displacement
    for i in range(1, 81):
        dx = 0.001 * i
        q = retarget(
            q, hand(0.4 - dx, 0.2, 0.3), hand(0.4 - dx, -0.2, 0.3), (False, False),
            params, anchors, cfg.left_arm, cfg.right_arm,
        )
    ee = forward_kinematics(cfg.left_arm, q.left)
    moved = ee.position - anchors.ee_left.position
    assert abs(moved[0] + 0.08) < 0.01  # -x displacement, within a cm
    assert abs(moved[1]) < 0.01 and abs(moved[2]) < 0.01


def test_retarget_gripper_buttons(cfg):
    params = RetargetParams()
    params.clutch_engaged = True
    h = hand(0.4, 0.0, 0.3)
    anchors = capture_anchors(cfg.ready, h, h, cfg.left_arm, cfg.right_arm)
    out = retarget(cfg.ready, h, h, (True, False), params, anchors, cfg.left_arm, cfg.right_arm)
    assert out.grippers[0] == 0.0  # pressed = close
    assert out.grippers[1] == 1.0  # released = open


def test_retarget_workspace_clamp(cfg):
    params = RetargetParams(workspace_min=np.array([0.1, -0.6, -0.1]), workspace_max=np.array([0.75, 0.6, 0.6]))
    params.clutch_engaged = True
    h0 = hand(0.0, 0.0, 0.0)
    anchors = capture_anchors(cfg.ready, h0, h0, cfg.left_arm, cfg.right_arm)
    q = cfg.ready
    for _ in range(400):
        q = retarget(q, hand(5.0, 0.0, 0.0), hand(5.0, 0.0, 0.0), (False, False),
                     params, anchors, cfg.left_arm, cfg.right_arm)
    ee = forward_kinematics(cfg.left_arm, q.left)
    assert ee.position[0] <= 0.75 + 1e-3  # never chases the target out of the box
