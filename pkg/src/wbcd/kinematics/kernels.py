"""Hot numeric kernels for the 7-joint chains.

Every function here is written to run identically as plain numpy or under
numba ``@njit``. The compiled path is the default; set ``WBCD_NUMBA=0`` to
force the pure-numpy fallback (or install without numba). Selection happens
once at import time.

Conventions: ``origins`` is a (7, 4, 4) array of parent-frame joint mount
transforms, ``axes`` is (7, 3) unit joint axes in the joint frame, ``q`` is
(7,) joint angles, ``ee_offset`` is the 4x4 tool transform after the last
joint. All float64.
"""

from __future__ import annotations

import os

import numpy as np


def _numba_wanted() -> bool:
    flag = os.environ.get("WBCD_NUMBA", "1").strip().lower()
    return flag not in ("0", "false", "no", "off")


def rot_axis_angle(axis, angle):
    """Rodrigues rotation about a unit axis."""
    x, y, z = axis[0], axis[1], axis[2]
    c = np.cos(angle)
    s = np.sin(angle)
    C = 1.0 - c
    R = np.empty((3, 3))
    R[0, 0] = c + x * x * C
    R[0, 1] = x * y * C - z * s
    R[0, 2] = x * z * C + y * s
    R[1, 0] = y * x * C + z * s
    R[1, 1] = c + y * y * C
    R[1, 2] = y * z * C - x * s
    R[2, 0] = z * x * C - y * s
    R[2, 1] = z * y * C + x * s
    R[2, 2] = c + z * z * C
    return R


def chain_frames(origins, axes, q):
    """Cumulative world transform of each joint frame after its rotation.

    Returns (7, 4, 4): frames[i] maps joint-i coordinates to the arm base.
    """
    frames = np.empty((7, 4, 4))
    T = np.eye(4)
    for i in range(7):
        T = T @ origins[i]
        R = rot_axis_angle(axes[i], q[i])
        Tj = np.eye(4)
        Tj[:3, :3] = R
        T = T @ Tj
        frames[i] = T
    return frames


def fk_ee(origins, axes, q, ee_offset):
    """End-effector transform in the arm base frame."""
    T = np.eye(4)
    for i in range(7):
        T = T @ origins[i]
        R = rot_axis_angle(axes[i], q[i])
        Tj = np.eye(4)
        Tj[:3, :3] = R
        T = T @ Tj
    return T @ ee_offset


def geometric_jacobian(origins, axes, q, ee_offset):
    """6x7 geometric Jacobian, rows [linear(3); angular(3)], base frame."""
    frames = chain_frames(origins, axes, q)
    T_ee = frames[6] @ ee_offset
    p_ee = T_ee[:3, 3]
    J = np.empty((6, 7))
    for i in range(7):
        R = frames[i, :3, :3]
        # world-frame joint axis and joint origin
        ax = axes[i]
        wx = R[0, 0] * ax[0] + R[0, 1] * ax[1] + R[0, 2] * ax[2]
        wy = R[1, 0] * ax[0] + R[1, 1] * ax[1] + R[1, 2] * ax[2]
        wz = R[2, 0] * ax[0] + R[2, 1] * ax[1] + R[2, 2] * ax[2]
        rx = p_ee[0] - frames[i, 0, 3]
        ry = p_ee[1] - frames[i, 1, 3]
        rz = p_ee[2] - frames[i, 2, 3]
        # linear = w x r
        J[0, i] = wy * rz - wz * ry
        J[1, i] = wz * rx - wx * rz
        J[2, i] = wx * ry - wy * rx
        J[3, i] = wx
        J[4, i] = wy
        J[5, i] = wz
    return J


def dls_delta(J, err, lam):
    """Damped least-squares update: J^T (J J^T + lam^2 I)^-1 err."""
    A = J @ J.T
    for k in range(6):
        A[k, k] += lam * lam
    y = np.linalg.solve(A, err)
    return J.T @ y


# The uncompiled bindings stay importable even when numba takes over below,
# so equivalence tests and benchmarks can run both paths in one process.
PURE_KERNELS = {
    "rot_axis_angle": rot_axis_angle,
    "chain_frames": chain_frames,
    "fk_ee": fk_ee,
    "geometric_jacobian": geometric_jacobian,
    "dls_delta": dls_delta,
}

NUMBA_ENABLED = False
if _numba_wanted():
    try:
        from numba import njit

        rot_axis_angle = njit(cache=True)(rot_axis_angle)
        chain_frames = njit(cache=True)(chain_frames)
        fk_ee = njit(cache=True)(fk_ee)
        geometric_jacobian = njit(cache=True)(geometric_jacobian)
        dls_delta = njit(cache=True)(dls_delta)
        NUMBA_ENABLED = True
    except ImportError:
        pass
