"""Attitude parametrisations.

Body axes are x right, y forward, z up, so a level vehicle heading north has
``C_b^n = I`` in ENU. Yaw is measured from north, positive clockwise seen from
above; pitch is positive nose-up; roll positive right-wing-down. The
body-to-navigation matrix is ``C_b^n = Rz(-yaw) @ Rx(pitch) @ Ry(roll)``.

Quaternions are scalar-first ``[w, x, y, z]`` and represent ``C_b^n``.
"""

import math

import numpy as np
from numba import njit


def euler_to_dcm(roll, pitch, yaw):
    """Body-to-ENU rotation matrix. Vectorised over array inputs -> (..., 3, 3)."""
    roll, pitch, yaw = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (roll, pitch, yaw)))
    cr, sr = np.cos(roll), np.sin(roll)
    cp, sp = np.cos(pitch), np.sin(pitch)
    cy, sy = np.cos(yaw), np.sin(yaw)
    c = np.empty(roll.shape + (3, 3))
    c[..., 0, 0] = cy * cr + sy * sp * sr
    c[..., 0, 1] = sy * cp
    c[..., 0, 2] = cy * sr - sy * sp * cr
    c[..., 1, 0] = -sy * cr + cy * sp * sr
    c[..., 1, 1] = cy * cp
    c[..., 1, 2] = -sy * sr - cy * sp * cr
    c[..., 2, 0] = -cp * sr
    c[..., 2, 1] = sp
    c[..., 2, 2] = cp * cr
    return c


def dcm_to_euler(c):
    """Inverse of `euler_to_dcm`; returns ``(roll, pitch, yaw)``."""
    c = np.asarray(c, dtype=float)
    pitch = np.arcsin(np.clip(c[..., 2, 1], -1.0, 1.0))
    roll = np.arctan2(-c[..., 2, 0], c[..., 2, 2])
    yaw = np.arctan2(c[..., 0, 1], c[..., 1, 1])
    return roll, pitch, yaw


@njit(cache=True)
def quat_mul(p, q):
    w1, x1, y1, z1 = p[0], p[1], p[2], p[3]
    w2, x2, y2, z2 = q[0], q[1], q[2], q[3]
    out = np.empty(4)
    out[0] = w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2
    out[1] = w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2
    out[2] = w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2
    out[3] = w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2
    return out


@njit(cache=True)
def rotvec_to_quat(v):
    """Quaternion exponential of a rotation vector (exact for any angle)."""
    angle = math.sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])
    out = np.empty(4)
    if angle < 1e-8:
        # series to O(angle^4)
        out[0] = 1.0 - angle * angle / 8.0
        k = 0.5 - angle * angle / 48.0
    else:
        out[0] = math.cos(0.5 * angle)
        k = math.sin(0.5 * angle) / angle
    out[1] = k * v[0]
    out[2] = k * v[1]
    out[3] = k * v[2]
    return out


@njit(cache=True)
def quat_to_dcm(q):
    w, x, y, z = q[0], q[1], q[2], q[3]
    c = np.empty((3, 3))
    c[0, 0] = w * w + x * x - y * y - z * z
    c[0, 1] = 2.0 * (x * y - w * z)
    c[0, 2] = 2.0 * (x * z + w * y)
    c[1, 0] = 2.0 * (x * y + w * z)
    c[1, 1] = w * w - x * x + y * y - z * z
    c[1, 2] = 2.0 * (y * z - w * x)
    c[2, 0] = 2.0 * (x * z - w * y)
    c[2, 1] = 2.0 * (y * z + w * x)
    c[2, 2] = w * w - x * x - y * y + z * z
    return c


def dcm_to_quat(c) -> np.ndarray:
    """Shepperd's method; returns the representative with w >= 0."""
    c = np.asarray(c, dtype=float)
    tr = np.trace(c)
    cand = np.array([tr, c[0, 0], c[1, 1], c[2, 2]])
    i = int(np.argmax(cand))
    q = np.empty(4)
    if i == 0:
        s = 2.0 * math.sqrt(1.0 + tr)
        q[:] = (0.25 * s, (c[2, 1] - c[1, 2]) / s, (c[0, 2] - c[2, 0]) / s, (c[1, 0] - c[0, 1]) / s)
    elif i == 1:
        s = 2.0 * math.sqrt(1.0 + c[0, 0] - c[1, 1] - c[2, 2])
        q[:] = ((c[2, 1] - c[1, 2]) / s, 0.25 * s, (c[0, 1] + c[1, 0]) / s, (c[0, 2] + c[2, 0]) / s)
    elif i == 2:
        s = 2.0 * math.sqrt(1.0 - c[0, 0] + c[1, 1] - c[2, 2])
        q[:] = ((c[0, 2] - c[2, 0]) / s, (c[0, 1] + c[1, 0]) / s, 0.25 * s, (c[1, 2] + c[2, 1]) / s)
    else:
        s = 2.0 * math.sqrt(1.0 - c[0, 0] - c[1, 1] + c[2, 2])
        q[:] = ((c[1, 0] - c[0, 1]) / s, (c[0, 2] + c[2, 0]) / s, (c[1, 2] + c[2, 1]) / s, 0.25 * s)
    if q[0] < 0:
        q = -q
    return q / np.linalg.norm(q)


def dcm_to_rotvec(c) -> np.ndarray:
    """Matrix logarithm of a rotation, as a rotation vector. Vectorised over (..., 3, 3)."""
    c = np.asarray(c, dtype=float)
    cos_a = np.clip(0.5 * (np.trace(c, axis1=-2, axis2=-1) - 1.0), -1.0, 1.0)
    angle = np.arccos(cos_a)
    axis_part = np.stack([c[..., 2, 1] - c[..., 1, 2],
                          c[..., 0, 2] - c[..., 2, 0],
                          c[..., 1, 0] - c[..., 0, 1]], axis=-1)
    sin_a = np.sin(angle)
    small = angle < 1e-6
    # angle/(2 sin angle) -> 1/2 + angle^2/12 near zero
    k = np.where(small, 0.5 + angle ** 2 / 12.0, angle / (2.0 * np.where(small, 1.0, sin_a)))
    if np.any(angle > math.pi - 1e-6):
        raise ValueError("rotation angle too close to pi for a stable logarithm")
    return k[..., None] * axis_part
