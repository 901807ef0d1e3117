"""Quaternion helpers.

Quaternions are (w, x, y, z) arrays of unit norm representing the rotation
that takes body-frame vectors into the inertial frame: v_I = R(q) @ v_B.
"""

from __future__ import annotations

import numpy as np

IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])


def normalize(q):
    q = np.asarray(q, dtype=float)
    return q / np.linalg.norm(q)


def multiply(a, b):
    """Hamilton product a (x) b."""
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ])


def conjugate(q):
    return np.array([q[0], -q[1], -q[2], -q[3]])


def to_matrix(q):
    """Rotation matrix with v_I = R @ v_B."""
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def from_matrix(R):
    """Quaternion of a rotation matrix, largest-pivot branch.

    The scalar-first extraction divides by sqrt(1 + trace) and fails as the
    trace approaches -1; picking the largest diagonal pivot keeps every
    branch well conditioned and reduces to the scalar form when w dominates.
    """
    R = np.asarray(R, dtype=float)
    t = np.trace(R)
    if t > max(R[0, 0], R[1, 1], R[2, 2]):
        s = 2.0 * np.sqrt(1.0 + t)
        q = np.array([0.25 * s,
                      (R[2, 1] - R[1, 2]) / s,
                      (R[0, 2] - R[2, 0]) / s,
                      (R[1, 0] - R[0, 1]) / s])
    elif R[0, 0] >= R[1, 1] and R[0, 0] >= R[2, 2]:
        s = 2.0 * np.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2])
        q = np.array([(R[2, 1] - R[1, 2]) / s,
                      0.25 * s,
                      (R[0, 1] + R[1, 0]) / s,
                      (R[0, 2] + R[2, 0]) / s])
    elif R[1, 1] >= R[2, 2]:
        s = 2.0 * np.sqrt(1.0 + R[1, 1] - R[0, 0] - R[2, 2])
        q = np.array([(R[0, 2] - R[2, 0]) / s,
                      (R[0, 1] + R[1, 0]) / s,
                      0.25 * s,
                      (R[1, 2] + R[2, 1]) / s])
    else:
        s = 2.0 * np.sqrt(1.0 + R[2, 2] - R[0, 0] - R[1, 1])
        q = np.array([(R[1, 0] - R[0, 1]) / s,
                      (R[0, 2] + R[2, 0]) / s,
                      (R[1, 2] + R[2, 1]) / s,
                      0.25 * s])
    if q[0] < 0.0:
        q = -q
    return normalize(q)


def yaw_quat(psi):
    """Rotation by psi about the z axis."""
    return np.array([np.cos(psi / 2.0), 0.0, 0.0, np.sin(psi / 2.0)])


def derivative(q, omega_body):
    """q_dot = 0.5 * q (x) (0, omega)."""
    return 0.5 * multiply(q, np.array([0.0, *omega_body]))


def tilt_angle(q):
    """Angle between the body z axis and the inertial z axis."""
    # R[2, 2] is the z-z direction cosine
    w, x, y, z = q
    c = 1.0 - 2.0 * (x * x + y * y)
    return float(np.arccos(np.clip(c, -1.0, 1.0)))
