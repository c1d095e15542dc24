"""Quaternion helpers for rigid-body orientation.

Quaternions are stored scalar-first as (w, x, y, z) and map body-frame
vectors to the lab frame.
"""

import numpy as np


def quat_identity():
    return np.array([1.0, 0.0, 0.0, 0.0])


def quat_normalize(q):
    n = np.sqrt(q @ q)
    if n == 0.0:
        raise ValueError("zero quaternion")
    return q / n


def quat_multiply(a, b):
    """Hamilton product a*b (composition: rotate by b, then by a)."""
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ])


def quat_from_axis_angle(axis, angle):
    axis = np.asarray(axis, dtype=float)
    n = np.sqrt(axis @ axis)
    if n == 0.0:
        raise ValueError("zero rotation axis")
    half = 0.5 * angle
    q = np.empty(4)
    q[0] = np.cos(half)
    q[1:] = np.sin(half) * axis / n
    return q


def quat_to_matrix(q):
    """Rotation matrix R such that v_lab = R @ v_body."""
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def quat_derivative(q, omega):
    """dq/dt for lab-frame angular velocity omega: 0.5 * (0, omega) * q."""
    ow = np.array([0.0, omega[0], omega[1], omega[2]])
    return 0.5 * quat_multiply(ow, q)


def rotate_vectors(q, v):
    """Apply the rotation to an (n, 3) array (or a single 3-vector)."""
    R = quat_to_matrix(q)
    return np.asarray(v) @ R.T
