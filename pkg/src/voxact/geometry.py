"""Rotation and rigid-transform helpers.

Quaternions are [x, y, z, w] (scipy order). Euler angles are extrinsic
X-Y-Z (rotations about the fixed world axes, applied x then y then z),
in degrees, normalized to [0, 360). This convention is used everywhere:
action discretization, augmentation, and the toy world's cameras.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial.transform import Rotation

# Pitch this close to +/-90 deg is treated as gimbal lock (degrees).
GIMBAL_LOCK_EPS_DEG = 1e-4


def normalize_quat(quat: np.ndarray) -> np.ndarray:
    quat = np.asarray(quat, dtype=np.float64)
    norm = np.linalg.norm(quat)
    if norm == 0.0 or not np.isfinite(norm):
        raise ValueError("quaternion has zero or non-finite norm")
    return quat / norm


def quat_to_matrix(quat: np.ndarray) -> np.ndarray:
    return Rotation.from_quat(normalize_quat(quat)).as_matrix()


def quat_from_euler_xyz(angles_deg: np.ndarray) -> np.ndarray:
    """Quaternion from extrinsic X-Y-Z Euler angles in degrees."""
    return Rotation.from_euler("xyz", np.asarray(angles_deg, dtype=np.float64), degrees=True).as_quat()


def quat_multiply(q1: np.ndarray, q2: np.ndarray) -> np.ndarray:
    """Composition q1 * q2 (apply q2 first, then q1)."""
    return (Rotation.from_quat(q1) * Rotation.from_quat(q2)).as_quat()


def quat_about_z(angle_deg: float) -> np.ndarray:
    return Rotation.from_euler("z", angle_deg, degrees=True).as_quat()


def quat_geodesic_deg(q1: np.ndarray, q2: np.ndarray) -> float:
    """Angle of the relative rotation between two quaternions, in degrees."""
    rel = Rotation.from_quat(normalize_quat(q1)) * Rotation.from_quat(normalize_quat(q2)).inv()
    return float(np.degrees(rel.magnitude()))


def euler_xyz_from_quat(quat: np.ndarray) -> np.ndarray:
    """Extrinsic X-Y-Z Euler angles in degrees, each normalized to [0, 360).

    The decomposition R = Rz(c) @ Ry(b) @ Rx(a) is read off the rotation
    matrix directly, so the output is deterministic. Pitch (b) comes from
    an arcsine and therefore lies in [-90, 90] before normalization. At
    gimbal lock (|pitch| within GIMBAL_LOCK_EPS_DEG of 90) only the sum or
    difference of roll and yaw is defined; the canonical output sets roll
    to 0 and folds the remainder into yaw.
    """
    m = quat_to_matrix(quat)
    sin_pitch = np.clip(-m[2, 0], -1.0, 1.0)
    pitch = np.degrees(np.arcsin(sin_pitch))
    if 90.0 - abs(pitch) < GIMBAL_LOCK_EPS_DEG:
        roll = 0.0
        if pitch > 0.0:
            # b = +90: R[0,1] = sin(a - c), R[0,2] = cos(a - c); with a = 0, c = -(a - c).
            yaw = -np.degrees(np.arctan2(m[0, 1], m[0, 2]))
            pitch = 90.0
        else:
            # b = -90: R[0,1] = -sin(a + c), R[0,2] = -cos(a + c); with a = 0, c = a + c.
            yaw = np.degrees(np.arctan2(-m[0, 1], -m[0, 2]))
            pitch = -90.0
    else:
        roll = np.degrees(np.arctan2(m[2, 1], m[2, 2]))
        yaw = np.degrees(np.arctan2(m[1, 0], m[0, 0]))
    return np.array([roll % 360.0, pitch % 360.0, yaw % 360.0], dtype=np.float64)


def angular_difference_deg(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Per-component circular distance between angle arrays, in [0, 180]."""
    d = np.abs(np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)) % 360.0
    return np.minimum(d, 360.0 - d)


def rigid_transform_about(
    points: np.ndarray, yaw_deg: float, translation: np.ndarray, center: np.ndarray
) -> np.ndarray:
    """Rotate points about the vertical axis through `center`, then translate."""
    pts = np.asarray(points, dtype=np.float64)
    rot = Rotation.from_euler("z", yaw_deg, degrees=True).as_matrix()
    return (pts - center) @ rot.T + center + np.asarray(translation, dtype=np.float64)


def look_at_extrinsics(eye: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Camera-to-world transform for a z-forward, x-right, y-down pinhole camera.

    The camera y axis points toward world-down where possible; a fixed
    fallback reference is used when looking straight up or down.
    """
    eye = np.asarray(eye, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    forward = target - eye
    norm = np.linalg.norm(forward)
    if norm < 1e-12:
        raise ValueError("camera eye and target coincide")
    z_axis = forward / norm
    up = np.array([0.0, 0.0, 1.0])
    x_axis = np.cross(z_axis, up)
    if np.linalg.norm(x_axis) < 1e-8:
        x_axis = np.cross(z_axis, np.array([0.0, 1.0, 0.0]))
    x_axis = x_axis / np.linalg.norm(x_axis)
    y_axis = np.cross(z_axis, x_axis)
    extrinsics = np.eye(4)
    extrinsics[:3, 0] = x_axis
    extrinsics[:3, 1] = y_axis
    extrinsics[:3, 2] = z_axis
    extrinsics[:3, 3] = eye
    return extrinsics
