"""Rotation and vector primitives.

Rotations are plain 3x3 numpy arrays; vectors are length-3 arrays.
"""

from __future__ import annotations

import math

import numpy as np

E1 = np.array([1.0, 0.0, 0.0])
E2 = np.array([0.0, 1.0, 0.0])
E3 = np.array([0.0, 0.0, 1.0])

SMALL_ANGLE = 1e-8


def rot_x(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def cross(a, b) -> np.ndarray:
    """3-vector cross product; much cheaper than ``np.cross`` for single vectors."""
    a0, a1, a2 = a
    b0, b1, b2 = b
    return np.array([a1 * b2 - a2 * b1, a2 * b0 - a0 * b2, a0 * b1 - a1 * b0])


def skew(v) -> np.ndarray:
    """Matrix form of the cross product: ``skew(v) @ w == cross(v, w)``."""
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def vee(m, tol: float = 1e-9) -> np.ndarray:
    """Inverse of :func:`skew`. Raises ``ValueError`` if ``m`` is not antisymmetric."""
    m = np.asarray(m, dtype=float)
    if np.max(np.abs(m + m.T)) > tol:
        raise ValueError("vee() expects an antisymmetric matrix")
    return np.array([m[2, 1], m[0, 2], m[1, 0]])


def exp_so3(omega, dt: float = 1.0) -> np.ndarray:
    """Rotation reached by spinning at constant body rate ``omega`` for ``dt``."""
    if dt < 0:
        raise ValueError("dt must be non-negative")
    phi = np.asarray(omega, dtype=float) * dt
    theta = math.sqrt(phi @ phi)
    K = skew(phi)
    if theta < SMALL_ANGLE:
        # Taylor branch: sin(t)/t -> 1, (1 - cos t)/t^2 -> 1/2
        return np.eye(3) + K + 0.5 * (K @ K)
    a = math.sin(theta) / theta
    b = (1.0 - math.cos(theta)) / (theta * theta)
    return np.eye(3) + a * K + b * (K @ K)


def rodrigues(v, axis, angle: float) -> np.ndarray:
    """Rotate ``v`` about the unit vector ``axis`` by ``angle``."""
    v = np.asarray(v, dtype=float)
    k = np.asarray(axis, dtype=float)
    if abs(math.sqrt(k @ k) - 1.0) > 1e-9:
        raise ValueError("rotation axis must be a unit vector")
    c, s = math.cos(angle), math.sin(angle)
    return v * c + cross(k, v) * s + k * (k @ v) * (1.0 - c)


def orthonormalize(R) -> np.ndarray:
    """Nearest rotation matrix in the Frobenius sense (polar projection)."""
    U, _, Vt = np.linalg.svd(R)
    Q = U @ Vt
    if np.linalg.det(Q) < 0:
        U[:, -1] *= -1.0
        Q = U @ Vt
    return Q


def is_rotation(R, tol: float = 1e-9) -> bool:
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3) or not np.all(np.isfinite(R)):
        return False
    return bool(np.max(np.abs(R.T @ R - np.eye(3))) <= tol and abs(np.linalg.det(R) - 1.0) <= tol)


def euler_zyx(R) -> np.ndarray:
    """Roll, pitch, yaw (rad) such that ``R = rot_z(yaw) @ rot_y(pitch) @ rot_x(roll)``."""
    R = np.asarray(R)
    pitch = math.asin(max(-1.0, min(1.0, -R[2, 0])))
    roll = math.atan2(R[2, 1], R[2, 2])
    yaw = math.atan2(R[1, 0], R[0, 0])
    return np.array([roll, pitch, yaw])


def from_euler_zyx(roll: float, pitch: float, yaw: float) -> np.ndarray:
    return rot_z(yaw) @ rot_y(pitch) @ rot_x(roll)


def wrap_angle(a):
    """Wrap to [-pi, pi)."""
    return (np.asarray(a) + np.pi) % (2.0 * np.pi) - np.pi
