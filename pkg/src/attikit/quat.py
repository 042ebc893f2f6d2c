"""Quaternion algebra and attitude-error calculus.

Conventions used throughout the package:

* Quaternions are scalar-first numpy arrays ``[w, x, y, z]`` representing
  a rotation ``cos(theta/2) + sin(theta/2) * u`` about the unit axis ``u``.
* ``q`` and ``-q`` encode the same rotation (double cover). Nothing here
  canonicalizes implicitly; call :func:`canonicalize` when a unique
  representative is needed.
* Euler angles are aerospace ZYX (yaw about z, then pitch about y, then
  roll about x), all radians, with roll/yaw in (-pi, pi] and pitch in
  [-pi/2, pi/2].
* All angles are radians. Degrees appear only at CLI/report boundaries.
"""

from __future__ import annotations

import math
from typing import NamedTuple, Sequence

import numpy as np

IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])
IDENTITY.setflags(write=False)

_UNIT_TOL = 1e-6


class EulerAngles(NamedTuple):
    """ZYX Euler angles in radians."""

    roll: float
    pitch: float
    yaw: float


class AttitudeError(NamedTuple):
    """Decomposed attitude error between a true and an estimated rotation.

    ``angle`` is the total rotation angle of the multiplicative error,
    ``heading`` the rotation about the z-axis and ``inclination`` the
    shortest residual rotation once the heading part is removed.
    """

    q_err: np.ndarray
    angle: float
    heading: float
    inclination: float


def _as_quat(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if q.shape != (4,):
        raise ValueError(f"expected a 4-component quaternion, got shape {q.shape}")
    return q


def _require_unit(q: np.ndarray, name: str = "quaternion") -> np.ndarray:
    if abs(float(np.dot(q, q)) - 1.0) > 3.0 * _UNIT_TOL:
        raise ValueError(f"{name} must be unit norm, got |q| = {math.sqrt(np.dot(q, q)):.9f}")
    return q


def norm(q) -> float:
    return float(np.linalg.norm(_as_quat(q)))


def normalize(q) -> np.ndarray:
    """Scale to unit norm. Raises on near-zero input."""
    q = _as_quat(q)
    n = float(np.linalg.norm(q))
    if n < 1e-12:
        raise ValueError("cannot normalize a near-zero quaternion")
    return q / n


def canonicalize(q) -> np.ndarray:
    """Pick the double-cover representative with w >= 0.

    If w == 0 the first nonzero component is made positive. Never applied
    implicitly by other operations.
    """
    q = _as_quat(q)
    for c in q:
        if c > 0.0:
            return q.copy()
        if c < 0.0:
            return -q
    return q.copy()


def hamilton(q, p) -> np.ndarray:
    """Hamilton product q (x) p. Inputs need not be unit."""
    qw, qx, qy, qz = _as_quat(q)
    pw, px, py, pz = _as_quat(p)
    return np.array(
        [
            qw * pw - qx * px - qy * py - qz * pz,
            qw * px + qx * pw + qy * pz - qz * py,
            qw * py - qx * pz + qy * pw + qz * px,
            qw * pz + qx * py - qy * px + qz * pw,
        ]
    )


def conjugate(q) -> np.ndarray:
    """[w, -x, -y, -z]; equals the inverse for unit quaternions."""
    q = _as_quat(q)
    return np.array([q[0], -q[1], -q[2], -q[3]])


def left_matrix(q) -> np.ndarray:
    """4x4 matrix L such that hamilton(q, p) == L @ p."""
    w, x, y, z = _as_quat(q)
    return np.array(
        [
            [w, -x, -y, -z],
            [x, w, -z, y],
            [y, z, w, -x],
            [z, -y, x, w],
        ]
    )


def to_rotation_matrix(q) -> np.ndarray:
    """Body-to-world rotation matrix of a unit quaternion."""
    w, x, y, z = normalize(q)
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def rotate_vector(q, v) -> np.ndarray:
    """Rotate a 3-vector by a unit quaternion (body-to-world)."""
    q = _as_quat(q)
    v = np.asarray(v, dtype=float)
    u = q[1:]
    t = 2.0 * np.cross(u, v)
    return v + q[0] * t + np.cross(u, t)


def axis_angle_to_quat(axis, angle: float) -> np.ndarray:
    """Quaternion for a rotation of ``angle`` radians about a unit axis."""
    axis = np.asarray(axis, dtype=float)
    if axis.shape != (3,):
        raise ValueError(f"axis must be a 3-vector, got shape {axis.shape}")
    n = float(np.linalg.norm(axis))
    if abs(n - 1.0) > _UNIT_TOL:
        raise ValueError(f"axis must be unit length, got |axis| = {n:.9f}")
    half = 0.5 * angle
    return np.concatenate(([math.cos(half)], math.sin(half) * axis))


def from_rotation_vector(v) -> np.ndarray:
    """Exponential map: rotation vector (axis * angle) to unit quaternion."""
    v = np.asarray(v, dtype=float)
    angle = float(np.linalg.norm(v))
    if angle < 1e-12:
        # second-order series keeps the map smooth through zero
        q = np.concatenate(([1.0 - angle * angle / 8.0], 0.5 * v))
        return q / np.linalg.norm(q)
    return np.concatenate(([math.cos(0.5 * angle)], math.sin(0.5 * angle) * (v / angle)))


def euler_to_quat(e: EulerAngles | Sequence[float]) -> np.ndarray:
    """ZYX Euler angles (roll, pitch, yaw) to unit quaternion."""
    roll, pitch, yaw = e
    cr, sr = math.cos(roll / 2), math.sin(roll / 2)
    cp, sp = math.cos(pitch / 2), math.sin(pitch / 2)
    cy, sy = math.cos(yaw / 2), math.sin(yaw / 2)
    return np.array(
        [
            cr * cp * cy + sr * sp * sy,
            sr * cp * cy - cr * sp * sy,
            cr * sp * cy + sr * cp * sy,
            cr * cp * sy - sr * sp * cy,
        ]
    )


def _wrap_half_open(angle: float) -> float:
    """Wrap into (-pi, pi]."""
    wrapped = math.remainder(angle, 2.0 * math.pi)
    if wrapped <= -math.pi:
        wrapped += 2.0 * math.pi
    return wrapped


def quat_to_euler(q) -> EulerAngles:
    """Unit quaternion to ZYX Euler angles.

    Near gimbal lock (|pitch| within 1e-6 rad of pi/2) roll is set to 0 and
    yaw absorbs the remaining rotation about the vertical.

    Raises ValueError for non-unit input (norm deviation above 1e-6).
    """
    q = _as_quat(q)
    n = float(np.linalg.norm(q))
    if abs(n - 1.0) > _UNIT_TOL:
        raise ValueError(f"quat_to_euler requires a unit quaternion, got |q| = {n:.9f}")
    w, x, y, z = q
    sinp = max(-1.0, min(1.0, 2.0 * (w * y - z * x)))
    pitch = math.asin(sinp)
    if abs(abs(pitch) - math.pi / 2) <= 1e-6:
        # roll and yaw are coupled here; use the documented roll := 0 convention
        sign = 1.0 if pitch > 0 else -1.0
        pitch = sign * math.pi / 2
        yaw = 2.0 * math.atan2(z, sign * y) if (abs(y) > 1e-30 or abs(z) > 1e-30) else 0.0
        return EulerAngles(0.0, pitch, _wrap_half_open(yaw))
    roll = math.atan2(2.0 * (w * x + y * z), 1.0 - 2.0 * (x * x + y * y))
    yaw = math.atan2(2.0 * (w * z + x * y), 1.0 - 2.0 * (y * y + z * z))
    return EulerAngles(_wrap_half_open(roll), pitch, _wrap_half_open(yaw))


def error_quat(q_true, q_est) -> np.ndarray:
    """Multiplicative error q_true (x) q_est^-1 (shortest rotation between them)."""
    q_true = _require_unit(_as_quat(q_true), "q_true")
    q_est = _require_unit(_as_quat(q_est), "q_est")
    return hamilton(q_true, conjugate(q_est))


def error_angle(q_true, q_est) -> float:
    """Total rotation angle between two unit quaternions, in [0, pi].

    Uses 2*arccos(|w_err|); the absolute value makes the result immune to
    the q/-q sign ambiguity.
    """
    e = error_quat(q_true, q_est)
    return 2.0 * math.acos(min(1.0, abs(float(e[0]))))


def heading_inclination_errors(q_err) -> tuple[float, float]:
    """Split an error quaternion into heading and inclination angles.

    Heading e_h = 2*atan2(q_z, q_w) is the rotation about the z-axis;
    inclination e_i = 2*arccos(sqrt(q_w^2 + q_z^2)) is the shortest
    residual rotation. When q_w = q_z = 0 the heading is undefined and
    reported as 0 by convention (e_i is then pi).
    """
    q_err = _require_unit(_as_quat(q_err), "q_err")
    w, _, _, z = q_err
    s = math.sqrt(w * w + z * z)
    e_h = 0.0 if s < 1e-15 else 2.0 * math.atan2(z, w)
    e_i = 2.0 * math.acos(min(1.0, s))
    return _wrap_half_open(e_h), e_i


def attitude_error(q_true, q_est) -> AttitudeError:
    """Full error report between a true and an estimated attitude."""
    e = error_quat(q_true, q_est)
    e_h, e_i = heading_inclination_errors(e)
    return AttitudeError(e, 2.0 * math.acos(min(1.0, abs(float(e[0])))), e_h, e_i)


def rmse_angle(errors) -> float:
    """Root mean square of a nonempty sequence of angles (radians)."""
    errors = np.asarray(errors, dtype=float)
    if errors.size == 0:
        raise ValueError("rmse_angle requires a nonempty sequence")
    return float(np.sqrt(np.mean(np.square(errors))))


def random_unit_quat(rng: np.random.Generator) -> np.ndarray:
    """Uniformly random rotation (Shoemake subgroup method)."""
    u1, u2, u3 = rng.random(3)
    a, b = math.sqrt(1.0 - u1), math.sqrt(u1)
    return np.array(
        [
            a * math.sin(2 * math.pi * u2),
            a * math.cos(2 * math.pi * u2),
            b * math.sin(2 * math.pi * u3),
            b * math.cos(2 * math.pi * u3),
        ]
    )
