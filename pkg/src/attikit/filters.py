"""Conventional 6DoF attitude estimators: CF, Madgwick, Mahony, EKF.

All four share the same skeleton per sample: exact exponential-map gyro
propagation followed by an accelerometer correction. With the correction
disabled (``use_accel=False`` or zero gains) every filter reduces exactly
to dead reckoning. Roll and pitch are observable from gravity; yaw drifts.

Update laws, with ``q`` the current body-to-world attitude estimate,
``w`` the gyro sample (rad/s), ``a`` the accel sample (m/s^2),
``a_hat = a/|a|``, ``dt`` the time step, and ``v = R(q)^T z_hat`` the
estimated gravity direction in the body frame:

Complementary (CF)
    q_gyro = q (x) Exp(w dt)
    q_acc  = euler_to_quat(roll(a), pitch(a), yaw(q_gyro))
    q     <- slerp(q_gyro, q_acc, alpha_eff),  alpha_eff = min(1, alpha dt/0.010)
    (alpha is the accel weight per step at 100 Hz, scaled with dt)

Madgwick (IMU form)
    objective f(q) = R(q)^T z_hat - a_hat
                   = [2(x z - w y), 2(w x + y z), 1 - 2(x^2 + y^2)] - a_hat
    J = df/dq (3 x 4), step = J^T f / |J^T f|
    q <- normalize(q_gyro - beta dt step)

Mahony (passive complementary, PI)
    e      = a_hat x v
    b_int <- b_int + Ki e dt
    q     <- q (x) Exp((w + Kp e + b_int) dt)

EKF (multiplicative, 3-state attitude error in the body frame)
    propagate: q <- q (x) Exp(w dt);  P <- F P F^T + Q,
               F = R(Exp(w dt))^T (as a 3x3 error-state transition),
               Q = sigma_g^2 dt I
    update:    H = [v]_x, S = H P H^T + (sigma_a/|g|)^2 I, K = P H^T S^-1
               dtheta = K (a_hat - v)
               q <- q (x) Exp(dtheta)
               P <- (I - K H) P (I - K H)^T + K R_m K^T   (Joseph form),
               then symmetrized

The accelerometer correction is gated on |a| in [0.5, 2] |g| to reject
high-dynamic segments; the gate is configurable. Default gains live in
:class:`FilterConfig` (the source papers publish none).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import quat
from .dataio import Trial
from .imu import GRAVITY, gyro_step

FILTER_KINDS = ("cf", "madgwick", "mahony", "ekf")


class PoisonedStateError(RuntimeError):
    """A non-finite value reached the filter; the state is unusable."""


@dataclass(frozen=True)
class FilterConfig:
    """Estimator selection plus gains; see the module docstring for laws."""

    kind: str = "madgwick"
    cf_alpha: float = 0.02  # accel weight per 10 ms step, time-scaled
    madgwick_beta: float = 0.1  # rad/s gradient-correction magnitude
    mahony_kp: float = 1.0
    mahony_ki: float = 0.3
    ekf_gyro_noise: float = 0.02  # rad/s, process noise density
    ekf_accel_noise: float = 0.3  # m/s^2, measurement noise
    ekf_init_cov: float = 0.3  # rad^2, initial attitude variance
    fallback_period_s: float = 0.01  # used when timestamps are absent
    use_accel: bool = True
    gate_low: float = 0.5  # accept correction when |a| in [low, high]*|g|
    gate_high: float = 2.0
    gravity: tuple[float, float, float] = tuple(GRAVITY)

    def __post_init__(self):
        if self.kind not in FILTER_KINDS:
            raise ValueError(f"unknown filter kind {self.kind!r}")
        if not (0.0 <= self.cf_alpha <= 1.0):
            raise ValueError("cf_alpha must be in [0, 1]")
        for name in ("madgwick_beta", "mahony_kp", "mahony_ki"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.ekf_gyro_noise < 0 or self.ekf_accel_noise <= 0 or self.ekf_init_cov <= 0:
            raise ValueError("EKF noise/covariance parameters must be positive")
        if self.fallback_period_s <= 0:
            raise ValueError("fallback period must be positive")


@dataclass
class FilterState:
    q: np.ndarray
    t: float
    integral: np.ndarray = field(default_factory=lambda: np.zeros(3))  # Mahony bias integral
    cov: np.ndarray | None = None  # EKF 3x3 error-state covariance
    last_gyro: np.ndarray | None = None  # previous sample for trapezoidal rates
    accel_init_ok: bool = True


def init_from_accel(accel) -> tuple[np.ndarray, bool]:
    """Level roll/pitch from a gravity measurement; yaw is set to 0.

    Returns (attitude, ok). Near free fall (|a| <= 0.5 |g|) the attitude
    falls back to identity and ok is False.
    """
    a = np.asarray(accel, dtype=float)
    g = float(np.linalg.norm(GRAVITY))
    if not np.all(np.isfinite(a)) or np.linalg.norm(a) <= 0.5 * g:
        return quat.IDENTITY.copy(), False
    roll = math.atan2(a[1], a[2])
    pitch = math.atan2(-a[0], math.hypot(a[1], a[2]))
    return quat.euler_to_quat((roll, pitch, 0.0)), True


def filter_init(config: FilterConfig, t0: float, accel0) -> FilterState:
    q0, ok = init_from_accel(accel0)
    cov = None
    if config.kind == "ekf":
        cov = np.eye(3) * config.ekf_init_cov
    return FilterState(q=q0, t=float(t0), cov=cov, accel_init_ok=ok)


def _gate(config: FilterConfig, accel: np.ndarray) -> bool:
    g = float(np.linalg.norm(config.gravity))
    n = float(np.linalg.norm(accel))
    return config.gate_low * g <= n <= config.gate_high * g


def _gravity_direction_body(q: np.ndarray) -> np.ndarray:
    """R(q)^T z_hat, the unit gravity direction seen by the body."""
    w, x, y, z = q
    return np.array([2 * (x * z - w * y), 2 * (w * x + y * z), 1 - 2 * (x * x + y * y)])


def _slerp(q0: np.ndarray, q1: np.ndarray, alpha: float) -> np.ndarray:
    dot = float(np.dot(q0, q1))
    if dot < 0.0:
        q1, dot = -q1, -dot
    dot = min(1.0, dot)
    if dot > 0.9995:
        return quat.normalize(q0 + alpha * (q1 - q0))
    theta = math.acos(dot)
    s = math.sin(theta)
    return quat.normalize(
        (math.sin((1 - alpha) * theta) / s) * q0 + (math.sin(alpha * theta) / s) * q1
    )


def _update_cf(config, state, dt, gyro, accel, q_gyro):
    if not (config.use_accel and config.cf_alpha > 0.0 and _gate(config, accel)):
        return q_gyro
    roll = math.atan2(accel[1], accel[2])
    pitch = math.atan2(-accel[0], math.hypot(accel[1], accel[2]))
    yaw = quat.quat_to_euler(q_gyro).yaw
    q_acc = quat.euler_to_quat((roll, pitch, yaw))
    alpha_eff = min(1.0, config.cf_alpha * dt / 0.010)
    return _slerp(q_gyro, q_acc, alpha_eff)


def _update_madgwick(config, state, dt, gyro, accel, q_gyro):
    if not (config.use_accel and config.madgwick_beta > 0.0 and _gate(config, accel)):
        return q_gyro
    a_hat = accel / np.linalg.norm(accel)
    w, x, y, z = q_gyro
    f = _gravity_direction_body(q_gyro) - a_hat
    J = np.array(
        [
            [-2 * y, 2 * z, -2 * w, 2 * x],
            [2 * x, 2 * w, 2 * z, 2 * y],
            [0.0, -4 * x, -4 * y, 0.0],
        ]
    )
    step = J.T @ f
    n = float(np.linalg.norm(step))
    if n < 1e-12:
        return q_gyro
    return quat.normalize(q_gyro - config.madgwick_beta * dt * (step / n))


def _update_mahony(config, state, dt, gyro, accel, q_prev):
    # Mahony folds the correction into the propagated rate, so it re-does
    # the propagation from the previous attitude with the corrected rate.
    if not (
        config.use_accel
        and (config.mahony_kp > 0.0 or config.mahony_ki > 0.0)
        and _gate(config, accel)
    ):
        return None  # keep pure gyro propagation
    a_hat = accel / np.linalg.norm(accel)
    v = _gravity_direction_body(q_prev)
    e = np.cross(a_hat, v)
    state.integral = state.integral + config.mahony_ki * e * dt
    w_corr = gyro + config.mahony_kp * e + state.integral
    return gyro_step(q_prev, w_corr, dt)


def _update_ekf(config, state, dt, gyro, accel, q_gyro):
    # error-state covariance propagation
    F = quat.to_rotation_matrix(quat.from_rotation_vector(np.asarray(gyro) * dt)).T
    Q = (config.ekf_gyro_noise**2 * dt) * np.eye(3)
    P = F @ state.cov @ F.T + Q
    q = q_gyro
    if config.use_accel and _gate(config, accel):
        g = float(np.linalg.norm(config.gravity))
        v = _gravity_direction_body(q)
        a_hat = accel / np.linalg.norm(accel)
        H = np.array([[0, -v[2], v[1]], [v[2], 0, -v[0]], [-v[1], v[0], 0]])
        R_m = (config.ekf_accel_noise / g) ** 2 * np.eye(3)
        S = H @ P @ H.T + R_m
        K = P @ H.T @ np.linalg.inv(S)
        dtheta = K @ (a_hat - v)
        q = quat.normalize(quat.hamilton(q, quat.from_rotation_vector(dtheta)))
        IKH = np.eye(3) - K @ H
        P = IKH @ P @ IKH.T + K @ R_m @ K.T
    state.cov = 0.5 * (P + P.T)
    return q


def filter_update(config: FilterConfig, state: FilterState, t: float, gyro, accel) -> FilterState:
    """Advance one sample. Raises ValueError for a non-positive time step
    and PoisonedStateError for non-finite inputs."""
    gyro = np.asarray(gyro, dtype=float)
    accel = np.asarray(accel, dtype=float)
    if not (np.all(np.isfinite(gyro)) and np.all(np.isfinite(accel)) and math.isfinite(t)):
        raise PoisonedStateError("non-finite input sample")
    dt = float(t) - state.t
    if dt <= 0:
        raise ValueError(f"non-positive time step dt={dt}")

    q_prev = state.q
    q_gyro = gyro_step(q_prev, gyro, dt)
    if config.kind == "cf":
        q_new = _update_cf(config, state, dt, gyro, accel, q_gyro)
    elif config.kind == "madgwick":
        q_new = _update_madgwick(config, state, dt, gyro, accel, q_gyro)
    elif config.kind == "mahony":
        q_new = _update_mahony(config, state, dt, gyro, accel, q_prev)
        if q_new is None:
            q_new = q_gyro
    elif config.kind == "ekf":
        q_new = _update_ekf(config, state, dt, gyro, accel, q_gyro)
    else:
        raise ValueError(f"unknown filter kind {config.kind!r}")

    state.q = q_new
    state.t = float(t)
    return state


def run_filter(config: FilterConfig, trial: Trial, q0=None) -> np.ndarray:
    """Initialize from the first accel sample (or q0) and fold updates.

    Returns one attitude per input sample; failures are re-raised with the
    offending sample index attached.
    """
    if len(trial) == 0:
        raise ValueError("empty trial")
    state = filter_init(config, float(trial.t[0]), trial.accel[0])
    if q0 is not None:
        state.q = quat.normalize(np.asarray(q0, dtype=float))
    out = np.empty((len(trial), 4))
    out[0] = state.q
    for k in range(1, len(trial)):
        try:
            state = filter_update(config, state, float(trial.t[k]), trial.gyro[k], trial.accel[k])
        except (ValueError, PoisonedStateError) as exc:
            raise type(exc)(f"sample {k}: {exc}") from exc
        out[k] = state.q
    return out
