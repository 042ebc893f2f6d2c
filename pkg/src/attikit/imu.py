"""Synthetic trajectories, the IMU measurement model, and dead reckoning.

Measurement model (all quantities body frame unless noted):

    gyro_meas  = omega - bias_gyro + noise_gyro
    accel_meas = R^T g + a_body - bias_accel + noise_accel

where ``R`` is the body-to-world rotation of the true attitude, ``g`` is
the world gravity vector (default [0, 0, +9.80665] m/s^2, so a level,
static sensor reads +1 g on its z-axis), and both noise terms are
zero-mean Gaussians with constant standard deviation. Note the bias signs:
both biases are subtracted from the physical quantity, exactly as the
model above is written. Datasets with other gravity-sign conventions are
expected to be adapted at ingest time.

Noise draws come from ``numpy.random.default_rng(seed)`` (PCG64) in a
fixed order: gyro white noise, accel white noise, then the optional
bias random walks. Identical specs and seed therefore give bit-identical
streams, which is part of the fixture-file contract.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import quat
from .dataio import Trial

GRAVITY = np.array([0.0, 0.0, 9.80665])
GRAVITY.setflags(write=False)


@dataclass(frozen=True)
class NoiseSpec:
    """White-noise standard deviations and the RNG seed."""

    sigma_gyro: float = 0.0  # rad/s
    sigma_accel: float = 0.0  # m/s^2
    seed: int = 0

    def __post_init__(self):
        if self.sigma_gyro < 0 or self.sigma_accel < 0:
            raise ValueError("noise standard deviations must be >= 0")


@dataclass(frozen=True)
class BiasSpec:
    """Constant sensor biases plus an optional per-axis random walk."""

    gyro: tuple[float, float, float] = (0.0, 0.0, 0.0)  # rad/s
    accel: tuple[float, float, float] = (0.0, 0.0, 0.0)  # m/s^2
    gyro_walk_std: tuple[float, float, float] = (0.0, 0.0, 0.0)  # rad/s/sqrt(s)
    accel_walk_std: tuple[float, float, float] = (0.0, 0.0, 0.0)  # m/s^2/sqrt(s)

    def __post_init__(self):
        for name in ("gyro", "accel", "gyro_walk_std", "accel_walk_std"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.shape != (3,) or not np.all(np.isfinite(v)):
                raise ValueError(f"{name} must be a finite 3-vector")
        if np.any(np.asarray(self.gyro_walk_std) < 0) or np.any(
            np.asarray(self.accel_walk_std) < 0
        ):
            raise ValueError("random-walk std must be >= 0")

    @property
    def has_walk(self) -> bool:
        return bool(
            np.any(np.asarray(self.gyro_walk_std) > 0)
            or np.any(np.asarray(self.accel_walk_std) > 0)
        )


@dataclass(frozen=True)
class TrajectorySpec:
    """Analytic rotation-only ground-truth motions.

    kinds:
      static        constant attitude, zero rate
      constant-rate body-fixed axis at ``rate_rad_s``
      sinusoidal    oscillation about a body-fixed axis, instantaneous
                    angle amplitude_rad * sin(2 pi frequency_hz t)
      composite     the listed segments run back to back, each continuing
                    from the previous segment's final attitude
    """

    kind: str = "static"
    duration_s: float = 10.0
    rate_hz: float = 100.0
    axis: tuple[float, float, float] = (0.0, 0.0, 1.0)
    rate_rad_s: float = 0.0
    amplitude_rad: float = 0.0
    frequency_hz: float = 1.0
    initial_quat: tuple[float, float, float, float] = (1.0, 0.0, 0.0, 0.0)
    segments: tuple["TrajectorySpec", ...] = field(default_factory=tuple)
    name: str = "synthetic"

    def __post_init__(self):
        if self.kind not in ("static", "constant-rate", "sinusoidal", "composite"):
            raise ValueError(f"unsupported trajectory kind {self.kind!r}")
        if self.duration_s <= 0 or self.rate_hz <= 0:
            raise ValueError("duration and sampling rate must be positive")
        if self.kind == "composite" and not self.segments:
            raise ValueError("composite trajectory needs at least one segment")


@dataclass(frozen=True)
class TruthStream:
    """Sampled ground truth: attitude, body rate, body linear acceleration."""

    t: np.ndarray
    attitude: np.ndarray  # (n, 4) unit quaternions, body to world
    omega: np.ndarray  # (n, 3) rad/s
    accel_body: np.ndarray  # (n, 3) m/s^2
    rate_hz: float
    name: str = "synthetic"


def _unit_axis(axis) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    n = float(np.linalg.norm(axis))
    if n < 1e-12:
        raise ValueError("trajectory axis must be nonzero")
    return axis / n


def _angle_and_rate(spec: TrajectorySpec, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Integrated rotation angle about the body axis and its derivative."""
    if spec.kind == "static":
        return np.zeros_like(t), np.zeros_like(t)
    if spec.kind == "constant-rate":
        return spec.rate_rad_s * t, np.full_like(t, spec.rate_rad_s)
    if spec.kind == "sinusoidal":
        w = 2.0 * math.pi * spec.frequency_hz
        return spec.amplitude_rad * np.sin(w * t), spec.amplitude_rad * w * np.cos(w * t)
    raise ValueError(f"unsupported trajectory kind {spec.kind!r}")


def generate_trajectory(spec: TrajectorySpec) -> TruthStream:
    """Sample the analytic ground truth at the spec's rate.

    Attitudes are closed-form axis-angle solutions of the body-rate
    kinematics, not numeric integrations; rotation-only motions have zero
    body linear acceleration.
    """
    if spec.kind == "composite":
        return _generate_composite(spec)
    n = int(round(spec.duration_s * spec.rate_hz)) + 1
    t = np.arange(n) / spec.rate_hz
    q0 = quat.normalize(np.asarray(spec.initial_quat, dtype=float))
    axis = _unit_axis(spec.axis)
    angle, rate = _angle_and_rate(spec, t)
    attitude = np.empty((n, 4))
    omega = rate[:, None] * axis[None, :]
    for k in range(n):
        attitude[k] = quat.hamilton(q0, quat.axis_angle_to_quat(axis, float(angle[k])))
    return TruthStream(t, attitude, omega, np.zeros((n, 3)), spec.rate_hz, spec.name)


def _generate_composite(spec: TrajectorySpec) -> TruthStream:
    parts = []
    q_start = quat.normalize(np.asarray(spec.initial_quat, dtype=float))
    t_offset = 0.0
    for i, seg in enumerate(spec.segments):
        seg_spec = TrajectorySpec(
            kind=seg.kind,
            duration_s=seg.duration_s,
            rate_hz=spec.rate_hz,
            axis=seg.axis,
            rate_rad_s=seg.rate_rad_s,
            amplitude_rad=seg.amplitude_rad,
            frequency_hz=seg.frequency_hz,
            initial_quat=tuple(q_start),
            name=spec.name,
        )
        stream = generate_trajectory(seg_spec)
        # drop the first sample of every continuation to avoid duplicates
        sl = slice(1, None) if i > 0 else slice(None)
        parts.append(
            (stream.t[sl] + t_offset, stream.attitude[sl], stream.omega[sl], stream.accel_body[sl])
        )
        t_offset += stream.t[-1]
        q_start = stream.attitude[-1]
    t = np.concatenate([p[0] for p in parts])
    return TruthStream(
        t,
        np.concatenate([p[1] for p in parts]),
        np.concatenate([p[2] for p in parts]),
        np.concatenate([p[3] for p in parts]),
        spec.rate_hz,
        spec.name,
    )


def measure(
    truth: TruthStream,
    noise: NoiseSpec,
    bias: BiasSpec,
    gravity=GRAVITY,
) -> Trial:
    """Apply the measurement model to a truth stream, producing a Trial."""
    g = np.asarray(gravity, dtype=float)
    n = len(truth.t)
    rng = np.random.default_rng(noise.seed)
    v_gyro = rng.normal(0.0, noise.sigma_gyro, (n, 3)) if noise.sigma_gyro > 0 else np.zeros((n, 3))
    v_accel = (
        rng.normal(0.0, noise.sigma_accel, (n, 3)) if noise.sigma_accel > 0 else np.zeros((n, 3))
    )
    b_gyro = np.tile(np.asarray(bias.gyro, dtype=float), (n, 1))
    b_accel = np.tile(np.asarray(bias.accel, dtype=float), (n, 1))
    if bias.has_walk:
        dt = np.diff(truth.t, prepend=truth.t[0])
        sqrt_dt = np.sqrt(np.maximum(dt, 0.0))[:, None]
        b_gyro += np.cumsum(
            rng.normal(0.0, 1.0, (n, 3)) * np.asarray(bias.gyro_walk_std) * sqrt_dt, axis=0
        )
        b_accel += np.cumsum(
            rng.normal(0.0, 1.0, (n, 3)) * np.asarray(bias.accel_walk_std) * sqrt_dt, axis=0
        )

    gyro = truth.omega - b_gyro + v_gyro
    accel = np.empty((n, 3))
    for k in range(n):
        R = quat.to_rotation_matrix(truth.attitude[k])
        accel[k] = R.T @ g + truth.accel_body[k] - b_accel[k] + v_accel[k]
    return Trial(
        name=truth.name,
        rate_hz=truth.rate_hz,
        source="attikit-simulate",
        t=truth.t.copy(),
        gyro=gyro,
        accel=accel,
        gt=truth.attitude.copy(),
    )


def gyro_step(q: np.ndarray, omega, dt: float) -> np.ndarray:
    """One exact exponential-map propagation step of the attitude."""
    return quat.normalize(quat.hamilton(q, quat.from_rotation_vector(np.asarray(omega) * dt)))


def dead_reckon(t, gyro, q0) -> np.ndarray:
    """Integrate gyro rates alone; the zeroth baseline estimator.

    Uses the exact per-step exponential map on the trapezoidal average of
    the two samples bracketing each interval, so constant-rate segments
    integrate exactly. Output is aligned with the input timestamps
    (first output equals q0).
    """
    t = np.asarray(t, dtype=float)
    gyro = np.asarray(gyro, dtype=float)
    if t.ndim != 1 or len(t) < 1 or gyro.shape != (len(t), 3):
        raise ValueError("need matching timestamp and gyro arrays with at least one sample")
    if np.any(np.diff(t) <= 0):
        raise ValueError("timestamps must be strictly increasing")
    out = np.empty((len(t), 4))
    q = quat.normalize(np.asarray(q0, dtype=float))
    out[0] = q
    for k in range(1, len(t)):
        dt = t[k] - t[k - 1]
        w = 0.5 * (gyro[k - 1] + gyro[k])
        q = gyro_step(q, w, dt)
        out[k] = q
    return out


def dead_reckon_trial(trial: Trial, q0=None) -> np.ndarray:
    """Dead-reckon a trial, defaulting the start to its first ground truth."""
    if q0 is None:
        q0 = trial.gt[0] if trial.gt is not None else quat.IDENTITY
    return dead_reckon(trial.t, trial.gyro, q0)
