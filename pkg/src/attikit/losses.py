"""Quaternion error/distance losses for attitude estimation.

Each loss exists in two forms: a per-pair kernel ``pair_loss(kind, q_true,
q_est)`` operating on raw 4-vectors (no renormalization, so finite
differences of the kernel are meaningful), and a batch-mean reduction over
a :class:`LossBatch`. Batch reduction is a plain arithmetic mean with a
fixed left-to-right summation order so results do not depend on any
internal partitioning.

Useful identities on unit inputs (all exploited by the test suite):
``scalar(q (x) p*) == dot(q, p)``, hence ``QMEA_NT == QIP == QSGD``
per pair.

Notes on the individual kinds:

* QIP        ``1 - |q . p|``              in [0, 1], double-cover safe.
* QIPA       ``arccos(q . p)``            no absolute value, so this is the
  half angle in [0, pi] and NOT double-cover safe. Kept as printed; the
  distinction from QIP is the whole point of having both.
* QIP_MSE    inner product of the two difference vectors
  ``(q - p) . (p - q)``, which algebraically equals ``-||q - p||^2``.
  Negative-valued; implemented literally, not recommended, and excluded
  from monotonicity properties.
* QME        ``2 * ||vec(q (x) p*)||_1``.
* QMEA       ``2 * arccos(clamp(|scalar(q (x) p*)|))``, the total error
  angle.
* QMEA_NT    ``1 - |scalar(q (x) p*)|``, the arccos-free variant.
* E_I        inclination-only loss, trig and non-trig forms.
* QSGD       ``|1 - |scalar(q (x) p*)||``.
* QSGD2      ``sqrt(1 - |scalar(q (x) p*)|)`` (inner value clamped at 0
  before the square root to absorb -epsilon rounding).
* QSGD3      vector-valued residual ``[w_err - 1, x_err, y_err, z_err]``
  meant to sit under an outer MSE.

Gradients are analytic derivatives of the per-pair kernels with respect to
the raw ``q_est`` components. At non-differentiable points (saturated
clamps, absolute-value and L1 kinks) the subgradient 0 is returned.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import quat


class LossKind(enum.Enum):
    QIP = "qip"
    QIPA = "qipa"
    QIP_MSE = "qip-mse"
    QME = "qme"
    QMEA = "qmea"
    QMEA_NT = "qmea-nt"
    E_I = "e-i"
    E_I_NT = "e-i-nt"
    QSGD = "qsgd"
    QSGD2 = "qsgd2"
    QSGD3_RESIDUAL = "qsgd3-residual"


SCALAR_KINDS = tuple(k for k in LossKind if k is not LossKind.QSGD3_RESIDUAL)

#: scalar kinds that are zero at equality and sweep monotonically
WELL_BEHAVED_KINDS = (
    LossKind.QIP,
    LossKind.QME,
    LossKind.QMEA,
    LossKind.QMEA_NT,
    LossKind.E_I,
    LossKind.E_I_NT,
    LossKind.QSGD,
    LossKind.QSGD2,
)


@dataclass(frozen=True)
class LossBatch:
    """Paired true/estimated unit quaternions, shape (n, 4) each."""

    q_true: np.ndarray
    q_est: np.ndarray

    def __post_init__(self):
        qt = np.asarray(self.q_true, dtype=float)
        qe = np.asarray(self.q_est, dtype=float)
        if qt.ndim == 1:
            qt = qt[None, :]
        if qe.ndim == 1:
            qe = qe[None, :]
        if qt.shape != qe.shape or qt.ndim != 2 or qt.shape[1] != 4:
            raise ValueError(f"batch shapes must match (n, 4), got {qt.shape} and {qe.shape}")
        if qt.shape[0] < 1:
            raise ValueError("batch must contain at least one pair")
        for name, arr in (("q_true", qt), ("q_est", qe)):
            dev = np.abs(np.einsum("ij,ij->i", arr, arr) - 1.0)
            if np.any(dev > 3e-6):
                raise ValueError(f"{name} contains non-unit quaternions")
        object.__setattr__(self, "q_true", qt)
        object.__setattr__(self, "q_est", qe)

    def __len__(self) -> int:
        return self.q_true.shape[0]


def _mean_sequential(values) -> float:
    """Arithmetic mean with a fixed left-to-right accumulation order."""
    total = 0.0
    n = 0
    for v in np.asarray(values, dtype=float).ravel():
        total += float(v)
        n += 1
    if n == 0:
        raise ValueError("empty batch")
    return total / n


def _conj_product(q, p) -> np.ndarray:
    """q (x) p* on raw 4-vectors."""
    return quat.hamilton(q, quat.conjugate(p))


def _conj_product_matrix(q) -> np.ndarray:
    """Matrix M with q (x) p* == M @ p for fixed q."""
    w, x, y, z = np.asarray(q, dtype=float)
    return np.array(
        [
            [w, x, y, z],
            [x, -w, z, -y],
            [y, -z, -w, x],
            [z, y, -x, -w],
        ]
    )


# ---------------------------------------------------------------------------
# per-pair kernels


def pair_loss(kind: LossKind, q_true, q_est) -> float:
    """Single-pair loss value; inputs are raw 4-vectors, no renormalization."""
    q = np.asarray(q_true, dtype=float)
    p = np.asarray(q_est, dtype=float)
    if kind is LossKind.QIP:
        return 1.0 - abs(float(np.dot(q, p)))
    if kind is LossKind.QIPA:
        return math.acos(max(-1.0, min(1.0, float(np.dot(q, p)))))
    if kind is LossKind.QIP_MSE:
        d = q - p
        return float(np.dot(d, -d))
    e = _conj_product(q, p)
    if kind is LossKind.QME:
        return 2.0 * float(np.sum(np.abs(e[1:])))
    if kind is LossKind.QMEA:
        return 2.0 * math.acos(max(0.0, min(1.0, abs(float(e[0])))))
    if kind is LossKind.QMEA_NT:
        return 1.0 - abs(float(e[0]))
    if kind is LossKind.E_I:
        s = math.sqrt(e[0] * e[0] + e[3] * e[3])
        return 2.0 * math.acos(max(0.0, min(1.0, s)))
    if kind is LossKind.E_I_NT:
        return 1.0 - math.sqrt(e[0] * e[0] + e[3] * e[3])
    if kind is LossKind.QSGD:
        return abs(1.0 - abs(float(e[0])))
    if kind is LossKind.QSGD2:
        return math.sqrt(max(0.0, 1.0 - abs(float(e[0]))))
    if kind is LossKind.QSGD3_RESIDUAL:
        raise ValueError("QSGD3 is vector-valued; use qsgd3_residual()")
    raise ValueError(f"unknown loss kind {kind!r}")


def qsgd3_residual(q_true, q_est) -> np.ndarray:
    """Per-pair 4-vector residual [w_err - 1, x_err, y_err, z_err]."""
    e = _conj_product(np.asarray(q_true, dtype=float), np.asarray(q_est, dtype=float))
    return e - np.array([1.0, 0.0, 0.0, 0.0])


# ---------------------------------------------------------------------------
# batch reductions


def batch_loss(kind: LossKind, batch: LossBatch) -> float:
    """Mean of the per-pair kernel over the batch."""
    if kind is LossKind.QSGD3_RESIDUAL:
        # outer MSE over the 4 residual components, then mean over pairs
        vals = [
            float(np.mean(np.square(qsgd3_residual(q, p))))
            for q, p in zip(batch.q_true, batch.q_est)
        ]
    else:
        vals = [pair_loss(kind, q, p) for q, p in zip(batch.q_true, batch.q_est)]
    return _mean_sequential(vals)


def qip_loss(batch: LossBatch) -> float:
    return batch_loss(LossKind.QIP, batch)


def qipa_loss(batch: LossBatch) -> float:
    return batch_loss(LossKind.QIPA, batch)


def qip_mse_loss(batch: LossBatch) -> float:
    return batch_loss(LossKind.QIP_MSE, batch)


def qme_loss(batch: LossBatch) -> float:
    return batch_loss(LossKind.QME, batch)


def qmea_loss(batch: LossBatch) -> float:
    return batch_loss(LossKind.QMEA, batch)


def qmea_nt_loss(batch: LossBatch) -> float:
    return batch_loss(LossKind.QMEA_NT, batch)


def inclination_loss(batch: LossBatch, trig: bool = True) -> float:
    return batch_loss(LossKind.E_I if trig else LossKind.E_I_NT, batch)


def qsgd_loss(batch: LossBatch, variant: int = 1) -> float:
    if variant == 1:
        return batch_loss(LossKind.QSGD, batch)
    if variant == 2:
        return batch_loss(LossKind.QSGD2, batch)
    raise ValueError(f"QSGD variant must be 1 or 2, got {variant}")


# ---------------------------------------------------------------------------
# analytic gradients


def loss_gradient(kind: LossKind, q_true, q_est) -> np.ndarray:
    """Gradient of the per-pair loss w.r.t. the raw q_est components.

    The differentiated function is ``kernel(q_true, q_est / |q_est|)``:
    an estimator emits an unconstrained 4-vector which is unit-scaled
    before the loss, so the gradient lives in the tangent space of the
    sphere (it is orthogonal to q_est and exactly zero at the optimum).

    Subgradient 0 is returned at saturated clamps and at absolute-value /
    L1 kinks, matching the saturating behavior of the clamped kernels.
    """
    if kind is LossKind.QSGD3_RESIDUAL:
        raise ValueError("QSGD3 is vector-valued; no scalar gradient")
    q = np.asarray(q_true, dtype=float)
    p_raw = np.asarray(q_est, dtype=float)
    p_norm = float(np.linalg.norm(p_raw))
    if p_norm < 1e-12:
        raise ValueError("q_est has near-zero norm")
    p = p_raw / p_norm
    g = _kernel_gradient(kind, q, p)
    # chain rule through the normalization: project onto the tangent space
    return (g - float(np.dot(g, p)) * p) / p_norm


def _kernel_gradient(kind: LossKind, q: np.ndarray, p: np.ndarray) -> np.ndarray:
    d = float(np.dot(q, p))

    if kind in (LossKind.QIP, LossKind.QMEA_NT):
        if d == 0.0:
            return np.zeros(4)
        return -math.copysign(1.0, d) * q
    if kind is LossKind.QIPA:
        if abs(d) >= 1.0:
            return np.zeros(4)
        return -q / math.sqrt(1.0 - d * d)
    if kind is LossKind.QIP_MSE:
        return 2.0 * (q - p)
    if kind is LossKind.QSGD:
        if d == 0.0 or abs(d) == 1.0:
            return np.zeros(4)
        return -math.copysign(1.0, 1.0 - abs(d)) * math.copysign(1.0, d) * q
    if kind is LossKind.QSGD2:
        if abs(d) >= 1.0 or d == 0.0:
            return np.zeros(4)
        return -math.copysign(1.0, d) * q / (2.0 * math.sqrt(1.0 - abs(d)))
    if kind is LossKind.QMEA:
        if abs(d) >= 1.0 or d == 0.0:
            return np.zeros(4)
        return -2.0 * math.copysign(1.0, d) * q / math.sqrt(1.0 - d * d)

    M = _conj_product_matrix(q)
    e = M @ p
    if kind is LossKind.QME:
        return 2.0 * M[1:].T @ np.sign(e[1:])
    s = math.sqrt(e[0] * e[0] + e[3] * e[3])
    if kind is LossKind.E_I:
        if s <= 0.0 or s >= 1.0:
            return np.zeros(4)
        ds_dp = (e[0] * M[0] + e[3] * M[3]) / s
        return -2.0 * ds_dp / math.sqrt(1.0 - s * s)
    if kind is LossKind.E_I_NT:
        if s <= 0.0:
            return np.zeros(4)
        return -(e[0] * M[0] + e[3] * M[3]) / s
    raise ValueError(f"unknown loss kind {kind!r}")


# ---------------------------------------------------------------------------
# landscape sweep


def loss_landscape(kind: LossKind, axis, steps: int) -> list[tuple[float, float]]:
    """Loss value versus error angle, swept from pi down to 0.

    Pairs the identity with an axis-angle rotation of decreasing angle.
    For the vector-valued QSGD3 the emitted value is the mean squared
    residual.
    """
    if steps < 2:
        raise ValueError("steps must be at least 2")
    axis = np.asarray(axis, dtype=float)
    angles = np.linspace(math.pi, 0.0, steps)
    out = []
    for angle in angles:
        p = quat.axis_angle_to_quat(axis, float(angle))
        if kind is LossKind.QSGD3_RESIDUAL:
            value = float(np.mean(np.square(qsgd3_residual(quat.IDENTITY, p))))
        else:
            value = pair_loss(kind, quat.IDENTITY, p)
        out.append((float(angle), value))
    return out
