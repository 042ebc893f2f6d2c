"""On-disk trial schema, windowing, and resampling.

Canonical trial format is a CSV with the header row

    t,gx,gy,gz,ax,ay,az[,qw,qx,qy,qz]

(units: seconds, rad/s, m/s^2; the optional quaternion columns are the
scalar-first ground-truth attitude) plus a JSON sidecar
``{"name": ..., "rate_hz": ..., "source": ...}`` next to the CSV with a
``.json`` extension. Floats are written with 17 significant digits so a
save/load round trip is value-exact. Public datasets are expected to be
adapted to this schema by external converters.

A manifest for batch evaluation is a JSON file
``{"trials": [{"path": ..., "meta_path": ...}, ...]}``; relative paths
are resolved against the manifest's directory.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import quat

CSV_COLUMNS = ("t", "gx", "gy", "gz", "ax", "ay", "az")
CSV_GT_COLUMNS = ("qw", "qx", "qy", "qz")


@dataclass
class Trial:
    """One recording: timestamped gyro/accel rows with optional ground truth.

    ``duplicates`` counts rows whose six measurement values exactly repeat
    the previous row (a known artifact of some public datasets); it is a
    quality metric, the data itself is kept unless dropped at load time.
    """

    name: str
    rate_hz: float
    source: str
    t: np.ndarray
    gyro: np.ndarray
    accel: np.ndarray
    gt: np.ndarray | None = None
    duplicates: int = field(default=0, compare=False)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.gyro = np.asarray(self.gyro, dtype=float)
        self.accel = np.asarray(self.accel, dtype=float)
        n = len(self.t)
        if self.rate_hz <= 0:
            raise ValueError("declared sampling rate must be positive")
        if self.gyro.shape != (n, 3) or self.accel.shape != (n, 3):
            raise ValueError("gyro and accel must be (n, 3) arrays matching t")
        bad = np.where(np.diff(self.t) <= 0)[0]
        if bad.size:
            raise ValueError(f"timestamps must be strictly increasing (row {bad[0] + 2})")
        for name, arr in (("t", self.t), ("gyro", self.gyro), ("accel", self.accel)):
            if not np.all(np.isfinite(arr)):
                row = int(np.argwhere(~np.isfinite(arr.reshape(n, -1)).all(axis=1))[0][0]) + 1
                raise ValueError(f"non-finite {name} value (row {row})")
        if self.gt is not None:
            self.gt = np.asarray(self.gt, dtype=float)
            if self.gt.shape != (n, 4):
                raise ValueError("ground truth must be an (n, 4) array")
            norms = np.linalg.norm(self.gt, axis=1)
            if not np.all(np.isfinite(norms)) or np.any(np.abs(norms - 1.0) > 1e-3):
                row = int(np.argmax(np.abs(norms - 1.0))) + 1
                raise ValueError(f"ground-truth quaternion far from unit norm (row {row})")
            # renormalize only rows that need it so already-unit data stays
            # bit-identical across save/load round trips
            off = np.abs(norms - 1.0) > 1e-9
            if np.any(off):
                self.gt = self.gt.copy()
                self.gt[off] /= norms[off, None]
        self.duplicates = _count_duplicates(self.gyro, self.accel)

    def __len__(self) -> int:
        return len(self.t)


def _count_duplicates(gyro: np.ndarray, accel: np.ndarray) -> int:
    if len(gyro) < 2:
        return 0
    same = np.all(gyro[1:] == gyro[:-1], axis=1) & np.all(accel[1:] == accel[:-1], axis=1)
    return int(np.count_nonzero(same))


def drop_duplicate_rows(trial: Trial) -> Trial:
    """Remove rows whose measurements exactly repeat the previous row."""
    keep = np.ones(len(trial), dtype=bool)
    same = np.all(trial.gyro[1:] == trial.gyro[:-1], axis=1) & np.all(
        trial.accel[1:] == trial.accel[:-1], axis=1
    )
    keep[1:] = ~same
    return Trial(
        name=trial.name,
        rate_hz=trial.rate_hz,
        source=trial.source,
        t=trial.t[keep],
        gyro=trial.gyro[keep],
        accel=trial.accel[keep],
        gt=None if trial.gt is None else trial.gt[keep],
    )


# ---------------------------------------------------------------------------
# CSV + sidecar I/O


def _sidecar_path(path: Path) -> Path:
    return path.with_suffix(".json")


def load_trial(path, meta_path=None, drop_duplicates: bool = False) -> Trial:
    """Load a trial CSV plus its JSON sidecar.

    If the sidecar is missing, the name falls back to the file stem and the
    rate to the reciprocal median timestamp spacing. Schema violations
    raise ValueError naming the offending 1-based data row.
    """
    path = Path(path)
    meta_path = Path(meta_path) if meta_path is not None else _sidecar_path(path)
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().strip()
        columns = tuple(c.strip() for c in header.split(","))
        if columns != CSV_COLUMNS and columns != CSV_COLUMNS + CSV_GT_COLUMNS:
            raise ValueError(f"unexpected CSV header {header!r}")
        has_gt = len(columns) == 11
        rows = []
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != len(columns):
                raise ValueError(f"wrong field count (row {lineno})")
            try:
                rows.append([float(p) for p in parts])
            except ValueError as exc:
                raise ValueError(f"unparseable value (row {lineno}): {exc}") from None
    if not rows:
        raise ValueError("trial file contains no data rows")
    data = np.asarray(rows, dtype=float)

    if meta_path.exists():
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
        name = str(meta.get("name", path.stem))
        rate = float(meta["rate_hz"])
        source = str(meta.get("source", "unknown"))
    else:
        name = path.stem
        rate = 1.0 / float(np.median(np.diff(data[:, 0]))) if len(data) > 1 else 1.0
        source = "unknown"

    trial = Trial(
        name=name,
        rate_hz=rate,
        source=source,
        t=data[:, 0],
        gyro=data[:, 1:4],
        accel=data[:, 4:7],
        gt=data[:, 7:11] if has_gt else None,
    )
    return drop_duplicate_rows(trial) if drop_duplicates else trial


def save_trial(trial: Trial, path, meta_path=None) -> None:
    """Write a trial CSV (17 significant digits) and its JSON sidecar."""
    path = Path(path)
    meta_path = Path(meta_path) if meta_path is not None else _sidecar_path(path)
    has_gt = trial.gt is not None
    columns = CSV_COLUMNS + CSV_GT_COLUMNS if has_gt else CSV_COLUMNS
    lines = [",".join(columns)]
    for i in range(len(trial)):
        vals = [trial.t[i], *trial.gyro[i], *trial.accel[i]]
        if has_gt:
            vals.extend(trial.gt[i])
        lines.append(",".join(f"{v:.17g}" for v in vals))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    meta = {"name": trial.name, "rate_hz": trial.rate_hz, "source": trial.source}
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_manifest(path) -> list[Trial]:
    """Load every trial listed in a manifest JSON file."""
    path = Path(path)
    spec = json.loads(path.read_text(encoding="utf-8"))
    trials = []
    for entry in spec["trials"]:
        csv_path = Path(entry["path"])
        if not csv_path.is_absolute():
            csv_path = path.parent / csv_path
        meta = entry.get("meta_path")
        if meta is not None and not Path(meta).is_absolute():
            meta = path.parent / meta
        trials.append(load_trial(csv_path, meta))
    return trials


# ---------------------------------------------------------------------------
# windowing


@dataclass(frozen=True)
class WindowSpec:
    """N-frame windows every S frames, split half past / half future."""

    n_frames: int = 200
    stride: int = 10

    def __post_init__(self):
        if self.n_frames < 2 or self.n_frames % 2 != 0:
            raise ValueError("window length must be an even count >= 2")
        if not (1 <= self.stride <= self.n_frames):
            raise ValueError("stride must be in [1, window length]")


@dataclass(frozen=True)
class Window:
    """A 6 x N slice of a trial (gyro rows then accel rows), centered."""

    data: np.ndarray  # (6, N): gx, gy, gz, ax, ay, az
    center: int  # sample index into the source trial
    rate_hz: float
    target: np.ndarray | None = None  # gt quaternion at the center

    def __post_init__(self):
        if self.data.shape[0] != 6:
            raise ValueError("window data must have 6 channel rows")


def extract_windows(trial: Trial, spec: WindowSpec) -> list[Window]:
    """Slice a trial into windows; edge frames that do not fill a whole
    window are skipped (no padding)."""
    n, s = spec.n_frames, spec.stride
    if len(trial) < n:
        raise ValueError(f"trial has {len(trial)} samples, window needs {n}")
    channels = np.vstack([trial.gyro.T, trial.accel.T])  # (6, len)
    count = (len(trial) - n) // s + 1
    windows = []
    for k in range(count):
        start = k * s
        center = start + n // 2
        target = None if trial.gt is None else trial.gt[center].copy()
        windows.append(
            Window(
                data=channels[:, start : start + n].copy(),
                center=center,
                rate_hz=trial.rate_hz,
                target=target,
            )
        )
    return windows


# ---------------------------------------------------------------------------
# resampling


def _slerp(q0: np.ndarray, q1: np.ndarray, alpha: float) -> np.ndarray:
    """Shortest-arc spherical interpolation between unit quaternions."""
    dot = float(np.dot(q0, q1))
    if dot < 0.0:
        q1 = -q1
        dot = -dot
    dot = min(1.0, dot)
    if dot > 0.9995:
        return quat.normalize(q0 + alpha * (q1 - q0))
    theta = math.acos(dot)
    s = math.sin(theta)
    return quat.normalize(
        (math.sin((1 - alpha) * theta) / s) * q0 + (math.sin(alpha * theta) / s) * q1
    )


def resample(trial: Trial, target_rate_hz: float) -> Trial:
    """Resample to a new rate: linear interpolation for the measurements,
    shortest-arc spherical interpolation for the ground truth.

    Resampling to the trial's own declared rate returns the data unchanged
    (bit-equal values).
    """
    if target_rate_hz <= 0:
        raise ValueError("target rate must be positive")
    if target_rate_hz == trial.rate_hz:
        return replace(
            trial,
            t=trial.t.copy(),
            gyro=trial.gyro.copy(),
            accel=trial.accel.copy(),
            gt=None if trial.gt is None else trial.gt.copy(),
        )
    if len(trial) < 2:
        raise ValueError("resampling needs at least two samples")
    t0, t1 = float(trial.t[0]), float(trial.t[-1])
    m = int(round((t1 - t0) * target_rate_hz)) + 1
    new_t = t0 + np.arange(m) / target_rate_hz
    new_t = new_t[new_t <= t1 + 1e-12]
    gyro = np.column_stack([np.interp(new_t, trial.t, trial.gyro[:, i]) for i in range(3)])
    accel = np.column_stack([np.interp(new_t, trial.t, trial.accel[:, i]) for i in range(3)])
    gt = None
    if trial.gt is not None:
        idx = np.clip(np.searchsorted(trial.t, new_t, side="right") - 1, 0, len(trial) - 2)
        gt = np.empty((len(new_t), 4))
        for j, (i, tj) in enumerate(zip(idx, new_t)):
            span = trial.t[i + 1] - trial.t[i]
            alpha = float((tj - trial.t[i]) / span)
            gt[j] = _slerp(trial.gt[i], trial.gt[i + 1], min(1.0, max(0.0, alpha)))
    return Trial(
        name=trial.name,
        rate_hz=target_rate_hz,
        source=trial.source,
        t=new_t,
        gyro=gyro,
        accel=accel,
        gt=gt,
    )
