import json
import math

import numpy as np
import pytest

from attikit import dataio, imu, quat
from attikit.dataio import Trial, Window, WindowSpec


def make_trial(n=300, rate=100.0, with_gt=True, seed=0):
    rng = np.random.default_rng(seed)
    t = np.arange(n) / rate
    gyro = rng.normal(0, 0.5, (n, 3))
    accel = rng.normal(0, 1.0, (n, 3)) + [0, 0, 9.8]
    gt = None
    if with_gt:
        gt = np.stack([quat.random_unit_quat(rng) for _ in range(n)])
    return Trial(name="fixture", rate_hz=rate, source="test", t=t, gyro=gyro, accel=accel, gt=gt)


# ---------------------------------------------------------------------------
# schema validation


def test_minimal_three_row_fixture(tmp_path):
    p = tmp_path / "tiny.csv"
    p.write_text(
        "t,gx,gy,gz,ax,ay,az\n"
        "0.0,0,0,0,0,0,9.8\n"
        "0.01,0,0,0,0,0,9.8\n"
        "0.02,0,0,0,0,0,9.8\n"
    )
    (tmp_path / "tiny.json").write_text(json.dumps({"name": "tiny", "rate_hz": 100.0, "source": "x"}))
    trial = dataio.load_trial(p)
    assert len(trial) == 3
    assert trial.rate_hz == 100.0
    assert trial.gt is None


def test_metadata_rate_preserved(tmp_path):
    p = tmp_path / "broadish.csv"
    p.write_text("t,gx,gy,gz,ax,ay,az\n0,0,0,0,0,0,9.8\n0.0035,0,0,0,0,0,9.8\n")
    (tmp_path / "broadish.json").write_text(json.dumps({"name": "b", "rate_hz": 286.3, "source": "s"}))
    assert dataio.load_trial(p).rate_hz == 286.3


def test_decreasing_time_names_row(tmp_path):
    rows = ["t,gx,gy,gz,ax,ay,az"]
    ts = [0.00, 0.01, 0.02, 0.03, 0.04, 0.05, 0.045, 0.07, 0.08, 0.09]
    for t in ts:
        rows.append(f"{t},0,0,0,0,0,9.8")
    p = tmp_path / "bad.csv"
    p.write_text("\n".join(rows) + "\n")
    with pytest.raises(ValueError, match="row 7"):
        dataio.load_trial(p)


def test_non_finite_rejected(tmp_path):
    p = tmp_path / "nan.csv"
    p.write_text("t,gx,gy,gz,ax,ay,az\n0,0,0,0,0,0,9.8\n0.01,nan,0,0,0,0,9.8\n")
    with pytest.raises(ValueError, match="row 2"):
        dataio.load_trial(p)


def test_bad_header_rejected(tmp_path):
    p = tmp_path / "hdr.csv"
    p.write_text("time,gx,gy,gz,ax,ay,az\n0,0,0,0,0,0,9.8\n")
    with pytest.raises(ValueError, match="header"):
        dataio.load_trial(p)


def test_gt_renormalized_on_load(tmp_path):
    p = tmp_path / "gt.csv"
    qv = np.array([1.0, 0, 0, 0]) * 1.0005  # within the 1e-3 tolerance
    p.write_text(
        "t,gx,gy,gz,ax,ay,az,qw,qx,qy,qz\n"
        f"0,0,0,0,0,0,9.8,{qv[0]},{qv[1]},{qv[2]},{qv[3]}\n"
    )
    trial = dataio.load_trial(p)
    assert np.linalg.norm(trial.gt[0]) == pytest.approx(1.0, abs=1e-12)


def test_gt_far_from_unit_rejected():
    with pytest.raises(ValueError, match="unit"):
        make_bad = make_trial(n=5)
        make_bad.gt[2] *= 1.5
        Trial(
            name="x", rate_hz=100, source="t",
            t=make_bad.t, gyro=make_bad.gyro, accel=make_bad.accel, gt=make_bad.gt,
        )


# ---------------------------------------------------------------------------
# round trip


def test_save_load_round_trip_value_identical(tmp_path):
    trial = make_trial(n=50)
    p = tmp_path / "rt.csv"
    dataio.save_trial(trial, p)
    back = dataio.load_trial(p)
    assert back.name == trial.name
    assert back.rate_hz == trial.rate_hz
    assert np.array_equal(back.t, trial.t)
    assert np.array_equal(back.gyro, trial.gyro)
    assert np.array_equal(back.accel, trial.accel)
    assert np.array_equal(back.gt, trial.gt)


def test_manifest_loading(tmp_path):
    a, b = make_trial(n=10, seed=1), make_trial(n=12, seed=2)
    dataio.save_trial(a, tmp_path / "a.csv")
    dataio.save_trial(b, tmp_path / "b.csv")
    manifest = tmp_path / "m.json"
    manifest.write_text(json.dumps({"trials": [{"path": "a.csv"}, {"path": "b.csv"}]}))
    trials = dataio.load_manifest(manifest)
    assert [len(t) for t in trials] == [10, 12]


# ---------------------------------------------------------------------------
# duplicates


def test_duplicate_rows_flagged_and_droppable():
    t = np.arange(6) / 100.0
    gyro = np.zeros((6, 3))
    accel = np.tile([0, 0, 9.8], (6, 1))
    gyro[3] = gyro[2] = [0.1, 0.2, 0.3]  # rows 2,3 identical; rows 0,1,4,5 identical zeros
    trial = Trial(name="d", rate_hz=100, source="t", t=t, gyro=gyro, accel=accel)
    assert trial.duplicates == 3
    dropped = dataio.drop_duplicate_rows(trial)
    assert len(dropped) == 3
    assert dropped.duplicates == 0


# ---------------------------------------------------------------------------
# windowing


def test_window_count_formula():
    trial = make_trial(n=1000)
    wins = dataio.extract_windows(trial, WindowSpec(200, 10))
    assert len(wins) == 81
    assert [w.center for w in wins] == list(range(100, 901, 10))


def test_single_window_trial():
    trial = make_trial(n=200)
    wins = dataio.extract_windows(trial, WindowSpec(200, 10))
    assert len(wins) == 1
    assert wins[0].center == 100
    assert np.array_equal(wins[0].target, trial.gt[100])


def test_window_contents_match_slicing_oracle(rng):
    trial = make_trial(n=257, seed=5)
    spec = WindowSpec(n_frames=64, stride=7)
    wins = dataio.extract_windows(trial, spec)
    assert len(wins) == (257 - 64) // 7 + 1
    for k, w in enumerate(wins):
        start = k * spec.stride
        rows = np.vstack(
            [trial.gyro[start : start + 64].T, trial.accel[start : start + 64].T]
        )
        assert np.array_equal(w.data, rows)
        assert w.center == start + 32
        assert np.array_equal(w.target, trial.gt[w.center])


def test_window_centers_spacing_and_bounds():
    trial = make_trial(n=500)
    spec = WindowSpec(200, 10)
    centers = [w.center for w in dataio.extract_windows(trial, spec)]
    assert all(b - a == spec.stride for a, b in zip(centers, centers[1:]))
    assert all(100 <= c <= 500 - 100 for c in centers)


def test_short_trial_rejected():
    with pytest.raises(ValueError):
        dataio.extract_windows(make_trial(n=100), WindowSpec(200, 10))


def test_window_spec_validation():
    with pytest.raises(ValueError):
        WindowSpec(n_frames=9, stride=1)
    with pytest.raises(ValueError):
        WindowSpec(n_frames=10, stride=0)
    with pytest.raises(ValueError):
        WindowSpec(n_frames=10, stride=11)


# ---------------------------------------------------------------------------
# resampling


def test_resample_identity_rate_bit_equal():
    trial = make_trial(n=64)
    out = dataio.resample(trial, trial.rate_hz)
    assert np.array_equal(out.t, trial.t)
    assert np.array_equal(out.gyro, trial.gyro)
    assert np.array_equal(out.accel, trial.accel)
    assert np.array_equal(out.gt, trial.gt)


def test_resample_halves_count():
    trial = make_trial(n=1000, rate=100.0)
    out = dataio.resample(trial, 50.0)
    assert abs(len(out) - 500) <= 1
    assert out.rate_hz == 50.0


def test_resample_gt_matches_closed_form():
    spec = imu.TrajectorySpec(
        kind="constant-rate", duration_s=2.0, rate_hz=100.0, axis=(0, 0, 1), rate_rad_s=0.9
    )
    truth = imu.generate_trajectory(spec)
    trial = imu.measure(truth, imu.NoiseSpec(), imu.BiasSpec())
    up = dataio.resample(trial, 200.0)
    for k in range(0, len(up), 17):
        expected = quat.axis_angle_to_quat([0, 0, 1], 0.9 * up.t[k])
        assert quat.error_angle(up.gt[k], expected) < 1e-6


def test_resample_needs_two_samples():
    trial = make_trial(n=1)
    with pytest.raises(ValueError):
        dataio.resample(trial, 50.0)
