import math

import numpy as np
import pytest
from scipy import stats
from hypothesis import given
from hypothesis import strategies as st

from vrteleop.errors import OutOfRange
from vrteleop.kinematics import ArmModel, forward_kinematics
from vrteleop.sim import (LATENCY_POSE, LatencyRig, SinusoidSpec, Trace, TrackerChannelConfig,
                          azimuth, channel_delays, headset_channel, read_traces, run_plant,
                          sample_truth, sinusoid_command, times_us, track, write_traces)
from vrteleop.trajgen import Limits

SPEC = SinusoidSpec(0.4, 0.5, 0, 2.0)
INTERP_TOL = 1e-6  # linear interpolation of a 1 kHz sine: A w^2 h^2 / 8 ~ 5e-7


def dense_truth(spec=SPEC, stop_s=12.0):
    t_us = np.arange(0, int(stop_s * 1e6) + 1, 1000, dtype=np.int64)
    return Trace("ground_truth", t_us, sample_truth(spec, t_us * 1e-6))


def test_sample_truth_examples():
    assert sample_truth(SPEC, 2.0) == 0.0
    assert sample_truth(SPEC, 2.0 + 1 / (4 * 0.5)) == pytest.approx(0.4, abs=1e-15)
    assert sample_truth(SPEC, 2.25) == pytest.approx(0.4 * math.sin(math.pi / 4), abs=1e-12)
    assert sample_truth(SPEC, 2.25) == pytest.approx(0.28284, abs=1e-5)
    assert sample_truth(SPEC, 1.0) == 0.0


def test_sinusoid_spec_validation():
    with pytest.raises(ValueError):
        SinusoidSpec(-1.0)
    with pytest.raises(ValueError):
        SinusoidSpec(1.0, 0.0)


def test_times_us_is_90hz_clock():
    t = times_us(0.0, 1.0, 90.0)
    assert t.size == 91
    assert t[1] == 11_111 and t[2] == 22_222 and t[-1] == 1_000_000


@pytest.mark.parametrize("delay,lead", [(0.0, 0.0), (0.0278, 0.0), (0.0, 0.010), (0.05, 0.01)])
def test_track_pure_shift(delay, lead):
    cfg = TrackerChannelConfig(steady_delay_s=delay, lead_s=lead)
    tr = track(dense_truth(), cfg, SPEC.start_time_s, 1.0, 10.0)
    assert tr.source == "tracker"
    assert np.all(np.diff(tr.t_us) > 0)
    expected = sample_truth(SPEC, tr.t - delay + lead)
    assert np.max(np.abs(tr.column() - expected)) < INTERP_TOL


def test_track_out_of_range():
    with pytest.raises(OutOfRange):
        track(dense_truth(stop_s=5.0), TrackerChannelConfig(steady_delay_s=0.1), 2.0, 0.0, 5.0)
    with pytest.raises(OutOfRange):
        track(dense_truth(stop_s=5.0), TrackerChannelConfig(lead_s=0.1), 2.0, 1.0, 5.0)


def test_track_deterministic_and_seed_sensitive():
    a = track(dense_truth(), headset_channel(seed=3), 2.0, 1.0, 10.0)
    b = track(dense_truth(), headset_channel(seed=3), 2.0, 1.0, 10.0)
    c = track(dense_truth(), headset_channel(seed=4), 2.0, 1.0, 10.0)
    assert np.array_equal(a.values, b.values) and np.array_equal(a.t_us, b.t_us)
    assert not np.array_equal(a.values, c.values)


@given(st.floats(0.0, 0.2), st.floats(0.001, 0.03), st.floats(0.0, 0.02), st.integers(0, 2**32 - 1))
def test_channel_delay_is_location_scale(delay, jitter, lead, seed):
    t = times_us(4.0, 44.0, 90.0) * 1e-6
    base = channel_delays(t, TrackerChannelConfig(steady_jitter_sd_s=1.0, seed=seed), 2.0)
    cfg = TrackerChannelConfig(steady_delay_s=delay, steady_jitter_sd_s=jitter, lead_s=lead, seed=seed)
    d = channel_delays(t, cfg, motion_start_s=2.0)
    assert np.allclose(d, delay - lead + jitter * base, atol=1e-12)


def test_channel_mean_converges():
    # 200 cycles at 0.5 Hz; the standardised mean error must be N(0, 1) across seeds
    t = times_us(4.0, 4.0 + 200 * 2.0, 90.0) * 1e-6
    delay, jitter, lead = 0.0278, 0.0137, 0.004
    z = []
    for seed in range(400):
        cfg = TrackerChannelConfig(steady_delay_s=delay, steady_jitter_sd_s=jitter, lead_s=lead,
                                   seed=seed)
        d = channel_delays(t, cfg, motion_start_s=2.0)
        z.append((d.mean() - (delay - lead)) / (jitter / math.sqrt(d.size)))
    z = np.array(z)
    assert np.mean(np.abs(z) <= 3.0) >= 0.99
    assert stats.kstest(z, "norm").pvalue > 1e-3


def test_channel_mean_recovered_from_trace():
    cfg = TrackerChannelConfig(steady_delay_s=0.05, steady_jitter_sd_s=0.0137, seed=11)
    truth = dense_truth(stop_s=210.0)
    tr = track(truth, cfg, 2.0, 3.0, 203.0)
    # with small delays sin(w(t-d)) ~ sin(wt) - w d cos(wt); regress out d per sample
    w = SPEC.omega
    tt = tr.t - 2.0
    A = -SPEC.amplitude * w * np.cos(w * tt)
    resid = tr.column() - SPEC.amplitude * np.sin(w * tt)
    d_hat = float(A @ resid / (A @ A))
    N = len(tr)
    assert abs(d_hat - 0.05) <= 3 * 0.0137 / math.sqrt(N) + 2e-4


def test_onset_term_confined_to_window():
    cfg = TrackerChannelConfig(onset_extra_delay_s=0.15, onset_sd_s=0.07, onset_window_s=2.0, seed=5)
    t = times_us(0.0, 10.0, 90.0) * 1e-6
    d = channel_delays(t, cfg, motion_start_s=2.0)
    inside = (t >= 2.0) & (t < 4.0)
    assert np.all(d[~inside] == 0.0)
    assert np.all(d[inside] != 0.0)
    assert abs(d[inside].mean() - 0.15) < 4 * 0.07 / math.sqrt(inside.sum())


def test_headset_channel_moments():
    cfg = headset_channel()
    assert cfg.steady_delay_s + cfg.onset_extra_delay_s == pytest.approx(0.1774)
    assert math.hypot(cfg.steady_jitter_sd_s, cfg.onset_sd_s) == pytest.approx(0.078)
    assert cfg.steady_delay_s == 0.0278 and cfg.steady_jitter_sd_s == 0.0137


def test_run_plant_rest_is_constant():
    tr, P = run_plant(Limits.uniform(7, 1.0, 2.0), np.zeros(7), n_steps=500)
    assert np.all(tr.values == 0.0)
    assert np.all(P == 0.0)


def test_run_plant_follows_sinusoid():
    spec = SinusoidSpec(0.4, 0.5, 0, 0.5)
    n = 6000
    cq, cv = sinusoid_command(spec, LATENCY_POSE, n)
    tr, P = run_plant(Limits.uniform(7, 2.0, 8.0), LATENCY_POSE, cq, cv)
    err = np.abs(tr.column() - sample_truth(spec, tr.t))
    # the excitation starts with a velocity step the acceleration limit cannot
    # follow; once that transient has passed the plant stays within one tick
    # of motion at peak speed
    settled = tr.t >= spec.start_time_s + spec.period
    assert np.max(err[settled]) < spec.amplitude * spec.omega * 0.001
    assert np.max(err) < spec.amplitude
    assert np.all(err[tr.t < spec.start_time_s] == 0.0)
    assert np.allclose(P[:, 1:], np.array(LATENCY_POSE)[1:])


def test_run_plant_decimation():
    tr, _ = run_plant(Limits.uniform(7), np.zeros(7), n_steps=1000, decimation=10)
    assert np.all(np.diff(tr.t_us) == 10_000)
    assert len(tr) == 100


def test_run_plant_ee_record():
    model = ArmModel()
    tr, _ = run_plant(Limits.uniform(7), LATENCY_POSE, n_steps=10, record="ee", model=model)
    assert np.allclose(tr.values[0], forward_kinematics(model, LATENCY_POSE).position, atol=1e-12)


def test_latency_rig_azimuth_is_joint_one():
    rig = LatencyRig(duration_s=6.0)
    az = azimuth(rig.hand)
    q1 = np.concatenate([[0.0], rig.robot.column()])
    assert np.allclose(az.column(), q1, atol=1e-12)


def test_trace_rejects_unordered():
    with pytest.raises(ValueError):
        Trace("tracker", [0, 0], [1.0, 2.0])
    with pytest.raises(ValueError):
        Trace("tracker", [0, 1], [1.0])


def test_trace_csv_roundtrip(tmp_path):
    a = Trace("ground_truth", [0, 1000, 2000], np.array([[0.1, 0.2, 1 / 3]] * 3))
    b = Trace("robot_reported", [5, 7], [math.pi, -1e-300])
    p = tmp_path / "t.csv"
    write_traces(p, [a, b])
    back = read_traces(p)
    assert np.array_equal(back["ground_truth"].values, a.values)
    assert np.array_equal(back["robot_reported"].values, b.values)
    assert np.array_equal(back["robot_reported"].t_us, b.t_us)
    assert p.read_text().splitlines()[0] == "source,timestamp_us,v0,v1,v2"
