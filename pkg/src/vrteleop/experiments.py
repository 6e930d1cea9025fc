"""The three experiments: latency, static accuracy and closed-loop teleoperation.

Each ``run_*`` function takes a resolved ``RunConfig`` and returns its
report plus the traces to be written; no file I/O happens here.
"""
from __future__ import annotations

import functools
import logging
import math
import signal
import threading
import time
from dataclasses import dataclass

import numpy as np

from . import wire
from .analysis import (AccuracyReport, LatencyReport, calibrate_noise_sigma, latency_report,
                       static_accuracy)
from .bridge import Bridge, MappingConfig, PredictMode, PredictorConfig, map_pose
from .config import RunConfig
from .errors import ConfigError
from .geometry import Pose, Quat, RigidTransform
from .kinematics import ArmModel, fk_many, forward_kinematics
from .sim import (LATENCY_POSE, LatencyRig, SinusoidSpec, Trace, TrackerChannelConfig, azimuth,
                  static_points, track, tracked_static)
from .trajgen import Limits

log = logging.getLogger(__name__)

TELEOP_POSE = LATENCY_POSE
HAND_MOTION_START_S = 1.0
TRUTH_LEAD_IN_S = 1.0


def trial_seed(seed: int, k: int) -> int:
    """Independent per-trial seed derived from the run seed."""
    return int(np.random.SeedSequence([seed, k]).generate_state(1)[0])


def channel_config(cfg: RunConfig, seed: int, period_s: float) -> TrackerChannelConfig:
    window = cfg["onset_window_s"]
    return TrackerChannelConfig(
        steady_delay_s=cfg["steady_delay_ms"] * 1e-3,
        steady_jitter_sd_s=cfg["steady_jitter_ms"] * 1e-3,
        onset_extra_delay_s=cfg["onset_extra_ms"] * 1e-3,
        onset_sd_s=cfg["onset_sd_ms"] * 1e-3,
        onset_window_s=period_s if window is None else window,
        pos_noise_sd_m=cfg["pos_noise_mm"] * 1e-3,
        lead_s=cfg["lead_ms"] * 1e-3,
        sample_rate_hz=cfg["sample_rate_hz"],
        seed=seed,
    )


def udp_loopback(trace: Trace, timeout_s: float = 1.0) -> Trace:
    """Carry a position trace through the wire codec over real loopback sockets."""
    received: list[wire.HandSample] = []
    with wire.UdpReceiver(wire.decode_hand, 0, gate=wire.GateState(None),
                          on_message=received.append, timeout_s=timeout_s) as rx, \
            wire.UdpSender(*rx.address) as tx:
        for i, (ts, row) in enumerate(zip(trace.t_us, trace.values)):
            tx.send_hand(wire.HandSample(i, int(ts), Pose(row[:3])))
            if not rx.poll_once():
                raise RuntimeError(f"loopback lost or rejected datagram {i}")
    t_us = np.array([s.timestamp_us for s in received], dtype=np.int64)
    vals = np.array([s.pose.position for s in received])
    return Trace(trace.source, t_us, vals)


# -- latency -----------------------------------------------------------------

@dataclass
class LatencyRun:
    report: LatencyReport
    trials: list[list[Trace]]


@functools.lru_cache(maxsize=4)
def _latency_rig(spec: SinusoidSpec, duration_s: float, vmax: float, amax: float) -> LatencyRig:
    # the plant motion is seed-independent; seed sweeps reuse it, read-only
    rig = LatencyRig(spec, duration_s, limits=Limits.uniform(7, vmax, amax))
    for tr in (rig.robot, rig.hand):
        tr.t_us.flags.writeable = False
        tr.values.flags.writeable = False
    return rig


def run_latency(cfg: RunConfig) -> LatencyRun:
    spec = SinusoidSpec(cfg["amp"], cfg["freq_hz"], 0, cfg["start_s"])
    if spec.amplitude * spec.omega > cfg["plant_vmax"]:
        raise ConfigError(f"peak joint speed {spec.amplitude * spec.omega:.3f} rad/s exceeds "
                          f"plant_vmax {cfg['plant_vmax']}")
    rig = _latency_rig(spec, cfg["duration_s"], cfg["plant_vmax"], cfg["plant_amax"])
    pairs, trials = [], []
    for k in range(cfg["trials"]):
        channel = channel_config(cfg, trial_seed(cfg["seed"], k), spec.period)
        tracker = rig.tracker(channel)
        if cfg["mode"] == "udp":
            tracker = udp_loopback(tracker)
        pairs.append((rig.robot, azimuth(tracker)))
        trials.append([rig.hand, tracker, rig.robot])
    return LatencyRun(latency_report(pairs, spec), trials)


# -- accuracy ----------------------------------------------------------------

@dataclass
class AccuracyRun:
    report: AccuracyReport
    sigma_m: float
    traces: list[Trace]


def accuracy_sigma(cfg: RunConfig) -> float:
    if cfg["accuracy_sigma_mm"] is not None:
        return cfg["accuracy_sigma_mm"] * 1e-3
    # fixed calibration seed: sigma must not depend on the run seed
    return calibrate_noise_sigma(cfg["accuracy_target_cm"] * 1e-2, seed=0)


def run_accuracy(cfg: RunConfig) -> AccuracyRun:
    if cfg["mode"] != "sim":
        raise ConfigError("the accuracy experiment runs in sim mode only")
    sigma = accuracy_sigma(cfg)
    rng = np.random.default_rng(cfg["seed"])
    truth = static_points(cfg["points"], rng)
    tracked = tracked_static(truth, sigma, rng)
    report = static_accuracy(list(zip(truth, tracked)))
    if report.sd_error_m is None:
        log.warning("single point: the error sd is undefined")
    t_us = np.arange(cfg["points"], dtype=np.int64) * 1_000_000
    return AccuracyRun(report, sigma, [Trace("ground_truth", t_us, truth),
                                       Trace("tracker", t_us, tracked)])


# -- teleoperation -----------------------------------------------------------

@dataclass(frozen=True)
class TeleopResult:
    label: str
    rms_error_m: float
    final_error_m: float
    ik_failures: int
    stale_drops: int
    traces: list[Trace]


def mapping_config(cfg: RunConfig) -> MappingConfig:
    calib = RigidTransform(Quat(*cfg["calib_rotation"]), cfg["calib_translation"])
    return MappingConfig(calib, cfg["scale"], cfg["scale_origin"])


def hand_orientation(model: ArmModel, mapping: MappingConfig) -> Quat:
    """Hand orientation that maps onto the flange orientation of the start pose."""
    return mapping.calibration.rotation.conj() * forward_kinematics(model, TELEOP_POSE).orientation


def hand_path(cfg: RunConfig, t: np.ndarray) -> np.ndarray:
    """Scripted hand positions (headset frame) at times ``t``.

    The sinusoid fades in over its first period (raised-cosine envelope) so
    the path starts from rest without a velocity step.
    """
    pos = np.tile(np.asarray(cfg["hand_center"], dtype=float), (t.size, 1))
    if cfg["hand_path"] == "sinusoid":
        f = cfg["hand_freq_hz"]
        tau = np.maximum(t - HAND_MOTION_START_S, 0.0)
        env = np.where(tau < 1.0 / f, 0.5 * (1.0 - np.cos(math.pi * f * tau)), 1.0)
        pos[:, 1] += cfg["hand_amp_m"] * env * np.sin(2.0 * math.pi * f * tau)
    return pos


def _predictor(cfg: RunConfig, enabled: bool) -> PredictorConfig:
    if not enabled:
        return PredictorConfig(0.0, PredictMode.OFF)
    return PredictorConfig(cfg["predict_horizon_ms"] * 1e-3, PredictMode(cfg["predict_mode"]))


def simulate_teleop(cfg: RunConfig, predictor: PredictorConfig, label: str,
                    dt: float = 0.001) -> TeleopResult:
    """Scripted hand -> tracker channel -> wire -> bridge -> plant, in virtual time.

    Tracking error is the distance between the mapped true hand position and
    the flange position rebuilt from the joint-state backchannel.
    """
    model = ArmModel()
    mapping = mapping_config(cfg)
    n_ticks = int(round(cfg["teleop_duration_s"] / dt))
    tick_us = int(round(dt * 1e6))
    orient = hand_orientation(model, mapping)

    t_truth = np.arange(-int(TRUTH_LEAD_IN_S / dt), n_ticks + 1) * dt
    truth = Trace("ground_truth", np.round(t_truth * 1e6).astype(np.int64), hand_path(cfg, t_truth))
    channel = channel_config(cfg, trial_seed(cfg["seed"], 0), 1.0 / cfg["hand_freq_hz"])
    tracker = track(truth, channel, HAND_MOTION_START_S, start_s=0.0, stop_s=n_ticks * dt)

    limits = Limits.uniform(7, cfg["vmax"], cfg["amax"])
    max_age = None if cfg["max_age_ms"] == 0 else int(round(cfg["max_age_ms"] * 1e3))
    bridge = Bridge(model, limits, TELEOP_POSE, mapping, predictor, dt=dt, max_age_us=max_age)

    dec = cfg["decimation"]
    emitted_t, emitted_q, commanded = [], [], []
    i = 0
    for k in range(1, n_ticks + 1):
        now_us = k * tick_us
        # deliver every tracker sample due by now; the mailbox keeps the newest
        while i < len(tracker) and tracker.t_us[i] <= now_us:
            sample = wire.HandSample(i, int(tracker.t_us[i]), Pose(tracker.values[i], orient))
            bridge.submit(wire.decode_hand(wire.encode_hand(sample)))
            i += 1
        msg = bridge.tick(now_us)
        if k % dec == 0:
            back = wire.decode_joint(wire.encode_joint(msg))
            emitted_t.append(now_us + tick_us)
            emitted_q.append(back.positions)
            cmd = bridge.last_command
            commanded.append(cmd.position if cmd is not None else (math.nan,) * 3)

    t_us = np.array(emitted_t, dtype=np.int64)
    achieved, _ = fk_many(model, np.array(emitted_q))
    true_hand = np.array([map_pose(Pose(p, orient), mapping).position
                          for p in hand_path(cfg, t_us * 1e-6)])
    commanded = np.array(commanded)
    err = np.linalg.norm(achieved - true_hand, axis=1)
    final = float(np.linalg.norm(achieved[-1] - commanded[-1]))
    traces = [Trace("ground_truth", t_us, true_hand),
              Trace("tracker", t_us, commanded),
              Trace("robot_reported", t_us, achieved)]
    return TeleopResult(label, float(np.sqrt(np.mean(err**2))), final,
                        bridge.status.ik_failures, bridge.status.stale_drops, traces)


def run_teleop_sim(cfg: RunConfig) -> list[TeleopResult]:
    return [simulate_teleop(cfg, _predictor(cfg, False), "predictor_off"),
            simulate_teleop(cfg, _predictor(cfg, True), "predictor_on")]


def run_teleop_udp(cfg: RunConfig, stop: threading.Event | None = None) -> TeleopResult:
    """Live loop: hand datagrams in on ``hand_port``, joint states out to ``joint_port``.

    Runs for ``teleop_duration_s`` or until ``stop`` is set (SIGINT sets it
    when called from the main thread).
    """
    model = ArmModel()
    mapping = mapping_config(cfg)
    limits = Limits.uniform(7, cfg["vmax"], cfg["amax"])
    max_age = None if cfg["max_age_ms"] == 0 else int(round(cfg["max_age_ms"] * 1e3))
    bridge = Bridge(model, limits, TELEOP_POSE, mapping, _predictor(cfg, True),
                    max_age_us=max_age, align_clocks=True)
    stop = stop or threading.Event()
    if threading.current_thread() is threading.main_thread():
        signal.signal(signal.SIGINT, lambda *_: stop.set())
    dt = bridge.dt
    dec = cfg["decimation"]
    t_list, q_list = [], []
    with wire.UdpReceiver(wire.decode_hand, cfg["hand_port"], cfg["host"],
                          gate=wire.GateState(None), on_message=bridge.submit) as rx, \
            wire.UdpSender(cfg["host"], cfg["joint_port"]) as tx:
        rx.start()
        t0 = time.monotonic()
        k = 0
        while not stop.is_set() and time.monotonic() - t0 < cfg["teleop_duration_s"]:
            k += 1
            msg = bridge.tick(wire.monotonic_us(), dt)
            if k % dec == 0:
                tx.send_joint(msg)
                t_list.append(msg.timestamp_us)
                q_list.append(msg.positions)
            delay = t0 + k * dt - time.monotonic()
            if delay > 0:
                time.sleep(delay)
    t_us = np.array(t_list, dtype=np.int64)
    achieved = fk_many(model, np.array(q_list))[0] if q_list else np.zeros((0, 3))
    return TeleopResult("udp", math.nan, math.nan, bridge.status.ik_failures,
                        bridge.status.stale_drops, [Trace("robot_reported", t_us, achieved)])
