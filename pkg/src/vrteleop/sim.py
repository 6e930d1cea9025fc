"""Deterministic stand-ins for the physical rig.

A sinusoid excitation drives joint 1 through the trajectory generator
(the ideal kinematic plant), FK turns the plant motion into the replica
hand's position, and a tracker channel samples that position at 90 Hz with
delay, jitter, onset lag, predictive lead and Gaussian position noise.
Everything runs in virtual time from explicit seeds.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import OutOfRange
from .kinematics import ArmModel, fk_many
from .trajgen import Limits, simulate_batch

SOURCES = ("ground_truth", "tracker", "robot_reported")

# nominal pose for the latency rig: elbow and wrist bent so the hand sits
# off the base axis and its azimuth equals joint 1
LATENCY_POSE = (0.0, 0.5, 0.0, 1.2, 0.0, 0.8, 0.0)


@dataclass(frozen=True)
class SinusoidSpec:
    amplitude: float = 0.4
    frequency: float = 0.5
    axis: int = 0
    start_time_s: float = 2.0

    def __post_init__(self):
        if self.amplitude < 0 or not self.frequency > 0:
            raise ValueError("need amplitude >= 0 and frequency > 0")

    @property
    def period(self) -> float:
        return 1.0 / self.frequency

    @property
    def omega(self) -> float:
        return 2.0 * math.pi * self.frequency


def sample_truth(spec: SinusoidSpec, t):
    """Excitation value at time(s) ``t``: rest before the start, sine after."""
    t = np.asarray(t, dtype=float)
    out = np.where(t < spec.start_time_s, 0.0,
                   spec.amplitude * np.sin(spec.omega * (t - spec.start_time_s)))
    return float(out) if out.ndim == 0 else out


def truth_velocity(spec: SinusoidSpec, t):
    t = np.asarray(t, dtype=float)
    return np.where(t < spec.start_time_s, 0.0,
                    spec.amplitude * spec.omega * np.cos(spec.omega * (t - spec.start_time_s)))


@dataclass(frozen=True)
class TrackerChannelConfig:
    steady_delay_s: float = 0.0
    steady_jitter_sd_s: float = 0.0
    onset_extra_delay_s: float = 0.0
    onset_sd_s: float = 0.0
    onset_window_s: float = 2.0
    pos_noise_sd_m: float = 0.0
    lead_s: float = 0.0
    sample_rate_hz: float = 90.0
    seed: int = 0

    def __post_init__(self):
        if not self.sample_rate_hz > 0:
            raise ValueError("sample rate must be positive")
        for name in ("steady_jitter_sd_s", "onset_sd_s", "pos_noise_sd_m", "onset_window_s"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


def headset_channel(seed: int = 0, pos_noise_sd_m: float = 0.001, period_s: float = 2.0,
                    **overrides) -> TrackerChannelConfig:
    """Channel whose steady regime is 27.8 +/- 13.7 ms and onset regime 177.4 +/- 78.0 ms.

    The onset term adds to the steady one, so its mean is the difference of
    the means and its sd the quadrature difference of the sds.
    """
    kw = dict(
        steady_delay_s=0.0278,
        steady_jitter_sd_s=0.0137,
        onset_extra_delay_s=0.1774 - 0.0278,
        onset_sd_s=math.sqrt(0.078**2 - 0.0137**2),
        onset_window_s=period_s,
        pos_noise_sd_m=pos_noise_sd_m,
        seed=seed,
    )
    kw.update(overrides)
    return TrackerChannelConfig(**kw)


@dataclass(frozen=True)
class Trace:
    source: str
    t_us: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t_us, dtype=np.int64).ravel()
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.shape[0] != t.size:
            raise ValueError("one value row per timestamp")
        if t.size > 1 and not np.all(np.diff(t) > 0):
            raise ValueError("trace timestamps must be strictly increasing")
        object.__setattr__(self, "t_us", t)
        object.__setattr__(self, "values", v)

    @property
    def t(self) -> np.ndarray:
        return self.t_us * 1e-6

    def column(self, i: int = 0) -> np.ndarray:
        return self.values[:, i]

    def __len__(self):
        return self.t_us.size

    def with_source(self, source: str) -> Trace:
        return Trace(source, self.t_us, self.values)

    def select(self, t0: float, t1: float) -> Trace:
        t = self.t
        m = (t >= t0) & (t < t1)
        return Trace(self.source, self.t_us[m], self.values[m])


def times_us(start_s: float, stop_s: float, rate_hz: float) -> np.ndarray:
    """Integer-microsecond sample clock ``k / rate`` covering [start, stop]."""
    k0 = math.ceil(start_s * rate_hz - 1e-9)
    k1 = math.floor(stop_s * rate_hz + 1e-9)
    k = np.arange(k0, k1 + 1, dtype=np.int64)
    return np.round(k * (1e6 / rate_hz)).astype(np.int64)


def channel_delays(t: np.ndarray, cfg: TrackerChannelConfig, motion_start_s: float) -> np.ndarray:
    """Per-sample effective delay (s) of the tracker channel, lead included.

    Random draws are taken for every sample in a fixed order, so the stream
    for a seed does not depend on which samples fall in the onset window.
    """
    rng = np.random.default_rng(cfg.seed)
    n = t.size
    steady = rng.normal(cfg.steady_delay_s, cfg.steady_jitter_sd_s, n)
    onset = rng.normal(cfg.onset_extra_delay_s, cfg.onset_sd_s, n)
    in_onset = (t >= motion_start_s) & (t < motion_start_s + cfg.onset_window_s)
    return steady + np.where(in_onset, onset, 0.0) - cfg.lead_s


def track(truth: Trace, cfg: TrackerChannelConfig, motion_start_s: float,
          start_s: float | None = None, stop_s: float | None = None) -> Trace:
    """Sample ``truth`` through the tracker channel.

    The sample at receiver time t reports truth at t - d(t) + lead, linearly
    interpolated, plus independent Gaussian noise on every column.
    """
    tt = truth.t
    start_s = tt[0] if start_s is None else start_s
    stop_s = tt[-1] if stop_s is None else stop_s
    t_us = times_us(start_s, stop_s, cfg.sample_rate_hz)
    t = t_us * 1e-6
    eval_t = t - channel_delays(t, cfg, motion_start_s)
    if eval_t.size and (eval_t.min() < tt[0] - 1e-12 or eval_t.max() > tt[-1] + 1e-12):
        raise OutOfRange(
            f"channel needs truth on [{eval_t.min():.4f}, {eval_t.max():.4f}] s, "
            f"trace covers [{tt[0]:.4f}, {tt[-1]:.4f}] s")
    vals = np.column_stack([np.interp(eval_t, tt, truth.values[:, i])
                            for i in range(truth.values.shape[1])])
    if cfg.pos_noise_sd_m > 0:
        # separate stream so noise does not shift the delay draws
        noise_rng = np.random.default_rng([cfg.seed, 1])
        vals = vals + noise_rng.normal(0.0, cfg.pos_noise_sd_m, vals.shape)
    return Trace("tracker", t_us, vals)


def sinusoid_command(spec: SinusoidSpec, q_nominal, n_steps: int, dt: float = 0.001):
    """Per-tick joint targets (positions, velocities) following the excitation."""
    t = (np.arange(n_steps) + 1) * dt
    q = np.tile(np.asarray(q_nominal, dtype=float), (n_steps, 1))
    v = np.zeros_like(q)
    q[:, spec.axis] += sample_truth(spec, t)
    v[:, spec.axis] = truth_velocity(spec, t)
    return q, v


def run_plant(limits: Limits, initial_q, command_q=None, command_v=None, n_steps: int | None = None,
              dt: float = 0.001, decimation: int = 1, model: ArmModel | None = None,
              record: str = "joint", joint: int = 0):
    """Ideal kinematic plant: joint state equals generator output every tick.

    ``command_q``/``command_v`` give one target per tick; with no command the
    generator holds its initial rest state for ``n_steps`` ticks. ``record``
    selects the trace content: ``"joint"`` (one joint angle), ``"joints"``
    (all) or ``"ee"`` (flange position via FK, needs ``model``).
    Returns ``(trace, positions)`` with positions ``(n_steps, J)``.
    """
    q0 = np.asarray(initial_q, dtype=float)
    J = q0.size
    if command_q is None:
        if n_steps is None:
            raise ValueError("n_steps is required without a command stream")
        targets = np.zeros((1, 1, J))
        ticks = np.full((1, 1), -1, dtype=np.int64)
    else:
        command_q = np.asarray(command_q, dtype=float)
        n_steps = command_q.shape[0] if n_steps is None else n_steps
        targets = command_q[None, :n_steps]
        ticks = np.arange(targets.shape[1], dtype=np.int64)[None, :]
    tv = None if command_v is None else np.asarray(command_v, dtype=float)[None, :n_steps]
    P, _, _, _ = simulate_batch(limits, q0[None, :], np.zeros((1, J)), targets, ticks,
                                n_steps, dt, target_velocities=tv)
    P = P[0]
    idx = np.arange(decimation - 1, n_steps, decimation)
    t_us = np.round((idx + 1) * dt * 1e6).astype(np.int64)
    if record == "joint":
        vals = P[idx, joint]
    elif record == "joints":
        vals = P[idx]
    elif record == "ee":
        if model is None:
            raise ValueError("record='ee' needs the arm model")
        vals, _ = fk_many(model, P[idx])
    else:
        raise ValueError(f"unknown record mode {record!r}")
    return Trace("robot_reported", t_us, vals), P


@dataclass
class LatencyRig:
    """Plant motion for one latency trial; reused across channel seeds."""

    spec: SinusoidSpec = field(default_factory=SinusoidSpec)
    duration_s: float = 20.0
    model: ArmModel = field(default_factory=ArmModel)
    limits: Limits = field(default_factory=lambda: Limits.uniform(7, 2.0, 8.0))
    q_nominal: tuple = LATENCY_POSE
    dt: float = 0.001
    margin_s: float = 0.5

    def __post_init__(self):
        n = int(round(self.duration_s / self.dt))
        cq, cv = sinusoid_command(self.spec, self.q_nominal, n, self.dt)
        self.robot, P = run_plant(self.limits, self.q_nominal, cq, cv, dt=self.dt,
                                  record="joint", joint=self.spec.axis)
        pos, _ = fk_many(self.model, P)
        # the hand truth starts at t=0 in the initial pose
        pos0, _ = fk_many(self.model, np.asarray(self.q_nominal, dtype=float)[None, :])
        self.hand = Trace("ground_truth", np.concatenate([[0], self.robot.t_us]),
                          np.vstack([pos0, pos]))

    def tracker(self, cfg: TrackerChannelConfig) -> Trace:
        return track(self.hand, cfg, self.spec.start_time_s,
                     start_s=self.margin_s, stop_s=self.duration_s - self.margin_s)

    def tracker_angle(self, cfg: TrackerChannelConfig) -> Trace:
        return azimuth(self.tracker(cfg))


def azimuth(trace: Trace) -> Trace:
    """Angle of a position trace about the base z axis (joint-1 equivalent)."""
    v = trace.values
    return Trace(trace.source, trace.t_us, np.arctan2(v[:, 1], v[:, 0]))


def static_points(n: int, rng: np.random.Generator,
                  lo=(0.35, -0.3, 0.3), hi=(0.7, 0.3, 0.9)) -> np.ndarray:
    """Static replica-hand positions spread over the frontal workspace."""
    return rng.uniform(lo, hi, size=(n, 3))


def tracked_static(points: np.ndarray, sigma_m: float, rng: np.random.Generator) -> np.ndarray:
    return points + rng.normal(0.0, sigma_m, points.shape)


def _fmt(x: float) -> str:
    return repr(float(x))


def write_traces(path, traces) -> None:
    """Long-format CSV: ``source,timestamp_us,v0..vn`` (short rows padded empty)."""
    traces = list(traces)
    width = max((tr.values.shape[1] for tr in traces), default=1)
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["source", "timestamp_us"] + [f"v{i}" for i in range(width)])
        for tr in traces:
            pad = [""] * (width - tr.values.shape[1])
            for ts, row in zip(tr.t_us, tr.values):
                w.writerow([tr.source, int(ts)] + [_fmt(x) for x in row] + pad)


def read_traces(path) -> dict[str, Trace]:
    rows: dict[str, tuple[list, list]] = {}
    with Path(path).open(newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if header[:2] != ["source", "timestamp_us"]:
            raise ValueError(f"{path}: not a trace file")
        for rec in r:
            ts, vals = rows.setdefault(rec[0], ([], []))
            ts.append(int(rec[1]))
            vals.append([float(x) for x in rec[2:] if x != ""])
    return {src: Trace(src, np.array(ts, dtype=np.int64), np.array(vals))
            for src, (ts, vals) in rows.items()}
