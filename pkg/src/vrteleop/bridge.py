"""Teleoperation controller: hand pose in, joint state out at 1 kHz.

Per tick: take the newest hand sample from the mailbox, gate it for
freshness, map it into the robot frame (scaled about ``scale_origin``),
extrapolate it over the prediction horizon, solve IK and retarget the
trajectory generator; then step the generator and emit a joint-state
message. Failures never escape a tick, they are counted in ``BridgeStatus``.
"""
from __future__ import annotations

import collections
import enum
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import IkError, NoData
from .geometry import Pose, Quat, RigidTransform
from .kinematics import ELBOW_DOWN, ArmModel, Branch, forward_kinematics, inverse_kinematics
from .trajgen import Generator, KinState, Limits, Target
from .wire import GateState, HandSample, JointStateMsg, Mailbox, Verdict

log = logging.getLogger(__name__)

DEFAULT_SCALE = 2.0
DEFAULT_HORIZON_S = 0.0278
HISTORY_LEN = 30
STALL_TIMEOUT_S = 0.05


@dataclass(frozen=True)
class MappingConfig:
    calibration: RigidTransform = field(default_factory=RigidTransform)
    scale: float = DEFAULT_SCALE
    scale_origin: tuple[float, float, float] = (0.0, 0.0, 0.340)

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        object.__setattr__(self, "scale_origin", tuple(float(v) for v in self.scale_origin))


class PredictMode(enum.Enum):
    OFF = "off"
    CONSTANT_VELOCITY = "constant-velocity"
    ALPHA_BETA = "alpha-beta"


@dataclass(frozen=True)
class PredictorConfig:
    horizon_s: float = DEFAULT_HORIZON_S
    mode: PredictMode = PredictMode.ALPHA_BETA
    alpha: float = 0.5
    beta: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "mode", PredictMode(self.mode))
        if self.horizon_s < 0:
            raise ValueError("horizon must be non-negative")
        if self.mode is PredictMode.ALPHA_BETA and not (0 < self.alpha <= 1 and 0 < self.beta <= 2):
            raise ValueError("alpha-beta gains need 0 < alpha <= 1 and 0 < beta <= 2")


def map_pose(hand: Pose, cfg: MappingConfig) -> Pose:
    """Headset-frame hand pose to robot-frame target; scales position only."""
    origin = np.array(cfg.scale_origin)
    p = cfg.calibration.apply(hand.position)
    return Pose(origin + cfg.scale * (p - origin), cfg.calibration.rotation * hand.orientation)


def _extrapolate_rotation(q_prev: Quat, q_new: Quat, dt: float, horizon: float) -> Quat:
    if dt <= 0 or horizon == 0:
        return q_new
    delta = q_new * q_prev.conj()
    return delta.power(horizon / dt) * q_new


class AlphaBeta:
    """Recursive alpha-beta tracker on 3-D position.

    The velocity is seeded from the first two samples, so constant-velocity
    input is tracked exactly from the second sample on.
    """

    def __init__(self, alpha: float = 0.5, beta: float = 0.1):
        self.alpha, self.beta = alpha, beta
        self.t_us: int | None = None
        self.x: np.ndarray | None = None
        self.v = np.zeros(3)
        self.n = 0

    def update(self, t_us: int, z) -> None:
        z = np.asarray(z, dtype=float)
        if self.x is None:
            self.t_us, self.x, self.n = t_us, z.copy(), 1
            return
        dt = (t_us - self.t_us) * 1e-6
        if dt <= 0:
            return
        if self.n == 1:
            self.v = (z - self.x) / dt
            self.x = z.copy()
        else:
            xp = self.x + self.v * dt
            r = z - xp
            self.x = xp + self.alpha * r
            self.v = self.v + (self.beta / dt) * r
        self.t_us = t_us
        self.n += 1

    def predict(self, horizon_s: float) -> np.ndarray:
        return self.x + self.v * horizon_s


def _predict_pose(history, horizon_s: float, mode: PredictMode, position) -> Pose:
    newest, prev = history[-1], history[-2]
    dt_last = (newest.timestamp_us - prev.timestamp_us) * 1e-6
    rot = _extrapolate_rotation(prev.pose.orientation, newest.pose.orientation, dt_last, horizon_s)
    return Pose(position, rot)


def predict(history, horizon_s: float, mode=PredictMode.CONSTANT_VELOCITY,
            alpha: float = 0.5, beta: float = 0.1) -> Pose:
    """Extrapolate the newest pose ``horizon_s`` past its timestamp.

    ``constant-velocity`` uses the last two samples. ``alpha-beta`` runs the
    tracker over the whole history. Orientation is extrapolated from the
    last relative rotation in both.
    """
    history = list(history)
    if not history:
        raise NoData("prediction needs at least one sample")
    mode = PredictMode(mode)
    newest = history[-1]
    if mode is PredictMode.OFF or horizon_s == 0 or len(history) < 2:
        return newest.pose
    prev = history[-2]
    dt_last = (newest.timestamp_us - prev.timestamp_us) * 1e-6
    if dt_last <= 0:
        return newest.pose
    if mode is PredictMode.CONSTANT_VELOCITY:
        vel = (newest.pose.p - prev.pose.p) / dt_last
        pos = newest.pose.p + vel * horizon_s
    else:
        f = AlphaBeta(alpha, beta)
        for h in history:
            f.update(h.timestamp_us, h.pose.position)
        pos = f.predict(horizon_s)
    return _predict_pose(history, horizon_s, mode, pos)


@dataclass
class BridgeStatus:
    last_hand_seq: int | None = None
    ticks_run: int = 0
    ik_failures: int = 0
    stale_drops: int = 0
    reordered_drops: int = 0
    targets_set: int = 0
    limit_holds: int = 0
    stall_brakes: int = 0
    current_joint_state: KinState | None = None


class Bridge:
    """The 1 kHz control loop object; sim and UDP modes share it unchanged."""

    def __init__(self, model: ArmModel, limits: Limits, initial_q, mapping: MappingConfig | None = None,
                 predictor: PredictorConfig | None = None, dt: float = 0.001,
                 max_age_us: int | None = 100_000, align_clocks: bool = False,
                 arm_angle: float = 0.0, branch: Branch = ELBOW_DOWN,
                 velocity_feedforward: bool = True):
        self.model = model
        self.mapping = mapping or MappingConfig(scale_origin=(0.0, 0.0, model.d_bs))
        self.predictor = predictor or PredictorConfig()
        self.dt = dt
        self.arm_angle = arm_angle
        self.branch = branch
        self.generator = Generator(limits, KinState.at_rest(initial_q))
        self.mailbox = Mailbox()
        self.gate = GateState(max_age_us, align_clocks=align_clocks)
        self.history: collections.deque[HandSample] = collections.deque(maxlen=HISTORY_LEN)
        # persistent filter: re-running over a short window would restart it
        self.filter = AlphaBeta(self.predictor.alpha, self.predictor.beta)
        self.status = BridgeStatus(current_joint_state=self.generator.state)
        self.velocity_feedforward = velocity_feedforward
        self.last_command: Pose | None = None
        self._clock_us = 0
        self._last_solution: tuple[int, np.ndarray] | None = None
        self._last_accept_us: int | None = None
        # soft limits: a target this far inside the hard limits can be
        # overshot by at most the braking distance without leaving them
        self.margin = limits.vmax**2 / (2.0 * limits.amax)
        self.soft_lower = model.lower + self.margin
        self.soft_upper = model.upper - self.margin

    def submit(self, sample: HandSample) -> None:
        """Receiver side: hand a decoded sample to the control loop."""
        self.mailbox.put(sample)

    def commanded_pose(self) -> Pose:
        p = self.predictor
        if p.mode is not PredictMode.ALPHA_BETA or p.horizon_s == 0 or len(self.history) < 2:
            return predict(self.history, p.horizon_s, p.mode, p.alpha, p.beta)
        return _predict_pose(self.history, p.horizon_s, p.mode, self.filter.predict(p.horizon_s))

    def _accept(self, sample: HandSample, now_us: int) -> bool:
        verdict = self.gate.admit(sample.seq, sample.timestamp_us, now_us)
        if verdict is Verdict.DROP_STALE:
            self.status.stale_drops += 1
            return False
        if verdict is Verdict.DROP_REORDERED:
            self.status.reordered_drops += 1
            return False
        mapped = HandSample(sample.seq, sample.timestamp_us,
                            map_pose(sample.pose, self.mapping), sample.confidence)
        self.history.append(mapped)
        self.filter.update(mapped.timestamp_us, mapped.pose.position)
        self.status.last_hand_seq = sample.seq
        return True

    def _target_velocity(self, sample: HandSample, q: np.ndarray) -> np.ndarray | None:
        """Joint velocity implied by the last two IK solutions, clipped to the limits.

        Without it every 90 Hz target would be a stop point and the arm would
        brake between samples. A joint keeps its feed-forward only if coasting
        for the stall timeout and then braking stays inside the joint limits.
        """
        prev, self._last_solution = self._last_solution, (sample.timestamp_us, q)
        if not self.velocity_feedforward or prev is None:
            return None
        dt = (sample.timestamp_us - prev[0]) * 1e-6
        if dt <= 0:
            return None
        lim = self.generator.limits
        v = np.clip((q - prev[1]) / dt, -lim.vmax, lim.vmax)
        reach = q + v * STALL_TIMEOUT_S + v * np.abs(v) / (2.0 * lim.amax)
        v[(reach < self.model.lower) | (reach > self.model.upper)] = 0.0
        return v

    def _brake_if_stalled(self, now_us: int) -> None:
        """Stop coasting on the last feed-forward velocity once input dries up."""
        target = self.generator.target
        if self._last_accept_us is None or not np.any(target.velocity):
            return
        if (now_us - self._last_accept_us) * 1e-6 < STALL_TIMEOUT_S:
            return
        st = self.generator.state
        stop = st.position + st.velocity * np.abs(st.velocity) / (2.0 * self.generator.limits.amax)
        self.generator.set_target(Target(np.clip(stop, self.model.lower, self.model.upper)))
        self.status.stall_brakes += 1

    def tick(self, now_us: int | None = None, dt: float | None = None) -> JointStateMsg:
        dt = self.dt if dt is None else dt
        if now_us is None:
            now_us = self._clock_us
        sample = self.mailbox.take()
        if sample is not None and self._accept(sample, now_us):
            self._last_accept_us = now_us
            try:
                cmd = self.commanded_pose()
                sol = inverse_kinematics(self.model, cmd, self.arm_angle, self.branch)
            except (IkError, ValueError) as exc:
                self.status.ik_failures += 1
                log.debug("holding previous target: %s", exc)
            else:
                q = sol.joints
                if np.any(q < self.soft_lower) or np.any(q > self.soft_upper):
                    self.status.limit_holds += 1
                    log.debug("holding previous target: solution within braking margin of a limit")
                else:
                    self.last_command = cmd
                    self.generator.set_target(Target(q, self._target_velocity(sample, q)))
                    self.status.targets_set += 1
        else:
            self._brake_if_stalled(now_us)
        state, _ = self.generator.step(dt)
        self.status.ticks_run += 1
        self.status.current_joint_state = state
        self._clock_us = now_us + int(round(dt * 1e6))
        return JointStateMsg(self.status.ticks_run & 0xFFFFFFFF, now_us,
                             state.position, state.velocity)

    def end_effector(self) -> Pose:
        return forward_kinematics(self.model, self.generator.state.position)


def control_tick(bridge: Bridge, now_us: int | None = None, dt: float = 0.001) -> JointStateMsg:
    return bridge.tick(now_us, dt)
