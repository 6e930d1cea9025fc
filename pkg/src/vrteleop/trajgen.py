"""Online velocity/acceleration-bounded joint trajectory generation.

Each joint follows a time-optimal accel / cruise / accel profile
(piecewise-constant acceleration). Faster joints are stretched to the
slowest joint's duration by lowering their cruise velocity, so rest-to-rest
moves arrive on the same tick. Retargeting replans from the exact current
state, which keeps position and velocity continuous.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import InvalidState, InvalidTarget
from .kernels._layout import TT

DEFAULT_VMAX = 1.0
DEFAULT_AMAX = 2.0
ARRIVAL_TOL = 1e-9  # seconds


@dataclass(frozen=True)
class Limits:
    vmax: np.ndarray
    amax: np.ndarray

    def __post_init__(self):
        vmax = np.array(self.vmax, dtype=float).ravel()
        amax = np.array(self.amax, dtype=float).ravel()
        if vmax.shape != amax.shape:
            raise ValueError("vmax and amax need one entry per joint")
        if not (np.all(vmax > 0) and np.all(amax > 0)):
            raise ValueError("limits must be strictly positive")
        if not (np.all(np.isfinite(vmax)) and np.all(np.isfinite(amax))):
            raise ValueError("limits must be finite")
        object.__setattr__(self, "vmax", vmax)
        object.__setattr__(self, "amax", amax)

    @classmethod
    def uniform(cls, n: int, vmax: float = DEFAULT_VMAX, amax: float = DEFAULT_AMAX) -> Limits:
        return cls(np.full(n, float(vmax)), np.full(n, float(amax)))

    @property
    def n(self) -> int:
        return self.vmax.size


@dataclass(frozen=True)
class KinState:
    position: np.ndarray
    velocity: np.ndarray
    acceleration: np.ndarray

    @classmethod
    def at_rest(cls, position) -> KinState:
        p = np.array(position, dtype=float)
        return cls(p, np.zeros_like(p), np.zeros_like(p))


@dataclass(frozen=True)
class Target:
    position: np.ndarray
    velocity: np.ndarray | None = None


def profile_duration(delta: float, v0: float, vmax: float, amax: float) -> float:
    """Minimum time to travel ``delta`` from velocity ``v0`` and end at rest."""
    if abs(v0) > vmax:
        raise ValueError(f"|v0|={abs(v0)} exceeds vmax={vmax}")
    prof = kernels.np.plan(np.array([[0.0]]), np.array([[v0]]), np.array([[delta]]),
                           np.zeros((1, 1)), np.array([vmax]), np.array([amax]))
    return float(prof[0, 0, TT])


class Generator:
    """Single-owner online trajectory generator.

    >>> g = make_generator(Limits.uniform(1, 1.0, 1.0), KinState.at_rest([0.0]))
    >>> _ = g.set_target(Target(np.array([1.0])))
    >>> while not g.step(0.001)[1]:
    ...     pass
    >>> round(g.time, 3)
    2.0
    """

    def __init__(self, limits: Limits, initial: KinState):
        p = np.array(initial.position, dtype=float).ravel()
        v = np.array(initial.velocity, dtype=float).ravel()
        a = np.array(initial.acceleration, dtype=float).ravel()
        if not (p.size == v.size == a.size == limits.n):
            raise InvalidState("state size does not match the limits")
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(v)) and np.all(np.isfinite(a))):
            raise InvalidState("state must be finite")
        if np.any(np.abs(v) > limits.vmax) or np.any(np.abs(a) > limits.amax):
            raise InvalidState("initial state exceeds velocity or acceleration limits")
        self.limits = limits
        self._p, self._v, self._a = p, v, a
        self.time = 0.0
        # until a target arrives, brake to rest as fast as allowed
        stop = p + v * np.abs(v) / (2.0 * limits.amax)
        self._target = Target(stop, np.zeros_like(p))
        self._plan()

    def _plan(self):
        self._prof = kernels.plan(self._p[None, :], self._v[None, :],
                                  self._target.position[None, :],
                                  self._target.velocity[None, :],
                                  self.limits.vmax, self.limits.amax)
        self._tau = 0.0

    @property
    def state(self) -> KinState:
        return KinState(self._p.copy(), self._v.copy(), self._a.copy())

    @property
    def target(self) -> Target:
        return self._target

    @property
    def remaining(self) -> float:
        """Time until the current target is reached."""
        return max(float(self._prof[0, :, TT].max()) - self._tau, 0.0)

    def set_target(self, target: Target) -> Generator:
        n = self.limits.n
        pos = np.array(target.position, dtype=float).ravel()
        vel = (np.zeros(n) if target.velocity is None
               else np.array(target.velocity, dtype=float).ravel())
        if pos.size != n or vel.size != n:
            raise InvalidTarget("target size does not match the limits")
        if not (np.all(np.isfinite(pos)) and np.all(np.isfinite(vel))):
            raise InvalidTarget("target must be finite")
        if np.any(np.abs(vel) > self.limits.vmax):
            raise InvalidTarget("target velocity exceeds vmax")
        self._target = Target(pos, vel)
        self._plan()
        return self

    def step(self, dt: float) -> tuple[KinState, bool]:
        if not (dt > 0.0 and math.isfinite(dt)):
            raise ValueError("dt must be a positive finite number")
        self._tau += dt
        self.time += dt
        p, v, a, done = kernels.sample(self._prof, np.array([self._tau]), ARRIVAL_TOL)
        self._p, self._v, self._a = p[0], v[0], a[0]
        return self.state, bool(done[0])


def make_generator(limits: Limits, initial: KinState) -> Generator:
    return Generator(limits, initial)


def set_target(g: Generator, t: Target) -> Generator:
    return g.set_target(t)


def step(g: Generator, dt: float) -> tuple[KinState, bool]:
    return g.step(dt)


def simulate_batch(limits: Limits, p0, v0, targets, ticks, n_steps: int, dt: float,
                   target_velocities=None):
    """Run many independent generators fully inside the kernel.

    ``targets`` is ``(B, K, J)``, ``ticks`` is ``(B, K)`` (ascending, -1 pads).
    Target k of row b is set right before tick ``ticks[b, k]`` is stepped.
    Returns positions, velocities, accelerations ``(B, n_steps, J)`` and the
    reached flags ``(B, n_steps)`` after each tick.
    """
    p0 = np.ascontiguousarray(np.atleast_2d(np.asarray(p0, dtype=float)))
    v0 = np.ascontiguousarray(np.atleast_2d(np.asarray(v0, dtype=float)))
    targets = np.ascontiguousarray(np.asarray(targets, dtype=float))
    tv = (np.zeros_like(targets) if target_velocities is None
          else np.ascontiguousarray(np.asarray(target_velocities, dtype=float)))
    if np.any(np.abs(tv) > limits.vmax):
        raise InvalidTarget("target velocity exceeds vmax")
    ticks = np.ascontiguousarray(np.asarray(ticks, dtype=np.int64))
    return kernels.simulate(p0, v0, targets, tv, ticks, int(n_steps), float(dt),
                            limits.vmax, limits.amax, ARRIVAL_TOL)
