"""Forward and analytic inverse kinematics of a 7-DOF SRS arm.

Joint axes alternate z, y, z, y, z, y, z along a chain that is straight up
the base z axis at q = 0. Shoulder (joints 1-3), elbow (4) and wrist (5-7)
are spherical/rotational, so the wrist center decouples from the tool
orientation and the one redundant DOF is the arm angle: the rotation of the
elbow about the shoulder-wrist line.

The arm angle is measured from the reference configuration with q3 = 0.
``extract_arm_angle`` and ``inverse_kinematics`` share that convention, so
``IK(FK(q), extract_arm_angle(q), Branch.of(q))`` returns ``q``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import JointLimitViolation, Singular, Unreachable
from .geometry import Pose, Quat, RigidTransform

N_JOINTS = 7
LIMITS_DEG = (170.0, 120.0, 170.0, 120.0, 170.0, 120.0, 175.0)
EPS_REACH = 1e-6
EPS_SINGULAR = 1e-9


def _default_limits() -> np.ndarray:
    lim = np.deg2rad(LIMITS_DEG)
    return np.stack([-lim, lim], axis=1)


@dataclass(frozen=True)
class ArmModel:
    """Link offsets (m) along the home axis, joint limits (rad) and base mounting."""

    d_bs: float = 0.340
    d_se: float = 0.400
    d_ew: float = 0.400
    d_wf: float = 0.126
    joint_limits: np.ndarray = field(default_factory=_default_limits)
    mounting: RigidTransform = field(default_factory=RigidTransform)

    def __post_init__(self):
        if min(self.d_bs, self.d_se, self.d_ew, self.d_wf) <= 0:
            raise ValueError("link offsets must be positive")
        lim = np.array(self.joint_limits, dtype=float).reshape(N_JOINTS, 2)
        if not np.all(lim[:, 0] < lim[:, 1]):
            raise ValueError("joint limits need lower < upper")
        lim.setflags(write=False)
        object.__setattr__(self, "joint_limits", lim)

    @property
    def links(self) -> np.ndarray:
        return np.array([self.d_bs, self.d_se, self.d_ew, self.d_wf])

    @property
    def reach(self) -> float:
        return self.d_bs + self.d_se + self.d_ew + self.d_wf

    @property
    def shoulder(self) -> np.ndarray:
        return np.array([0.0, 0.0, self.d_bs])

    @property
    def lower(self) -> np.ndarray:
        return self.joint_limits[:, 0]

    @property
    def upper(self) -> np.ndarray:
        return self.joint_limits[:, 1]


@dataclass(frozen=True)
class Branch:
    """Sign choices for the shoulder (q2), elbow (q4) and wrist (q6) joints.

    ``Branch()`` is the default elbow-down solution: all three positive.
    """

    shoulder: int = 1
    elbow: int = 1
    wrist: int = 1

    def __post_init__(self):
        for v in (self.shoulder, self.elbow, self.wrist):
            if v not in (1, -1):
                raise ValueError("branch signs must be +1 or -1")

    @classmethod
    def of(cls, q) -> Branch:
        q = np.asarray(q, dtype=float)
        return cls(*(1 if q[i] >= 0.0 else -1 for i in (1, 3, 5)))

    def as_array(self) -> np.ndarray:
        return np.array([self.shoulder, self.elbow, self.wrist], dtype=float)


ELBOW_DOWN = Branch(1, 1, 1)
ELBOW_UP = Branch(1, -1, 1)


@dataclass(frozen=True)
class IkSolution:
    joints: np.ndarray
    arm_angle_used: float
    branch: Branch


def _as_joints(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if q.shape != (N_JOINTS,):
        raise ValueError(f"expected {N_JOINTS} joint angles, got shape {q.shape}")
    if not np.all(np.isfinite(q)):
        raise ValueError("joint angles must be finite")
    return q


def forward_kinematics(model: ArmModel, q) -> Pose:
    """Flange pose in the arm-base frame."""
    pos, rot = kernels.fk_batch(_as_joints(q)[None, :], model.links)
    return Pose(pos[0], Quat.from_matrix(rot[0]))


def fk_many(model: ArmModel, q) -> tuple[np.ndarray, np.ndarray]:
    """Batch FK: ``(N, 7)`` joints to ``(N, 3)`` positions and ``(N, 3, 3)`` rotations."""
    q = np.ascontiguousarray(np.atleast_2d(np.asarray(q, dtype=float)))
    return kernels.fk_batch(q, model.links)


def check_limits(model: ArmModel, q) -> list[int]:
    """Indices of joints outside their (inclusive) limits; empty means ok."""
    q = _as_joints(q)
    return [int(i) for i in np.flatnonzero((q < model.lower) | (q > model.upper))]


def extract_arm_angle(model: ArmModel, q) -> float:
    psi, status = kernels.arm_angle_batch(_as_joints(q)[None, :], model.links, EPS_SINGULAR)
    if status[0] != kernels.OK:
        raise Singular("shoulder, elbow and wrist are aligned; arm angle is undefined")
    return float(psi[0])


def arm_angles(model: ArmModel, q) -> tuple[np.ndarray, np.ndarray]:
    """Batch arm-angle extraction; returns (psi, status) with NaN where singular."""
    q = np.ascontiguousarray(np.atleast_2d(np.asarray(q, dtype=float)))
    return kernels.arm_angle_batch(q, model.links, EPS_SINGULAR)


def ik_many(model: ArmModel, positions, rotations, arm_angle=0.0, branch=ELBOW_DOWN):
    """Batch IK. Returns (q, status); see ``kernels`` for status codes.

    ``arm_angle`` and ``branch`` may be scalars/one Branch or per-row arrays
    (``branch`` as an ``(N, 3)`` array of signs).
    """
    pos = np.ascontiguousarray(np.atleast_2d(np.asarray(positions, dtype=float)))
    rot = np.ascontiguousarray(np.asarray(rotations, dtype=float).reshape(-1, 3, 3))
    n = pos.shape[0]
    psi = np.ascontiguousarray(np.broadcast_to(np.asarray(arm_angle, dtype=float), (n,)))
    if isinstance(branch, Branch):
        br = np.tile(branch.as_array(), (n, 1))
    else:
        br = np.ascontiguousarray(np.asarray(branch, dtype=float).reshape(n, 3))
    return kernels.ik_batch(pos, rot, psi, br, model.links, model.lower, model.upper,
                            EPS_REACH, EPS_SINGULAR)


def inverse_kinematics(model: ArmModel, target: Pose, arm_angle: float = 0.0,
                       branch: Branch = ELBOW_DOWN) -> IkSolution:
    """Closed-form IK for the SRS arm at a given arm angle and branch.

    Raises Unreachable, Singular or JointLimitViolation.
    """
    q, status = ik_many(model, target.position, target.orientation.to_matrix(),
                        arm_angle, branch)
    code = status[0]
    if code == kernels.UNREACHABLE:
        raise Unreachable(f"target {target.position} is outside the workspace")
    if code == kernels.SINGULAR:
        raise Singular("wrist center lies on the base axis with a bent elbow")
    if code == kernels.LIMITS:
        # recompute the raw solution to report which joints exceed limits
        wide = ArmModel(model.d_bs, model.d_se, model.d_ew, model.d_wf,
                        np.tile([-np.inf, np.inf], (N_JOINTS, 1)), model.mounting)
        raw, _ = ik_many(wide, target.position, target.orientation.to_matrix(),
                         arm_angle, branch)
        bad = [int(i) for i in np.flatnonzero((raw[0] < model.lower) | (raw[0] > model.upper))]
        raise JointLimitViolation(f"solution exits joint limits at {bad}", bad)
    return IkSolution(q[0].copy(), float(arm_angle), branch)
