"""Simulated VR hand-tracking teleoperation of a 7-DOF arm.

Modules: ``geometry`` (quaternions, poses, transforms), ``kinematics``
(SRS arm FK/IK), ``trajgen`` (online trajectory generation), ``wire``
(datagram codec and UDP transport), ``bridge`` (the 1 kHz controller),
``sim`` (rig stand-ins), ``analysis`` (latency and accuracy statistics)
and ``cli``.
"""
from .errors import VrTeleopError
from .geometry import Pose, Quat, RigidTransform, quat_from_axis_angle
from .kinematics import ArmModel, Branch, forward_kinematics, inverse_kinematics
from .trajgen import Generator, KinState, Limits, Target

__version__ = "0.1.0"

__all__ = [
    "ArmModel", "Branch", "Generator", "KinState", "Limits", "Pose", "Quat", "RigidTransform",
    "Target", "VrTeleopError", "forward_kinematics", "inverse_kinematics", "quat_from_axis_angle",
]
