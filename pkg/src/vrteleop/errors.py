"""Exception types shared across the package."""


class VrTeleopError(Exception):
    pass


class InvalidAxis(VrTeleopError, ValueError):
    pass


class IkError(VrTeleopError):
    pass


class Unreachable(IkError):
    pass


class Singular(IkError):
    pass


class JointLimitViolation(IkError):
    def __init__(self, message, indices=()):
        super().__init__(message)
        self.indices = tuple(indices)


class InvalidState(VrTeleopError, ValueError):
    pass


class InvalidTarget(VrTeleopError, ValueError):
    pass


class NoData(VrTeleopError, ValueError):
    pass


class InsufficientSpan(VrTeleopError, ValueError):
    pass


class OutOfRange(VrTeleopError, ValueError):
    pass


class ConfigError(VrTeleopError, ValueError):
    pass
