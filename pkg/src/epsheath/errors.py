"""Exception hierarchy shared by the solvers and the CLI."""


class EPSHError(Exception):
    """Base class for every error raised by the package."""


class ConfigError(EPSHError, ValueError):
    """Invalid or missing configuration data."""


class InvalidParameters(ConfigError):
    pass


class SolverError(EPSHError, RuntimeError):
    """A numerical procedure could not deliver its contract."""


class TemperatureNonpositive(SolverError):
    pass


class SupersonicLost(SolverError):
    pass


class BohmViolated(SolverError):
    pass


class BranchExhausted(SolverError):
    pass


class NonMonotone(SolverError):
    pass


class WindowDegenerate(SolverError):
    pass


class WindowTooShort(SolverError):
    pass


class OrderUnsupported(SolverError, ValueError):
    pass


class NewtonDiverged(SolverError):
    pass


class BoundsViolated(SolverError):
    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


class NotConverged(SolverError):
    pass
