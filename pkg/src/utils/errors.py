"""Error types shared by the simulator, the optimizer and the CLI"""


class DnlseError(Exception):
    """Base class for every error raised by this package"""


class ConfigError(DnlseError, ValueError):
    """Invalid scenario file, flag or parameter"""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class GraphError(DnlseError, ValueError):
    """Invalid graph description"""


class ShellStructureError(GraphError):
    """Graph is not shell-regular around its marked node"""


class DomainError(DnlseError, ValueError):
    """Argument outside the domain where a formula is defined"""


class SingularCouplingError(DnlseError, ValueError):
    """gamma = g/(n - 2N) is undefined because n = 2N"""


class PolarSingularityError(DnlseError, ArithmeticError):
    """A radial component vanished, so its phase derivative is undefined"""


class IntegrationError(DnlseError, RuntimeError):
    """Base class for integrator failures"""


class StiffFailureError(IntegrationError):
    """Newton iteration kept failing after the step size hit its floor"""


class MaxStepsError(IntegrationError):
    """Step budget exhausted before reaching the end time"""
