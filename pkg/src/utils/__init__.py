from .logger import setup_logger
from .errors import (
    DnlseError,
    ConfigError,
    GraphError,
    ShellStructureError,
    DomainError,
    SingularCouplingError,
    PolarSingularityError,
    IntegrationError,
    StiffFailureError,
    MaxStepsError,
)

__all__ = [
    'setup_logger',
    'DnlseError',
    'ConfigError',
    'GraphError',
    'ShellStructureError',
    'DomainError',
    'SingularCouplingError',
    'PolarSingularityError',
    'IntegrationError',
    'StiffFailureError',
    'MaxStepsError',
]
