from .radau import IntegratorConfig, Trajectory, integrate, integrate_fixed
from .peaks import PeakReport, find_first_peak, observable_rate

__all__ = [
    'IntegratorConfig', 'Trajectory', 'integrate', 'integrate_fixed',
    'PeakReport', 'find_first_peak', 'observable_rate',
]
