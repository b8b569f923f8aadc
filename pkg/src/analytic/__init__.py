from .protocol import (
    CompleteProtocol,
    RuntimeClass,
    end_time,
    r_star_analytic,
    success_probability,
    success_probability_rate,
    analytic_control,
    control_scheme,
    feedback_contracted_rhs,
    feedback_cartesian_rhs,
    initial_cartesian,
    integrate_protocol,
    protocol_peak,
    runtime_class,
    minimal_padding,
    pad_unmarked,
    linear_regime_peak,
)
from .perturbation import PerturbationSpec, ErrorScanRow, perturbed_error, timing_error, error_scan

__all__ = [
    'CompleteProtocol', 'RuntimeClass', 'end_time', 'r_star_analytic',
    'success_probability', 'success_probability_rate', 'analytic_control', 'control_scheme',
    'feedback_contracted_rhs', 'feedback_cartesian_rhs', 'initial_cartesian',
    'integrate_protocol', 'protocol_peak', 'runtime_class', 'minimal_padding',
    'pad_unmarked', 'linear_regime_peak',
    'PerturbationSpec', 'ErrorScanRow', 'perturbed_error', 'timing_error', 'error_scan',
]
