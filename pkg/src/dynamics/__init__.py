from .models import SystemState, ModelParams, ControlScheme
from .equations import (
    rhs_quotient,
    jac_quotient,
    rhs_full,
    rhs_polar_quotient,
    rhs_reduced_complete,
    rhs_contracted,
    rhs_shells,
    rhs_shells_cartesian,
    probability_constraint,
    polar_to_cartesian,
    cartesian_to_polar,
    polar_velocity_to_cartesian,
)
from .state import (
    initial_state,
    initial_contracted,
    initial_reduced_complete,
    total_probability,
    total_probability_vector,
)

__all__ = [
    'SystemState', 'ModelParams', 'ControlScheme',
    'rhs_quotient', 'jac_quotient', 'rhs_full', 'rhs_polar_quotient', 'rhs_reduced_complete',
    'rhs_contracted', 'rhs_shells', 'rhs_shells_cartesian', 'probability_constraint',
    'polar_to_cartesian', 'cartesian_to_polar', 'polar_velocity_to_cartesian',
    'initial_state', 'initial_contracted', 'initial_reduced_complete',
    'total_probability', 'total_probability_vector',
]
