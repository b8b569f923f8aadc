from .bspline import BSplineControl, eval_bspline, clamped_uniform_knots
from .pmp import (
    Costates,
    pmp_hamiltonian,
    costate_rhs,
    control_gradient,
    optimality_residual,
    rhs_state_costate,
)
from .problem import (
    OptimizationProblem,
    CandidateEvaluation,
    zeta_assignments,
    evaluate_candidate,
    simulate_candidate,
    marked_probability,
    cycle_example_problem,
)
from .optimizer import (
    DifferentialEvolution,
    DEResult,
    OptimizationResult,
    CostateReport,
    optimize,
    split_budget,
    costate_diagnostics,
)

__all__ = [
    'BSplineControl', 'eval_bspline', 'clamped_uniform_knots',
    'Costates', 'pmp_hamiltonian', 'costate_rhs', 'control_gradient',
    'optimality_residual', 'rhs_state_costate',
    'OptimizationProblem', 'CandidateEvaluation', 'zeta_assignments',
    'evaluate_candidate', 'simulate_candidate', 'marked_probability', 'cycle_example_problem',
    'DifferentialEvolution', 'DEResult', 'OptimizationResult', 'CostateReport',
    'optimize', 'split_budget', 'costate_diagnostics',
]
