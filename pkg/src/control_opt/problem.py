"""Direct optimal-control problem on a shell-regular graph"""
import itertools
from dataclasses import dataclass, field
from functools import partial
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from config.settings import settings
from dynamics.equations import jac_quotient, rhs_quotient
from dynamics.models import ControlScheme, ModelParams
from dynamics.state import initial_state
from graphs.builders import build_cycle
from graphs.models import ShellDescriptor
from graphs.reduction import shell_descriptor
from integrate.peaks import PeakReport, find_first_peak
from integrate.radau import IntegratorConfig, Trajectory, integrate
from utils.errors import ConfigError, DomainError, IntegrationError, PolarSingularityError
from .bspline import BSplineControl

OBJECTIVES = ("terminal", "first_peak")

# initial phase held at zero; the global phase is not observable
REFERENCE_SHELL = 1

RECENT_TIMES = 32


def zeta_assignments(values: Sequence[int], n_shells: int, tie_unmarked: bool = True) -> List[Tuple[int, ...]]:
    """
    Discrete search set of per-shell exponents

    tie_unmarked=True gives one exponent to the marked shell and one shared
    by all unmarked shells.
    """
    values = tuple(int(v) for v in values)
    if not values:
        raise ConfigError("need at least one nonlinearity exponent")
    if tie_unmarked:
        return [(a,) + (b,) * (n_shells - 1) for a in values for b in values]
    return list(itertools.product(values, repeat=n_shells))


@dataclass
class OptimizationProblem:
    """
    Args:
        shells: Shell description of the graph around its marked node
        zeta_values: Exponents the discrete search draws from
        tie_unmarked: Share one exponent across unmarked shells
        spline_points: Cubic B-spline control points per controlled shell
        bound: Largest allowed |control point|
        controlled_shells: Shells carrying a control (None = all)
        free_phases: Shells whose initial phase is optimized (None = all but shell 1)
        horizon: Fixed t_f, or None to optimize it within horizon_range
        objective: "terminal" for r_0^2(t_f), "first_peak" for the first maximum of r_0^2
        gamma: Coupling constant of the Laplacian term
    """
    shells: ShellDescriptor
    zeta_values: Tuple[int, ...] = (1, 2)
    tie_unmarked: bool = True
    spline_points: int = field(default_factory=lambda: settings.optimizer.spline_points)
    bound: float = field(default_factory=lambda: settings.optimizer.bound)
    controlled_shells: Optional[Tuple[int, ...]] = None
    free_phases: Optional[Tuple[int, ...]] = None
    horizon: Optional[float] = None
    horizon_range: Tuple[float, float] = field(
        default_factory=lambda: (settings.optimizer.horizon_min, settings.optimizer.horizon_max))
    objective: str = "terminal"
    gamma: float = 1.0
    cfg: IntegratorConfig = field(default_factory=IntegratorConfig.optimization)

    def __post_init__(self):
        size = self.shells.d + 1
        if self.controlled_shells is None:
            self.controlled_shells = tuple(range(size))
        if self.free_phases is None:
            self.free_phases = tuple(i for i in range(size) if i != REFERENCE_SHELL)
        if self.objective not in OBJECTIVES:
            raise ConfigError(f"objective must be one of {OBJECTIVES}, got '{self.objective}'")
        bad = [i for i in (*self.controlled_shells, *self.free_phases) if not 0 <= i < size]
        if bad:
            raise ConfigError(f"shell indices {bad} outside 0..{size - 1}")
        lo, hi = self.horizon_range
        if self.horizon is None and not 0 < lo < hi:
            raise ConfigError(f"invalid horizon range {self.horizon_range}")
        if self.horizon is not None and self.horizon <= 0:
            raise ConfigError(f"horizon must be positive, got {self.horizon}")

    @property
    def n_shells(self) -> int:
        return self.shells.d + 1

    @property
    def params(self) -> ModelParams:
        return ModelParams.direct(self.gamma, self.shells.n, 1)

    @property
    def n_spline(self) -> int:
        return self.spline_points * len(self.controlled_shells)

    @property
    def dimension(self) -> int:
        return self.n_spline + len(self.free_phases) + (1 if self.horizon is None else 0)

    def bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        lower = [-self.bound] * self.n_spline + [-np.pi] * len(self.free_phases)
        upper = [self.bound] * self.n_spline + [np.pi] * len(self.free_phases)
        if self.horizon is None:
            lower.append(self.horizon_range[0])
            upper.append(self.horizon_range[1])
        return np.array(lower), np.array(upper)

    def zeta_grid(self) -> List[Tuple[int, ...]]:
        return zeta_assignments(self.zeta_values, self.n_shells, self.tie_unmarked)

    def in_bounds(self, parameters: np.ndarray) -> bool:
        lower, upper = self.bounds()
        return len(parameters) == self.dimension and bool(np.all(parameters >= lower) and np.all(parameters <= upper))

    def decode(self, parameters: np.ndarray) -> Tuple[BSplineControl, np.ndarray, float]:
        """Split a flat vector into (spline, initial phases, horizon)"""
        parameters = np.asarray(parameters, dtype=float)
        if len(parameters) != self.dimension:
            raise DomainError(f"expected {self.dimension} parameters, got {len(parameters)}")
        points = parameters[:self.n_spline].reshape(self.spline_points, len(self.controlled_shells))
        offset = self.n_spline
        free = parameters[offset:offset + len(self.free_phases)]
        phases = np.zeros(self.n_shells)
        # phases live in (-pi, pi]
        phases[list(self.free_phases)] = np.where(free <= -np.pi, free + 2 * np.pi, free)
        horizon = self.horizon if self.horizon is not None else float(parameters[-1])
        return BSplineControl(control_points=points, horizon=horizon, bound=self.bound), phases, horizon

    def encode(self, points: np.ndarray, phases: np.ndarray, horizon: Optional[float] = None) -> np.ndarray:
        """Inverse of decode; `phases` holds one entry per shell"""
        parts = [np.asarray(points, dtype=float).reshape(-1), np.asarray(phases, dtype=float)[list(self.free_phases)]]
        if self.horizon is None:
            parts.append(np.array([horizon]))
        return np.concatenate(parts)

    def scheme(self, zeta: Sequence[int], spline: BSplineControl) -> ControlScheme:
        controlled = np.array(self.controlled_shells)
        size = self.n_shells
        horizon = spline.horizon

        # Newton revisits the same stage times several times per step
        recent: Dict[float, np.ndarray] = {}

        def signal(t: float) -> np.ndarray:
            u = recent.get(t)
            if u is None:
                if len(recent) >= RECENT_TIMES:
                    recent.clear()
                u = np.zeros(size)
                u[controlled] = spline(min(max(t, 0.0), horizon))
                u.flags.writeable = False
                recent[t] = u
            return u

        return ControlScheme(zeta=np.asarray(zeta), signal=signal, label="spline")

    def initial_vector(self, phases: np.ndarray) -> np.ndarray:
        radii = initial_state(self.shells).radii
        x = radii * np.exp(1j * phases)
        return np.concatenate([x.real, x.imag])


@dataclass
class CandidateEvaluation:
    objective: float
    terminal_probability: float
    feasible: bool = True
    message: str = "ok"
    peak: Optional[PeakReport] = None
    trajectory: Optional[Trajectory] = field(default=None, repr=False)


def marked_probability(y: np.ndarray, size: int) -> float:
    """|x_0|^2 of a Cartesian shell vector; shell 0 is the single marked node"""
    return float(y[0] ** 2 + y[size] ** 2)


def simulate_candidate(
    problem: OptimizationProblem,
    parameters: np.ndarray,
    zeta: Sequence[int],
    cfg: Optional[IntegratorConfig] = None,
) -> Trajectory:
    """Integrate the Cartesian shell system for one candidate"""
    spline, phases, horizon = problem.decode(parameters)
    system = dict(scheme=problem.scheme(zeta, spline), gamma=problem.gamma, q=problem.shells.quotient_laplacian())
    return integrate(
        partial(rhs_quotient, **system), problem.initial_vector(phases), 0.0, horizon, cfg or problem.cfg,
        jac=partial(jac_quotient, **system),
    )


def evaluate_candidate(
    problem: OptimizationProblem,
    parameters: np.ndarray,
    zeta: Sequence[int],
    with_peak: bool = False,
    keep_trajectory: bool = False,
) -> CandidateEvaluation:
    """
    Objective of one candidate; never raises

    Out-of-bounds parameters and failed integrations come back infeasible
    with objective 0.
    """
    parameters = np.asarray(parameters, dtype=float)
    if not problem.in_bounds(parameters):
        return CandidateEvaluation(objective=0.0, terminal_probability=0.0, feasible=False, message="out of bounds")

    try:
        traj = simulate_candidate(problem, parameters, zeta)
    except (IntegrationError, DomainError, PolarSingularityError) as e:
        logger.debug(f"Candidate with zeta={tuple(zeta)} infeasible: {e}")
        return CandidateEvaluation(objective=0.0, terminal_probability=0.0, feasible=False, message=str(e))

    size = problem.n_shells
    terminal = marked_probability(traj.final, size)
    peak = None
    if with_peak or problem.objective == "first_peak":
        peak = find_first_peak(traj, lambda y: marked_probability(y, size))

    objective = terminal if problem.objective == "terminal" else peak.value
    return CandidateEvaluation(
        objective=objective,
        terminal_probability=terminal,
        peak=peak,
        trajectory=traj if keep_trajectory else None,
    )


def cycle_example_problem(cfg: Optional[IntegratorConfig] = None) -> OptimizationProblem:
    """Six-node cycle: 5 points per shell, bound 20, zeta in {1, 2}, t_f in [0.1, 10], gamma = 1"""
    shells = shell_descriptor(build_cycle(6, {0}))
    return OptimizationProblem(
        shells=shells,
        zeta_values=(1, 2),
        tie_unmarked=True,
        spline_points=5,
        bound=20.0,
        horizon=None,
        horizon_range=(0.1, 10.0),
        gamma=1.0,
        cfg=cfg or IntegratorConfig.optimization(),
    )
