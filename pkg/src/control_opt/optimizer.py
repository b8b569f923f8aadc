"""Derivative-free search: ζ assignments outside, differential evolution inside"""
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from config.settings import settings
from dynamics.equations import cartesian_to_polar
from integrate.radau import IntegratorConfig, integrate
from utils.errors import DnlseError
from .pmp import optimality_residual, rhs_state_costate
from .problem import CandidateEvaluation, OptimizationProblem, evaluate_candidate, simulate_candidate

# third word of the entropy tuple marking restart draws
RESTART_STREAM = 2 ** 31 - 1


@dataclass
class DEResult:
    x: np.ndarray
    fun: float
    nfev: int
    generations: int
    restarts: int
    history: List[Tuple[int, float]] = field(default_factory=list)


class DifferentialEvolution:
    """
    rand/1/bin differential evolution, maximizing

    Every trial vector draws from its own generator seeded with
    (seed, stream, generation, candidate), so the search never depends on
    evaluation order and a larger budget only extends the same sequence.

    Args:
        objective: Function to maximize
        lower: Lower bounds per coordinate
        upper: Upper bounds per coordinate
        population_size: Individuals per generation (default max(20, 2 * dim))
        crossover: Binomial crossover rate
        f_range: Mutation factor drawn uniformly per trial vector
        seed: Base seed
        stream: Extra seed word separating independent runs
        collapse_tol: Population fitness spread that triggers a restart
    """

    def __init__(
        self,
        objective: Callable[[np.ndarray], float],
        lower: np.ndarray,
        upper: np.ndarray,
        population_size: Optional[int] = None,
        crossover: float = 0.9,
        f_range: Tuple[float, float] = (0.5, 1.0),
        seed: int = 0,
        stream: int = 0,
        collapse_tol: float = 1e-10,
    ):
        self.objective = objective
        self.lower = np.asarray(lower, dtype=float)
        self.upper = np.asarray(upper, dtype=float)
        self.dim = len(self.lower)
        self.population_size = max(4, population_size or max(20, 2 * self.dim))
        self.crossover = crossover
        self.f_range = f_range
        self.seed = seed
        self.stream = stream
        self.collapse_tol = collapse_tol

    def _rng(self, generation: int, candidate: int) -> np.random.Generator:
        return np.random.default_rng([self.seed, self.stream, generation, candidate])

    def _random_population(self, generation: int, word: int, size: int) -> np.ndarray:
        rng = self._rng(generation, word)
        return self.lower + (self.upper - self.lower) * rng.random((size, self.dim))

    def _trial(self, population: np.ndarray, target: int, rng: np.random.Generator) -> np.ndarray:
        others = [i for i in range(len(population)) if i != target]
        a, b, c = rng.choice(others, size=3, replace=False)
        factor = rng.uniform(*self.f_range)
        mutant = population[a] + factor * (population[b] - population[c])

        mask = rng.random(self.dim) < self.crossover
        mask[rng.integers(self.dim)] = True
        trial = np.where(mask, mutant, population[target])

        parent = population[target]
        trial = np.where(trial < self.lower, (self.lower + parent) / 2, trial)
        trial = np.where(trial > self.upper, (self.upper + parent) / 2, trial)
        return trial

    def run(self, budget: int) -> DEResult:
        if budget < 1:
            raise ValueError(f"budget must be positive, got {budget}")

        size = self.population_size
        population = self._random_population(0, 0, size)
        fitness = np.full(size, -np.inf)
        nfev = 0
        best_x, best_f = population[0].copy(), -np.inf
        history: List[Tuple[int, float]] = []

        for i in range(size):
            if nfev >= budget:
                break
            fitness[i] = self.objective(population[i])
            nfev += 1
            if fitness[i] > best_f:
                best_x, best_f = population[i].copy(), fitness[i]
                history.append((nfev, best_f))

        generation, restarts = 0, 0
        while nfev < budget:
            generation += 1
            for target in range(size):
                if nfev >= budget:
                    break
                trial = self._trial(population, target, self._rng(generation, target + 1))
                value = self.objective(trial)
                nfev += 1
                if value >= fitness[target]:
                    population[target], fitness[target] = trial, value
                if value > best_f:
                    best_x, best_f = trial.copy(), value
                    history.append((nfev, best_f))

            finite = fitness[np.isfinite(fitness)]
            if len(finite) == size and np.ptp(finite) <= self.collapse_tol * (abs(best_f) + self.collapse_tol):
                restarts += 1
                keep = int(np.argmax(fitness))
                fresh = self._random_population(generation, RESTART_STREAM, size)
                fresh[keep] = population[keep]
                population = fresh
                fitness = np.where(np.arange(size) == keep, fitness[keep], -np.inf)
                logger.debug(f"DE stream {self.stream}: population collapsed at generation {generation}, restarting")

        return DEResult(x=best_x, fun=float(best_f), nfev=nfev, generations=generation, restarts=restarts, history=history)


@dataclass
class OptimizationResult:
    zeta: Tuple[int, ...]
    parameters: np.ndarray
    evaluation: CandidateEvaluation
    evaluations: int
    per_assignment: List[Tuple[Tuple[int, ...], float]]

    @property
    def objective(self) -> float:
        return self.evaluation.objective


def split_budget(budget: int, parts: int) -> List[int]:
    """Even split, the remainder handed out one each from the front"""
    return [budget // parts + (1 if i < budget % parts else 0) for i in range(parts)]


def optimize(
    problem: OptimizationProblem,
    budget: Optional[int] = None,
    seed: Optional[int] = None,
    population_size: Optional[int] = None,
) -> OptimizationResult:
    """
    Exhaustive search over ζ assignments with a seeded differential
    evolution on the continuous parameters of each

    The best candidate is re-evaluated with its trajectory and first-peak
    report attached.
    """
    budget = settings.optimizer.budget if budget is None else budget
    seed = settings.optimizer.seed if seed is None else seed
    population_size = population_size or settings.optimizer.population_size
    if budget < 1:
        raise ValueError(f"budget must be positive, got {budget}")

    grid = problem.zeta_grid()
    shares = split_budget(budget, len(grid))
    lower, upper = problem.bounds()
    logger.info(
        f"Optimizing {len(grid)} zeta assignments x {problem.dimension} parameters, "
        f"budget {budget}, seed {seed}"
    )

    per_assignment = []
    best: Optional[Tuple[float, Tuple[int, ...], np.ndarray]] = None
    used = 0
    for stream, (zeta, share) in enumerate(zip(grid, shares)):
        if share == 0:
            continue

        def objective(x: np.ndarray, zeta=zeta) -> float:
            return evaluate_candidate(problem, x, zeta).objective

        de = DifferentialEvolution(objective, lower, upper, population_size=population_size, seed=seed, stream=stream)
        result = de.run(share)
        used += result.nfev
        per_assignment.append((zeta, result.fun))
        logger.info(
            f"zeta={zeta}: best {result.fun:.6f} after {result.nfev} evaluations "
            f"({result.generations} generations, {result.restarts} restarts)"
        )
        if best is None or result.fun > best[0]:
            best = (result.fun, zeta, result.x)

    _, zeta, x = best
    evaluation = evaluate_candidate(problem, x, zeta, with_peak=True, keep_trajectory=True)
    if evaluation.feasible:
        logger.success(
            f"Best: zeta={zeta}, objective {evaluation.objective:.6f}, r_0^2(t_f)={evaluation.terminal_probability:.6f}, "
            f"first peak {evaluation.peak.value:.6f} at t={evaluation.peak.time:.4f}"
        )
        if not evaluation.peak.interior:
            logger.warning("Best candidate has no interior maximum of r_0^2; the reported peak is an endpoint")
    else:
        logger.warning(f"No feasible candidate found: {evaluation.message}")
    return OptimizationResult(zeta=zeta, parameters=x, evaluation=evaluation, evaluations=used, per_assignment=per_assignment)


@dataclass
class CostateReport:
    times: np.ndarray
    theta_sum: np.ndarray
    residual: np.ndarray
    ok: bool = True
    message: str = "ok"

    @property
    def max_theta_sum(self) -> float:
        return float(np.max(np.abs(self.theta_sum))) if len(self.theta_sum) else float("nan")

    @property
    def max_residual(self) -> float:
        return float(np.max(np.abs(self.residual))) if len(self.residual) else float("nan")


def costate_diagnostics(
    problem: OptimizationProblem,
    parameters: np.ndarray,
    zeta: Sequence[int],
    cfg: Optional[IntegratorConfig] = None,
    samples: int = 200,
) -> CostateReport:
    """
    Integrate state and costates backward from t_f along a candidate

    Terminal costates: lambda_0 = 2 r_0(t_f), every other lambda and every
    Lambda zero. Reports sum(Lambda) and the optimality residual over time.
    """
    cfg = cfg or IntegratorConfig()
    spline, phases, horizon = problem.decode(parameters)
    scheme = problem.scheme(zeta, spline)
    size = problem.n_shells

    try:
        forward = simulate_candidate(problem, parameters, zeta, cfg)
        polar_end = cartesian_to_polar(forward.final)
        lam = np.zeros(size)
        lam[0] = 2 * polar_end[0]
        z_end = np.concatenate([polar_end, lam, np.zeros(size)])

        params = problem.params
        backward = integrate(
            lambda s, z: -rhs_state_costate(horizon - s, z, scheme, problem.shells, params),
            z_end, 0.0, horizon, cfg,
        )
    except DnlseError as e:
        logger.warning(f"Costate diagnostics failed: {e}")
        return CostateReport(times=np.array([]), theta_sum=np.array([]), residual=np.array([]), ok=False, message=str(e))

    grid = np.linspace(0.0, horizon, samples)
    z = backward(grid)
    times = horizon - grid
    theta_sum = z[:, 3 * size:].sum(axis=1)
    residual = np.array([optimality_residual(row[:2 * size], row[2 * size:], scheme) for row in z])
    report = CostateReport(times=times[::-1], theta_sum=theta_sum[::-1], residual=residual[::-1])
    logger.info(f"Costates: max |sum Lambda| = {report.max_theta_sum:.3e}, max |residual| = {report.max_residual:.3e}")
    return report

