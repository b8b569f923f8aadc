"""
Command implementations

Each command takes a validated ScenarioConfig plus CLI overrides, runs
one pipeline and writes its artifacts. Errors propagate as DnlseError
subclasses; main.py turns them into exit codes.
"""
from functools import partial
from pathlib import Path
from typing import List, Optional

import numpy as np
from loguru import logger

from analytic.perturbation import PerturbationSpec, error_scan
from analytic.protocol import (
    CompleteProtocol,
    analytic_control,
    control_scheme,
    end_time,
    pad_unmarked,
    r_star_analytic,
    success_probability,
)
from config.scenario import ScenarioConfig
from config.settings import settings
from control_opt.bspline import BSplineControl
from control_opt.optimizer import costate_diagnostics, optimize
from control_opt.problem import OptimizationProblem
from dynamics.equations import probability_constraint, rhs_quotient
from dynamics.models import ControlScheme, ModelParams
from dynamics.state import initial_state, total_probability_vector
from graphs.builders import build_graph, load_edge_list
from graphs.models import GraphSpec
from graphs.reduction import quotient_laplacian, reduce, shell_descriptor
from integrate.radau import IntegratorConfig, Trajectory, integrate
from utils.errors import ConfigError, ShellStructureError
from .output import write_csv, write_record


def output_path(config: ScenarioConfig, command: str, out: Optional[str]) -> Path:
    if out:
        return Path(out)
    if config.output:
        return Path(config.output)
    return Path(settings.output_dir) / f"{command}.csv"


def record_path(csv_path: Path) -> Path:
    return csv_path.with_suffix(".summary")


def integrator_config(config: ScenarioConfig, tol: Optional[float], optimization: bool = False) -> IntegratorConfig:
    """Scenario tolerances, overridden by --tol (relative; absolute follows at 1e-2 of it)"""
    base = IntegratorConfig.optimization() if optimization else IntegratorConfig()
    update = {}
    if config.rel_tol is not None:
        update["rel_tol"] = config.rel_tol
    if config.abs_tol is not None:
        update["abs_tol"] = config.abs_tol
    if tol is not None:
        update["rel_tol"] = tol
        update["abs_tol"] = tol * 1e-2
    return base.model_copy(update=update)


def build_scenario_graph(config: ScenarioConfig) -> GraphSpec:
    if config.edge_list:
        return load_edge_list(config.edge_list)
    n = config.n + config.padding if config.graph == "complete" else config.n
    if config.padding and config.graph != "complete":
        raise ConfigError("padding applies to the complete graph only")
    return build_graph(config.graph, n, config.marked)


def _complete_protocol(config: ScenarioConfig) -> CompleteProtocol:
    if config.edge_list or config.graph != "complete":
        raise ConfigError("the analytic protocol needs graph=complete")
    args = dict(g=config.g, zeta_marked=config.zeta_marked, zeta_unmarked=config.zeta_unmarked)
    n_marked = len(set(config.marked))
    if config.padding:
        return pad_unmarked(config.n, n_marked, config.padding, **args)
    return CompleteProtocol(n=config.n, n_marked=n_marked, **args)


def cmd_analytic(config: ScenarioConfig, out: Optional[str] = None) -> Path:
    """Closed-form trajectory and controls of the complete-graph protocol on [0, t_f]"""
    p = _complete_protocol(config)
    t_f = end_time(p)
    times = np.linspace(0.0, t_f, config.samples)

    r_star = np.asarray(r_star_analytic(times, p))
    r = np.asarray(probability_constraint(r_star, p.n, p.n_marked))
    controls = np.array([analytic_control(t, p) for t in times])

    path = write_csv(
        output_path(config, "analytic", out),
        {
            "time": times,
            "r_star": r_star,
            "r": r,
            "probability": np.asarray(success_probability(times, p)),
            "u_star": controls[:, 1],
            "u": controls[:, 0],
        },
        command="analytic",
        config_lines=config.header_lines(),
        summary={"t_f": t_f, "kappa": p.kappa, "n": p.n, "N": p.n_marked},
    )
    logger.success(f"Analytic protocol n={p.n}, N={p.n_marked}, g={p.g}: t_f = {t_f:.9f}")
    return path


def _class_zeta(config: ScenarioConfig, marked_flag) -> np.ndarray:
    if config.zeta is not None:
        if len(config.zeta) != len(marked_flag):
            raise ConfigError(f"zeta lists {len(config.zeta)} values for {len(marked_flag)} classes")
        return np.array(config.zeta)
    return np.array([config.zeta_marked if flag else config.zeta_unmarked for flag in marked_flag])


def _class_scheme(config: ScenarioConfig, graph: GraphSpec, marked_flag, t_end: Optional[float]) -> ControlScheme:
    zeta = _class_zeta(config, marked_flag)
    size = len(marked_flag)

    if config.control == "zero":
        return ControlScheme.zero(zeta)
    if config.control == "constant":
        values = list(config.control_values)
        if len(values) == 2 and size != 2:
            values = [values[0] if flag else values[1] for flag in marked_flag]
        return ControlScheme.constant(zeta, values)
    if config.control == "analytic":
        if size != 2 or graph.n_marked * 2 >= graph.n or graph.name != "complete":
            raise ConfigError("control=analytic needs a complete graph with n > 2N")
        p = CompleteProtocol(
            n=graph.n, n_marked=graph.n_marked, g=config.g,
            zeta_marked=int(zeta[0]), zeta_unmarked=int(zeta[1]),
        )
        return control_scheme(p)

    spline = BSplineControl.from_file(config.spline_file, horizon=t_end, bound=config.bound)
    columns = 1 if spline.control_points.ndim == 1 else spline.control_points.shape[1]
    if columns != size:
        raise ConfigError(f"spline file has {columns} columns for {size} classes")

    def signal(t: float) -> np.ndarray:
        return np.atleast_1d(spline(min(max(t, 0.0), t_end)))

    return ControlScheme(zeta=zeta, signal=signal, label="spline")


def _trajectory_columns(traj: Trajectory, times: np.ndarray, scheme: ControlScheme, multiplicity: np.ndarray) -> dict:
    k = len(multiplicity)
    states = traj(times)
    radii = np.hypot(states[:, :k], states[:, k:])
    controls = np.array([scheme.values(t) for t in times])
    columns = {"time": times}
    columns.update({f"r_{i}": radii[:, i] for i in range(k)})
    columns.update({f"p_{i}": multiplicity[i] * radii[:, i] ** 2 for i in range(k)})
    columns.update({f"u_{i}": controls[:, i] for i in range(k)})
    columns["total_probability"] = total_probability_vector(states, multiplicity)
    return columns


def cmd_simulate(config: ScenarioConfig, out: Optional[str] = None, tol: Optional[float] = None) -> Path:
    """Reduced-system trajectory under the configured controls"""
    graph = build_scenario_graph(config)
    partition = reduce(graph)

    t_end = config.t_end
    if config.control == "analytic":
        t_f = end_time(CompleteProtocol(n=graph.n, n_marked=graph.n_marked, g=config.g))
        t_end = t_f if t_end is None else min(t_end, t_f)
    if t_end is None:
        raise ConfigError("t_end is required unless control=analytic")

    scheme = _class_scheme(config, graph, partition.marked_flag, t_end)
    if config.gamma is not None and config.control != "analytic":
        gamma = config.gamma
    else:
        gamma = ModelParams(g=config.g, n=graph.n, n_marked=graph.n_marked).gamma

    q = quotient_laplacian(graph, partition)
    rhs = partial(rhs_quotient, scheme=scheme, gamma=gamma, q=q)
    y0 = initial_state(partition).as_vector()
    traj = integrate(rhs, y0, 0.0, t_end, integrator_config(config, tol))

    times = np.linspace(0.0, t_end, config.samples)
    multiplicity = partition.multiplicity
    columns = _trajectory_columns(traj, times, scheme, multiplicity)
    drift = float(np.max(np.abs(total_probability_vector(traj.states, multiplicity) - 1.0)))

    path = write_csv(
        output_path(config, "simulate", out),
        columns,
        command="simulate",
        config_lines=config.header_lines(),
        summary={
            "classes": len(partition),
            "multiplicity": multiplicity,
            "gamma": gamma,
            "steps": traj.n_steps,
            "max_probability_drift": drift,
        },
    )
    logger.success(f"Simulated {graph.name} n={graph.n} on {len(partition)} classes to t={t_end:.6g} (drift {drift:.2e})")
    return path


def cmd_error_scan(config: ScenarioConfig, out: Optional[str] = None, tol: Optional[float] = None) -> Path:
    """Terminal error E(n) of the protocol under constant control offsets"""
    n_marked = len(set(config.marked))
    pert = PerturbationSpec(nu_marked=config.nu_star, nu_unmarked=config.nu)
    rows = error_scan(
        config.n_range, pert, g=config.g, n_marked=n_marked,
        cfg=integrator_config(config, tol), timing_delay=config.timing_delay,
    )

    columns = {
        "n": np.array([row.n for row in rows]),
        "E": np.array([row.error for row in rows]),
        "ok": np.array([1.0 if row.ok else 0.0 for row in rows]),
    }
    if config.timing_delay is not None:
        columns["E_timing"] = np.array([np.nan if row.timing_error is None else row.timing_error for row in rows])

    path = write_csv(
        output_path(config, "error-scan", out),
        columns,
        command="error-scan",
        config_lines=config.header_lines(),
        summary={"rows": len(rows), "failed": sum(not row.ok for row in rows)},
    )
    logger.success(f"Error scan over {len(rows)} sizes written")
    return path


def _optimization_problem(config: ScenarioConfig, graph: GraphSpec, tol: Optional[float]) -> OptimizationProblem:
    shells = shell_descriptor(graph)
    gamma = config.gamma if config.gamma is not None else ModelParams(g=config.g, n=graph.n, n_marked=1).gamma
    return OptimizationProblem(
        shells=shells,
        zeta_values=tuple(config.zeta_values),
        tie_unmarked=config.tie_unmarked_zeta,
        spline_points=config.spline_points,
        bound=config.bound,
        horizon=config.horizon,
        horizon_range=(config.horizon_min, config.horizon_max),
        objective=config.objective,
        gamma=gamma,
        cfg=integrator_config(config, tol, optimization=True),
    )


def cmd_optimize(
    config: ScenarioConfig,
    out: Optional[str] = None,
    seed: Optional[int] = None,
    budget: Optional[int] = None,
    tol: Optional[float] = None,
) -> List[Path]:
    """Direct optimization on a shell-regular graph; writes a result record and the best trajectory"""
    graph = build_scenario_graph(config)
    problem = _optimization_problem(config, graph, tol)
    seed = seed if seed is not None else (config.seed if config.seed is not None else settings.optimizer.seed)
    budget = budget if budget is not None else (config.budget if config.budget is not None else settings.optimizer.budget)

    result = optimize(problem, budget=budget, seed=seed)
    evaluation = result.evaluation
    csv_path = output_path(config, "optimize", out)

    record = {
        "command": "optimize",
        "seed": seed,
        "budget": budget,
        "evaluations": result.evaluations,
        "zeta": result.zeta,
        "feasible": evaluation.feasible,
        "objective": evaluation.objective,
        "terminal_probability": evaluation.terminal_probability,
        "parameters": result.parameters,
    }
    for zeta, best in result.per_assignment:
        record[f"best_zeta_{'_'.join(str(z) for z in zeta)}"] = best

    paths = []
    if evaluation.feasible:
        spline, phases, horizon = problem.decode(result.parameters)
        record.update({
            "horizon": horizon,
            "initial_phases": phases,
            "peak_time": evaluation.peak.time,
            "peak_value": evaluation.peak.value,
            "peak_interior": evaluation.peak.interior,
        })
        report = costate_diagnostics(problem, result.parameters, result.zeta)
        record.update({
            "costates_ok": report.ok,
            "max_abs_theta_costate_sum": report.max_theta_sum,
            "max_abs_optimality_residual": report.max_residual,
        })

        scheme = problem.scheme(result.zeta, spline)
        times = np.linspace(0.0, horizon, config.samples)
        columns = _trajectory_columns(evaluation.trajectory, times, scheme, problem.shells.multiplicity)
        paths.append(write_csv(
            csv_path, columns, command="optimize", config_lines=config.header_lines(),
            summary={"objective": evaluation.objective, "zeta": result.zeta, "seed": seed, "budget": budget},
        ))
    else:
        record["message"] = evaluation.message

    paths.insert(0, write_record(record_path(csv_path), record))
    logger.success(f"Optimization finished: objective {evaluation.objective:.6f} with zeta={result.zeta}")
    return paths


def cmd_reduce(config: ScenarioConfig) -> str:
    """Equivalence classes and, when the graph is shell-regular, its shell description"""
    graph = build_scenario_graph(config)
    partition = reduce(graph)
    lines = [f"graph {graph.name}: n={graph.n}, N={graph.n_marked}, {len(graph.edges)} edges"]
    lines.append(f"{len(partition)} equivalence classes:")
    for index, (members, flag) in enumerate(zip(partition.classes, partition.marked_flag)):
        tag = "marked" if flag else "unmarked"
        lines.append(f"  [{index}] {tag:8s} size {len(members)}: {' '.join(str(v) for v in members)}")
    try:
        shells = shell_descriptor(graph)
        lines.append(f"shells: d={shells.d} c={list(shells.c)} n_i={list(shells.nshell)}")
    except ShellStructureError as e:
        lines.append(f"shells: {e}")
    report = "\n".join(lines)
    print(report)
    return report

