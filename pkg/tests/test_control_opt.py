import time
from functools import partial

import numpy as np
import pytest

from analytic import CompleteProtocol, end_time
from config.settings import settings
from control_opt import problem as problem_module
from control_opt import (
    BSplineControl,
    DifferentialEvolution,
    OptimizationProblem,
    clamped_uniform_knots,
    costate_diagnostics,
    cycle_example_problem,
    eval_bspline,
    evaluate_candidate,
    marked_probability,
    optimize,
    split_budget,
    zeta_assignments,
)
from dynamics import ControlScheme, ModelParams, rhs_full
from graphs import build_complete, laplacian
from graphs.reduction import shell_descriptor
from integrate import IntegratorConfig, integrate
from utils.errors import ConfigError, DomainError, StiffFailureError


def cox_de_boor(knots, i, degree, t):
    """Basis function N_{i,degree}(t), right-continuous except at the last knot"""
    if degree == 0:
        if knots[i] <= t < knots[i + 1]:
            return 1.0
        return 1.0 if t == knots[-1] and knots[i] < knots[i + 1] == knots[-1] else 0.0
    value = 0.0
    if knots[i + degree] > knots[i]:
        value += (t - knots[i]) / (knots[i + degree] - knots[i]) * cox_de_boor(knots, i, degree - 1, t)
    if knots[i + degree + 1] > knots[i + 1]:
        value += (knots[i + degree + 1] - t) / (knots[i + degree + 1] - knots[i + 1]) * cox_de_boor(knots, i + 1, degree - 1, t)
    return value


@pytest.fixture
def complete4_problem():
    """K_4 with one marked node: the analytic protocol is u_* = g = 1, u = 0 with gamma = 1/2"""
    shells = shell_descriptor(build_complete(4, {0}))
    return OptimizationProblem(
        shells=shells,
        zeta_values=(0,),
        horizon=end_time(CompleteProtocol(n=4, n_marked=1)),
        gamma=0.5,
        cfg=IntegratorConfig(rel_tol=1e-10, abs_tol=1e-12),
    )


class TestBSpline:
    def test_knots(self):
        assert clamped_uniform_knots(5, 1.0).tolist() == [0, 0, 0, 0, 0.5, 1, 1, 1, 1]
        with pytest.raises(ConfigError):
            clamped_uniform_knots(3, 1.0)

    def test_constant(self):
        spline = BSplineControl(control_points=np.full(6, 2.5), horizon=3.0)
        np.testing.assert_allclose(spline(np.linspace(0.0, 3.0, 20)), 2.5)

    def test_endpoints_interpolate(self):
        spline = BSplineControl(control_points=[1.0, -3.0, 4.0, 0.5, -2.0], horizon=2.0)
        assert spline(0.0) == pytest.approx(1.0)
        assert spline(2.0) == pytest.approx(-2.0)

    @pytest.mark.parametrize("t", [0.0, 0.13, 0.3, 0.5, 0.77, 1.0])
    def test_matches_cox_de_boor(self, t):
        points = np.array([0.0, 1.0, 0.0, -1.0, 0.0])
        spline = BSplineControl(control_points=points, horizon=1.0)
        expected = sum(points[i] * cox_de_boor(spline.knots, i, 3, t) for i in range(5))
        assert eval_bspline(spline, t) == pytest.approx(expected, abs=1e-14)

    def test_vector_valued(self, rng):
        points = rng.uniform(-5.0, 5.0, size=(5, 3))
        spline = BSplineControl(control_points=points, horizon=1.0)
        value = spline(0.4)
        assert value.shape == (3,)
        for column in range(3):
            single = BSplineControl(control_points=points[:, column], horizon=1.0)
            assert value[column] == pytest.approx(single(0.4))

    def test_convex_hull_bound(self, rng):
        points = rng.uniform(-20.0, 20.0, size=7)
        spline = BSplineControl(control_points=points, horizon=5.0)
        assert np.max(np.abs(spline(np.linspace(0.0, 5.0, 400)))) <= np.max(np.abs(points)) + 1e-12

    def test_rejects_out_of_bound_points(self):
        with pytest.raises(DomainError):
            BSplineControl(control_points=[0.0, 0.0, 25.0, 0.0], horizon=1.0)

    def test_outside_span(self):
        spline = BSplineControl(control_points=np.zeros(4), horizon=1.0)
        with pytest.raises(DomainError):
            eval_bspline(spline, 1.5)

    def test_from_file(self, tmp_path):
        path = tmp_path / "points.txt"
        path.write_text("# u_0 u_1\n1 0\n2 0\n3 0\n4 0\n5 0\n")
        spline = BSplineControl.from_file(path, horizon=1.0)
        assert spline.control_points.shape == (5, 2)
        assert spline(1.0).tolist() == pytest.approx([5.0, 0.0])
        with pytest.raises(ConfigError):
            BSplineControl.from_file(tmp_path / "missing.txt", horizon=1.0)


class TestProblem:
    def test_zeta_assignments(self):
        tied = zeta_assignments([1, 2], 4)
        assert len(tied) == 4
        assert (2, 1, 1, 1) in tied and (1, 2, 2, 2) in tied
        assert len(zeta_assignments([1, 2], 4, tie_unmarked=False)) == 16

    def test_cycle_example_dimension(self):
        problem = cycle_example_problem()
        # 4 shells x 5 points, 3 free phases, horizon
        assert problem.dimension == 24
        assert problem.free_phases == (0, 2, 3)
        lower, upper = problem.bounds()
        assert lower[-1] == 0.1 and upper[-1] == 10.0
        assert len(problem.zeta_grid()) == 4

    def test_encode_decode(self, rng):
        problem = cycle_example_problem()
        points = rng.uniform(-20.0, 20.0, size=(5, 4))
        phases = np.array([0.3, 0.0, -1.2, 2.0])
        spline, decoded_phases, horizon = problem.decode(problem.encode(points, phases, 4.5))
        np.testing.assert_array_equal(spline.control_points, points)
        np.testing.assert_array_equal(decoded_phases, phases)
        assert horizon == 4.5

    def test_decode_wraps_lower_phase_bound(self):
        problem = cycle_example_problem()
        phases = np.array([-np.pi, 0.0, -np.pi, np.pi])
        _, decoded, _ = problem.decode(problem.encode(np.zeros((5, 4)), phases, 1.0))
        np.testing.assert_array_equal(decoded, [np.pi, 0.0, np.pi, np.pi])

    def test_defaults_follow_settings(self, cycle6_shells, monkeypatch):
        monkeypatch.setattr(settings.optimizer, "bound", 12.0)
        monkeypatch.setattr(settings.optimizer, "spline_points", 6)
        monkeypatch.setattr(settings.optimizer, "horizon_min", 0.5)
        monkeypatch.setattr(settings.optimizer, "horizon_max", 4.0)
        problem = OptimizationProblem(shells=cycle6_shells)
        assert problem.bound == 12.0
        assert problem.dimension == 6 * 4 + 3 + 1
        lower, upper = problem.bounds()
        assert (lower[0], upper[0]) == (-12.0, 12.0)
        assert (lower[-1], upper[-1]) == (0.5, 4.0)

    def test_signal_reuses_recent_times(self, cycle6_shells, mocker):
        problem = OptimizationProblem(shells=cycle6_shells, horizon=1.0)
        spline = BSplineControl(control_points=np.arange(20.0).reshape(5, 4) - 10, horizon=1.0)
        scheme = problem.scheme((1, 2, 2, 2), spline)
        spy = mocker.spy(BSplineControl, "__call__")
        first = scheme.values(0.3)
        np.testing.assert_array_equal(scheme.values(0.3), first)
        np.testing.assert_allclose(first, spline(0.3))
        assert spy.call_count == 2
        for t in np.linspace(0.0, 1.0, 100):
            np.testing.assert_allclose(scheme.values(t), spline(t))

    def test_candidate_uses_analytic_jacobian(self, complete4_problem, mocker):
        spy = mocker.spy(problem_module, "integrate")
        points = np.tile([1.0, 0.0], (5, 1))
        x = complete4_problem.encode(points, np.array([-np.pi / 2, 0.0]))
        result = evaluate_candidate(complete4_problem, x, (0, 0), keep_trajectory=True)
        assert spy.call_args.kwargs["jac"] is not None
        assert result.trajectory.njev >= 1
        assert result.objective >= 1 - 1e-6

    def test_invalid_shell_index(self, cycle6_shells):
        with pytest.raises(ConfigError):
            OptimizationProblem(shells=cycle6_shells, controlled_shells=(0, 4))

    def test_analytic_candidate_is_optimal(self, complete4_problem):
        points = np.tile([1.0, 0.0], (5, 1))
        x = complete4_problem.encode(points, np.array([-np.pi / 2, 0.0]))
        result = evaluate_candidate(complete4_problem, x, (0, 0), with_peak=True)
        assert result.feasible
        assert result.objective >= 1 - 1e-6
        assert result.peak.value >= 1 - 1e-6

    def test_zero_control_matches_full_graph(self, cycle6, cycle6_shells):
        problem = OptimizationProblem(shells=cycle6_shells, horizon=2.0,
                                      cfg=IntegratorConfig(rel_tol=1e-10, abs_tol=1e-12))
        x = problem.encode(np.zeros((5, 4)), np.array([-np.pi / 2, 0.0, 0.0, 0.0]))
        result = evaluate_candidate(problem, x, (1, 2, 2, 2), keep_trajectory=True)

        y0 = np.concatenate([[0.0] * 6, [-1 / np.sqrt(6)] + [0.0] * 5])
        y0[1:6] = 1 / np.sqrt(6)
        rhs = partial(rhs_full, scheme=ControlScheme.zero([0] * 6), params=ModelParams.direct(1.0, 6, 1),
                      lap=laplacian(cycle6).astype(float))
        full = integrate(rhs, y0, 0.0, 2.0, IntegratorConfig(rel_tol=1e-10, abs_tol=1e-12))
        assert result.objective == pytest.approx(full.final[0] ** 2 + full.final[6] ** 2, abs=1e-8)
        assert marked_probability(result.trajectory.final, 4) == result.terminal_probability

    def test_out_of_bounds_is_infeasible(self, complete4_problem):
        x = np.full(complete4_problem.dimension, 25.0)
        result = evaluate_candidate(complete4_problem, x, (0, 0))
        assert not result.feasible
        assert result.objective == 0.0

    def test_integration_failure_is_infeasible(self, complete4_problem, mocker):
        mocker.patch("control_opt.problem.integrate", side_effect=StiffFailureError("stalled"))
        x = np.zeros(complete4_problem.dimension)
        result = evaluate_candidate(complete4_problem, x, (0, 0))
        assert not result.feasible
        assert result.objective == 0.0
        assert "stalled" in result.message


class TestDifferentialEvolution:
    @staticmethod
    def bowl(x):
        return -float(np.sum((x - 0.3) ** 2))

    def test_converges(self):
        de = DifferentialEvolution(self.bowl, [-1.0, -1.0], [1.0, 1.0], seed=3)
        result = de.run(3000)
        assert result.fun > -1e-6
        np.testing.assert_allclose(result.x, 0.3, atol=1e-3)
        assert result.nfev == 3000

    def test_deterministic(self):
        first = DifferentialEvolution(self.bowl, [-1.0] * 3, [1.0] * 3, seed=7).run(400)
        second = DifferentialEvolution(self.bowl, [-1.0] * 3, [1.0] * 3, seed=7).run(400)
        np.testing.assert_array_equal(first.x, second.x)
        assert first.history == second.history

    def test_budget_is_monotone(self):
        results = [DifferentialEvolution(self.bowl, [-1.0] * 3, [1.0] * 3, seed=1).run(b).fun for b in (50, 100, 400)]
        assert results[0] <= results[1] <= results[2]

    def test_respects_bounds(self):
        seen = []

        def objective(x):
            seen.append(x.copy())
            return float(np.sum(x))

        DifferentialEvolution(objective, [0.0, 0.0], [1.0, 2.0], seed=0).run(300)
        seen = np.array(seen)
        assert np.all(seen >= [0.0, 0.0]) and np.all(seen <= [1.0, 2.0])

    def test_needs_budget(self):
        with pytest.raises(ValueError):
            DifferentialEvolution(self.bowl, [0.0], [1.0]).run(0)


class TestOptimize:
    def test_split_budget(self):
        assert split_budget(10, 4) == [3, 3, 2, 2]
        assert split_budget(3, 4) == [1, 1, 1, 0]
        assert sum(split_budget(20000, 4)) == 20000

    def test_deterministic(self, complete4_problem):
        first = optimize(complete4_problem, budget=40, seed=5)
        second = optimize(complete4_problem, budget=40, seed=5)
        np.testing.assert_array_equal(first.parameters, second.parameters)
        assert first.objective == second.objective
        assert first.evaluations == 40

    def test_budget_of_one(self, complete4_problem):
        result = optimize(complete4_problem, budget=1, seed=0)
        assert result.evaluations == 1
        assert result.evaluation.trajectory is not None

    def test_more_budget_never_hurts(self, complete4_problem):
        small = optimize(complete4_problem, budget=30, seed=2)
        large = optimize(complete4_problem, budget=90, seed=2)
        assert large.objective >= small.objective

    def test_costates_along_candidate(self, complete4_problem):
        problem = OptimizationProblem(
            shells=complete4_problem.shells,
            zeta_values=(0,),
            horizon=0.8 * complete4_problem.horizon,
            gamma=0.5,
        )
        x = problem.encode(np.tile([1.0, 0.0], (5, 1)), np.array([-np.pi / 2, 0.0]))
        report = costate_diagnostics(problem, x, (0, 0), samples=50)
        assert report.ok
        assert len(report.times) == 50
        assert report.times[0] == pytest.approx(0.0) and report.times[-1] == pytest.approx(problem.horizon)
        assert report.max_theta_sum <= 1e-7
        assert np.all(np.isfinite(report.residual))

    def test_costate_failure_is_reported(self, complete4_problem, mocker):
        mocker.patch("control_opt.optimizer.integrate", side_effect=StiffFailureError("stalled"))
        x = complete4_problem.encode(np.zeros((5, 2)), np.zeros(2))
        report = costate_diagnostics(complete4_problem, x, (0, 0))
        assert not report.ok
        assert np.isnan(report.max_theta_sum)


@pytest.mark.slow
class TestOptimizeAtScale:
    def test_recovers_complete_graph_protocol(self, complete4_problem):
        result = optimize(complete4_problem, budget=20000, seed=0)
        assert result.objective >= 1 - 1e-3

    def test_cycle6(self):
        start = time.perf_counter()
        result = optimize(cycle_example_problem(), budget=20000, seed=0)
        assert time.perf_counter() - start <= 600.0
        assert result.objective >= 0.95
        assert result.evaluation.peak.value >= 0.90
        assert result.evaluation.peak.time <= 2.0
