import itertools

import numpy as np
import pytest

from analytic import (
    CompleteProtocol,
    PerturbationSpec,
    analytic_control,
    control_scheme,
    end_time,
    error_scan,
    integrate_protocol,
    linear_regime_peak,
    minimal_padding,
    pad_unmarked,
    perturbed_error,
    protocol_peak,
    r_star_analytic,
    runtime_class,
    success_probability,
    success_probability_rate,
    timing_error,
)
from dynamics import probability_constraint, rhs_contracted
from integrate import IntegratorConfig
from utils.errors import ConfigError, DomainError, IntegrationError, SingularCouplingError

CASES = [(3, 1), (10, 1), (10, 3), (64, 1), (65, 31)]
ZETAS = list(itertools.product([0, 1, 2], repeat=2))
TIGHT = IntegratorConfig(rel_tol=1e-10, abs_tol=1e-12)


class TestProtocol:
    def test_end_time_values(self):
        assert end_time(CompleteProtocol(n=3, n_marked=1)) == pytest.approx(0.6755109, abs=1e-6)
        assert end_time(CompleteProtocol(n=10, n_marked=1)) == pytest.approx(3.3307887, abs=1e-6)

    def test_end_time_closed_form(self):
        p = CompleteProtocol(n=10, n_marked=3, g=1.0)
        expected = 4 * np.arccos(np.sqrt(0.3)) / np.sqrt(21)
        assert end_time(p) == pytest.approx(expected, rel=1e-14)

    def test_end_time_scales_inversely_with_g(self):
        assert end_time(CompleteProtocol(n=10, n_marked=1, g=2.0)) == pytest.approx(
            end_time(CompleteProtocol(n=10, n_marked=1)) / 2, rel=1e-14)

    def test_trajectory_endpoints(self):
        p = CompleteProtocol(n=10, n_marked=3)
        assert r_star_analytic(0.0, p) == pytest.approx(1 / np.sqrt(10))
        assert r_star_analytic(end_time(p), p) == pytest.approx(1 / np.sqrt(3))
        assert success_probability(0.0, p) == pytest.approx(0.3)
        assert success_probability(end_time(p), p) == pytest.approx(1.0, abs=1e-15)

    def test_outside_window(self):
        p = CompleteProtocol(n=10, n_marked=1)
        with pytest.raises(DomainError):
            r_star_analytic(end_time(p) * 1.01, p)
        with pytest.raises(DomainError):
            success_probability(-0.1, p)

    def test_vectorised(self):
        p = CompleteProtocol(n=10, n_marked=1)
        t = np.linspace(0.0, end_time(p), 50)
        probs = success_probability(t, p)
        assert probs.shape == (50,)
        assert np.all(np.diff(probs) > 0)

    @pytest.mark.parametrize("n, n_marked, error", [
        (4, 2, SingularCouplingError),
        (10, 6, DomainError),
    ])
    def test_invalid_sizes(self, n, n_marked, error):
        with pytest.raises(error):
            CompleteProtocol(n=n, n_marked=n_marked)

    def test_needs_positive_g(self):
        with pytest.raises(ConfigError, match="use g = 1.0"):
            CompleteProtocol(n=10, n_marked=1, g=-1.0)
        with pytest.raises(ConfigError, match="nonzero"):
            CompleteProtocol(n=10, n_marked=1, g=0.0)

    def test_flatness_improves_with_n(self):
        """Probability rate just before t_f shrinks as n grows"""
        rates = []
        for n in (3, 10, 30):
            p = CompleteProtocol(n=n, n_marked=1)
            rates.append(success_probability_rate(end_time(p) - 0.05, p))
        assert rates[0] > rates[1] > rates[2] > 0


class TestAnalyticControl:
    def test_linear_case(self):
        p = CompleteProtocol(n=10, n_marked=1, g=1.5)
        assert analytic_control(0.7, p) == pytest.approx((0.0, 1.5))

    def test_nonlinear_marked(self):
        p = CompleteProtocol(n=10, n_marked=1, zeta_marked=1)
        _, u_s = analytic_control(end_time(p), p)
        assert u_s == pytest.approx(1.0)
        _, u_s0 = analytic_control(0.0, p)
        assert u_s0 == pytest.approx(10.0)

    @pytest.mark.parametrize("zeta_s, zeta", ZETAS)
    def test_condition_freezes_relative_phase(self, zeta_s, zeta):
        p = CompleteProtocol(n=10, n_marked=2, zeta_marked=zeta_s, zeta_unmarked=zeta,
                             u_unmarked=lambda t: 0.3 * np.sin(t))
        scheme = control_scheme(p)
        for t in np.linspace(0.0, end_time(p), 7)[:-1]:
            y = np.array([r_star_analytic(t, p), np.pi / 2])
            u, u_s = analytic_control(t, p)
            r = probability_constraint(y[0], p.n, p.n_marked)
            assert u_s * y[0] ** (2 * zeta_s) - u * r ** (2 * zeta) == pytest.approx(p.g, rel=1e-12)
            assert rhs_contracted(t, y, scheme, p.params)[1] == pytest.approx(0.0, abs=1e-9)


class TestIntegratedProtocol:
    @pytest.mark.parametrize("n, n_marked", CASES)
    @pytest.mark.parametrize("zeta_s, zeta", ZETAS)
    def test_feedback_follows_closed_form(self, n, n_marked, zeta_s, zeta):
        p = CompleteProtocol(n=n, n_marked=n_marked, zeta_marked=zeta_s, zeta_unmarked=zeta)
        traj = integrate_protocol(p, TIGHT, feedback=True)

        np.testing.assert_allclose(traj.states[:, 0], r_star_analytic(traj.times, p), atol=1e-6)
        np.testing.assert_allclose(traj.states[:, 1], np.pi / 2, atol=1e-7)
        assert n_marked * traj.final[0] ** 2 >= 1 - 1e-6

    @pytest.mark.parametrize("n, n_marked", CASES)
    def test_time_control_reaches_target(self, n, n_marked):
        p = CompleteProtocol(n=n, n_marked=n_marked)
        traj = integrate_protocol(p, TIGHT)
        np.testing.assert_allclose(traj.states[:, 0], r_star_analytic(traj.times, p), atol=1e-6)
        assert n_marked * traj.final[0] ** 2 >= 1 - 1e-6

    @pytest.mark.parametrize("zeta_s, zeta", [(1, 0), (2, 1), (2, 2)])
    def test_time_control_nonlinear(self, zeta_s, zeta):
        p = CompleteProtocol(n=10, n_marked=1, zeta_marked=zeta_s, zeta_unmarked=zeta)
        traj = integrate_protocol(p, TIGHT, t_end=0.95 * end_time(p))
        np.testing.assert_allclose(traj.states[:, 0], r_star_analytic(traj.times, p), atol=1e-6)

    def test_past_end_time(self):
        p = CompleteProtocol(n=10, n_marked=1)
        with pytest.raises(DomainError):
            integrate_protocol(p, t_end=1.1 * end_time(p))

    @pytest.mark.parametrize("n, n_marked", CASES)
    @pytest.mark.parametrize("zeta_s, zeta", ZETAS)
    def test_end_time_is_first_maximum(self, n, n_marked, zeta_s, zeta):
        p = CompleteProtocol(n=n, n_marked=n_marked, zeta_marked=zeta_s, zeta_unmarked=zeta)
        peak = protocol_peak(p, TIGHT)
        assert peak.interior
        assert peak.time == pytest.approx(end_time(p), abs=1e-6)
        assert peak.value == pytest.approx(1.0, abs=1e-6)


class TestRuntimeClass:
    def test_nonlinear(self):
        cls = runtime_class(100, 1)
        assert cls.regime == "nonlinear"
        assert cls.end_time == pytest.approx(end_time(CompleteProtocol(n=100, n_marked=1)))
        assert cls.padding == 0

    @pytest.mark.parametrize("n, n_marked, padding", [(10, 5, 1), (10, 6, 3), (4, 4, 5)])
    def test_constant(self, n, n_marked, padding):
        cls = runtime_class(n, n_marked)
        assert (cls.regime, cls.end_time, cls.padding) == ("constant", None, padding)
        assert minimal_padding(n, n_marked) == padding

    def test_padding(self):
        p = pad_unmarked(10, 6, 3)
        assert (p.n, p.n_marked) == (13, 6)
        with pytest.raises(DomainError):
            pad_unmarked(10, 6, 2)
        with pytest.raises(ConfigError):
            pad_unmarked(10, 1, -1)

    def test_zero_control_regime_peaks(self):
        peak = linear_regime_peak(10, 5)
        assert peak.interior
        assert peak.value > 0.5


class TestPerturbation:
    def test_no_offset(self):
        assert perturbed_error(CompleteProtocol(n=10, n_marked=1), PerturbationSpec(), TIGHT) == pytest.approx(0.0, abs=1e-9)

    def test_equal_offsets_are_a_global_phase(self):
        pert = PerturbationSpec(nu_marked=0.5, nu_unmarked=0.5)
        for n in (4, 16, 64):
            assert perturbed_error(CompleteProtocol(n=n, n_marked=1), pert, TIGHT) == pytest.approx(0.0, abs=1e-8)

    def test_mismatched_offsets(self):
        pert = PerturbationSpec(nu_marked=0.5, nu_unmarked=0.0)
        assert perturbed_error(CompleteProtocol(n=10, n_marked=1), pert, TIGHT) > 1e-3

    def test_needs_linear_protocol(self):
        with pytest.raises(DomainError):
            perturbed_error(CompleteProtocol(n=10, n_marked=1, zeta_marked=1), PerturbationSpec())

    @pytest.mark.parametrize("n", [3, 10])
    def test_timing_error(self, n):
        p = CompleteProtocol(n=n, n_marked=1)
        assert timing_error(p, 0.05, TIGHT) == pytest.approx(np.sin(p.kappa * 0.05) ** 2, abs=1e-8)

    def test_timing_error_falls_with_n(self):
        errors = [timing_error(CompleteProtocol(n=n, n_marked=1), 0.05, TIGHT) for n in (3, 10, 30)]
        assert errors[0] > errors[1] > errors[2]

    def test_scan(self):
        rows = error_scan([4, 8], PerturbationSpec(0.5, 0.5), cfg=TIGHT, timing_delay=0.05)
        assert [row.n for row in rows] == [4, 8]
        assert all(row.ok and row.error == pytest.approx(0.0, abs=1e-8) for row in rows)
        assert all(row.timing_error > 0 for row in rows)

    def test_unmarked_offset_error_grows_with_n(self):
        rows = error_scan([4, 8, 16, 32], PerturbationSpec(nu_marked=0.0, nu_unmarked=0.5), cfg=TIGHT, timing_delay=0.05)
        assert all(row.ok for row in rows)
        errors = [row.error for row in rows]
        assert errors[0] > 1e-3
        assert errors[0] < errors[1] < errors[2] < errors[3]
        assert errors[3] > 10 * errors[0]
        timing = [row.timing_error for row in rows]
        assert timing[0] > timing[1] > timing[2] > timing[3] > 0

    def test_scan_flags_failed_rows(self, mocker):
        real = perturbed_error

        def flaky(p, pert, cfg=None):
            if p.n == 8:
                raise IntegrationError("diverged")
            return real(p, pert, cfg)

        mocker.patch("analytic.perturbation.perturbed_error", side_effect=flaky)
        rows = error_scan([4, 8, 16], PerturbationSpec(), cfg=TIGHT)
        assert [row.ok for row in rows] == [True, False, True]
        assert np.isnan(rows[1].error)
        assert "diverged" in rows[1].message

    def test_scan_flags_invalid_sizes(self):
        rows = error_scan([2, 5], PerturbationSpec(), n_marked=1, cfg=TIGHT)
        assert not rows[0].ok
        assert rows[1].ok
