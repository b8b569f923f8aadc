from functools import partial

import numpy as np
import pytest

from control_opt import (
    Costates,
    control_gradient,
    costate_rhs,
    optimality_residual,
    pmp_hamiltonian,
    rhs_state_costate,
)
from dynamics import ControlScheme, ModelParams, rhs_shells
from integrate import IntegratorConfig, integrate


def _random_point(rng, k):
    state = np.concatenate([rng.uniform(0.2, 0.8, size=k), rng.uniform(-np.pi, np.pi, size=k)])
    costates = Costates(lam=rng.normal(size=k), Lam=rng.normal(size=k))
    scheme = ControlScheme.constant(rng.integers(0, 3, size=k), rng.normal(size=k))
    return state, costates, scheme


def _central_gradient(fun, x, step=1e-6):
    grad = np.empty_like(x)
    for i in range(len(x)):
        up, down = x.copy(), x.copy()
        up[i] += step
        down[i] -= step
        grad[i] = (fun(up) - fun(down)) / (2 * step)
    return grad


class TestHamiltonian:
    def test_zero_costates(self, rng, cycle6_shells):
        state, _, scheme = _random_point(rng, 4)
        params = ModelParams.direct(1.0, 6, 1)
        assert pmp_hamiltonian(0.0, state, Costates.zeros(4), scheme, cycle6_shells, params) == 0.0
        np.testing.assert_array_equal(costate_rhs(0.0, state, Costates.zeros(4), scheme, cycle6_shells, params), 0.0)

    def test_matrix_or_shells(self, rng, cycle6_shells):
        state, costates, scheme = _random_point(rng, 4)
        params = ModelParams.direct(1.0, 6, 1)
        q = cycle6_shells.quotient_laplacian()
        assert pmp_hamiltonian(0.0, state, costates, scheme, q, params) == pytest.approx(
            pmp_hamiltonian(0.0, state, costates, scheme, cycle6_shells, params))

    @pytest.mark.parametrize("d", [1, 2, 3])
    def test_costates_match_finite_differences(self, rng, shell_cases, d):
        shells = shell_cases[d]
        k = d + 1
        params = ModelParams.direct(0.8, shells.n, 1)
        for _ in range(100):
            state, costates, scheme = _random_point(rng, k)
            analytic = costate_rhs(0.0, state, costates, scheme, shells, params)
            numeric = -_central_gradient(
                lambda s: pmp_hamiltonian(0.0, s, costates, scheme, shells, params), state)
            scale = max(1.0, np.max(np.abs(numeric)))
            np.testing.assert_allclose(analytic, numeric, rtol=1e-6, atol=1e-6 * scale)

    @pytest.mark.parametrize("d", [1, 2, 3])
    def test_phase_costates_sum_to_zero_rate(self, rng, shell_cases, d):
        shells = shell_cases[d]
        k = d + 1
        params = ModelParams.direct(1.0, shells.n, 1)
        for _ in range(20):
            state, costates, scheme = _random_point(rng, k)
            rates = costate_rhs(0.0, state, costates, scheme, shells, params)
            scale = max(1.0, np.max(np.abs(rates)))
            assert np.sum(rates[k:]) == pytest.approx(0.0, abs=1e-12 * scale)

    def test_control_gradient(self, rng, cycle6_shells):
        params = ModelParams.direct(1.0, 6, 1)
        state, costates, scheme = _random_point(rng, 4)
        u0 = scheme.values(0.0)

        def hamiltonian(u):
            shifted = ControlScheme.constant(scheme.zeta, u)
            return pmp_hamiltonian(0.0, state, costates, shifted, cycle6_shells, params)

        np.testing.assert_allclose(control_gradient(state, costates, scheme), _central_gradient(hamiltonian, u0), atol=1e-8)

    def test_optimality_residual(self, rng):
        state, costates, _ = _random_point(rng, 3)
        linear = ControlScheme.zero([0, 0, 0])
        assert optimality_residual(state, costates, linear) == pytest.approx(costates.theta_sum)
        assert optimality_residual(state, Costates.zeros(3), ControlScheme.zero([1, 2, 1])) == 0.0

    def test_costate_vector_round_trip(self):
        costates = Costates(lam=[1.0, 2.0], Lam=[3.0, -3.0])
        again = Costates.from_vector(costates.as_vector())
        assert again.lam.tolist() == [1.0, 2.0]
        assert again.theta_sum == 0.0


class TestJointSystem:
    @pytest.mark.parametrize("d", [1, 2, 3])
    def test_phase_costate_sum_is_conserved(self, rng, shell_cases, d):
        shells = shell_cases[d]
        k = d + 1
        params = ModelParams.direct(0.3, shells.n, 1)
        amp = rng.uniform(-1.0, 1.0, size=k)
        signals = [lambda t, a=a: a * np.cos(2 * t) for a in amp]
        scheme = ControlScheme.per_class(rng.integers(0, 3, size=k), signals)

        lam = rng.normal(size=k)
        Lam = rng.normal(size=k)
        Lam -= Lam.mean()
        z0 = np.concatenate([np.full(k, 1 / np.sqrt(shells.n)), rng.uniform(-0.5, 0.5, size=k), lam, Lam])

        rhs = partial(rhs_state_costate, scheme=scheme, structure=shells, params=params)
        traj = integrate(rhs, z0, 0.0, 0.2, IntegratorConfig(rel_tol=1e-10, abs_tol=1e-12))
        sums = traj.states[:, 3 * k:].sum(axis=1)
        assert np.max(np.abs(sums)) <= 1e-8

    def test_state_part_is_the_polar_system(self, rng, cycle6_shells):
        params = ModelParams.direct(1.0, 6, 1)
        state, costates, scheme = _random_point(rng, 4)
        z = np.concatenate([state, costates.as_vector()])
        joint = rhs_state_costate(0.0, z, scheme, cycle6_shells, params)
        np.testing.assert_allclose(joint[:8], rhs_shells(0.0, state, scheme, params, cycle6_shells))
