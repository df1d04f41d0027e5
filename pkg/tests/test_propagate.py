import io

import numpy as np
import pytest
from numpy.testing import assert_allclose

from qsl_lab.errors import DomainError, NumericalError
from qsl_lab.propagate import (
    TimeGrid,
    analytic_propagator,
    excited_population_trace,
    generator_apply,
    generator_from_rates,
    propagate_analytic,
    propagate_ode,
)
from qsl_lab.rates import (
    RateModel,
    amplitude_damping_model,
    cp_oscillating_model,
    pdiv_crossover_model,
    pure_dephasing_model,
    sign_violation_model,
    zero_model,
)
from qsl_lab.states import (
    EXCITED,
    hermitian_eigenvalues,
    pure_state_from_a,
    random_density_matrices,
    random_pure_states,
)

BUILTINS = {
    "cp-osc": cp_oscillating_model(8, 5),
    "pdiv-0.5": pdiv_crossover_model(0.5),
    "pdiv-1.0": pdiv_crossover_model(1.0),
    "sign-0.5": sign_violation_model(0.5),
    "sign-1.0": sign_violation_model(1.0),
}
A_VALUES = (0.0, 0.25, 0.5, 0.75, 1.0)


class TestGenerator:
    def test_dephasing_example(self):
        rho = np.full((2, 2), 0.5, dtype=complex)
        out = generator_apply(pure_dephasing_model(1.0), 0.0, rho)
        assert_allclose(out, [[0, -0.5], [-0.5, 0]], atol=1e-15)

    def test_balanced_rates_fix_maximally_mixed(self):
        model = cp_oscillating_model(8, 5)
        # gamma1 = gamma2 where cos(omega t / 2) vanishes... find it numerically
        t = np.linspace(0, 3, 30001)
        _, g1, g2, _ = model.rates(t)
        s = t[np.argmin(np.abs(g1 - g2))]
        _, g1s, g2s, _ = model.rates(s)
        out = generator_apply(model, s, np.eye(2) / 2)
        assert np.max(np.abs(out)) <= abs(g1s - g2s) + 1e-15
        out = generator_from_rates(0.0, 3.0, 3.0, 1.0, np.eye(2) / 2)
        assert np.max(np.abs(out)) == 0.0

    def test_amplitude_damping_example(self):
        out = generator_apply(amplitude_damping_model(1.0), 0.0, pure_state_from_a(1.0))
        assert_allclose(out, [[-0.5, 0], [0, 0.5]], atol=1e-15)
        assert abs(np.trace(out)) == 0.0

    def test_hamiltonian_term(self):
        rho = np.full((2, 2), 0.5, dtype=complex)
        out = generator_from_rates(1.0, 0, 0, 0, rho)
        # i w [rho, sigma3] moves only the coherence: d rho01 = -2 i w rho01
        assert_allclose(out, [[0, -1j], [1j, 0]], atol=1e-15)

    def test_traceless_hermitian_random(self, rng):
        models = list(BUILTINS.values())
        states = random_density_matrices(1000, rng)
        times = rng.uniform(0, 20, 1000)
        for i, (t, rho) in enumerate(zip(times, states)):
            out = generator_apply(models[i % len(models)], t, rho)
            assert abs(np.trace(out)) <= 1e-12
            assert np.max(np.abs(out - out.conj().T)) <= 1e-12

    def test_broadcast_over_times(self, rng):
        model = BUILTINS["pdiv-0.5"]
        t = np.linspace(0, 2, 5)
        rho = random_density_matrices(5, rng)
        stacked = generator_apply(model, t, rho)
        for i in range(5):
            assert_allclose(stacked[i], generator_apply(model, t[i], rho[i]), atol=1e-15)


class TestTimeGrid:
    def test_uniform(self):
        grid = TimeGrid.uniform(2.0, 5)
        assert_allclose(grid.times, [0, 0.5, 1, 1.5, 2])
        assert grid.t_end == 2.0
        assert (grid.rtol, grid.atol) == (1e-10, 1e-12)

    @pytest.mark.parametrize("times", [[0.0], [0.1, 1.0], [0.0, 1.0, 1.0], [0.0, 2.0, 1.0]])
    def test_invalid(self, times):
        with pytest.raises(DomainError):
            TimeGrid(np.array(times))

    def test_non_positive_end(self):
        with pytest.raises(DomainError):
            TimeGrid.uniform(0.0)


class TestOdeEngine:
    def test_zero_rates_identity(self, rng):
        rho0 = random_density_matrices(1, rng)[0]
        traj = propagate_ode(zero_model(), rho0, TimeGrid.uniform(5.0, 51))
        assert np.max(np.abs(traj.states - rho0)) <= 1e-14
        assert_allclose(traj.fidelity, 1.0, atol=1e-12)
        assert np.all(traj.gen_norm == 0)

    def test_amplitude_damping_decay(self):
        gamma = 1.3
        grid = TimeGrid(np.array([0.0, 1.0, 2.0 / gamma, 4.0]))
        traj = propagate_ode(amplitude_damping_model(gamma), pure_state_from_a(1.0), grid)
        _, p = excited_population_trace(traj)
        assert_allclose(p, np.exp(-gamma * grid.times / 2), rtol=1e-9)
        assert p[2] == pytest.approx(np.exp(-1), rel=1e-9)

    def test_cp_populations_oscillate_coherence_zero(self):
        traj = propagate_ode(BUILTINS["cp-osc"], pure_state_from_a(1.0), TimeGrid.uniform(3.0, 601))
        p0, _ = traj.populations
        d = np.diff(p0)
        assert np.count_nonzero(np.sign(d[:-1]) * np.sign(d[1:]) < 0) >= 2
        assert np.max(np.abs(traj.coherence)) <= 1e-12

    def test_node_zero_fidelity_is_one(self, rng):
        for rho0 in random_pure_states(5, rng):
            traj = propagate_ode(BUILTINS["sign-0.5"], rho0, TimeGrid.uniform(1.0, 11))
            assert traj.fidelity[0] == pytest.approx(1.0, abs=1e-12)
            assert np.array_equal(traj.initial_state, rho0)

    def test_dense_output_matches_nodes(self):
        traj = propagate_ode(BUILTINS["pdiv-0.5"], pure_state_from_a(0.3), TimeGrid.uniform(2.0, 21))
        assert_allclose(traj.dense(traj.times), traj.states, atol=1e-12)

    def test_rejects_invalid_state(self):
        with pytest.raises(DomainError):
            propagate_ode(zero_model(), np.array([[2, 0], [0, -1]]), TimeGrid.uniform(1.0, 3))

    def test_invariant_repair_bound(self, monkeypatch):
        import qsl_lab.propagate as prop

        monkeypatch.setattr(prop, "REPAIR_BOUND", 0.0)
        grid = TimeGrid.uniform(3.0, 7, rtol=1e-3, atol=1e-3)
        with pytest.raises(NumericalError, match="repair"):
            propagate_ode(BUILTINS["cp-osc"], pure_state_from_a(0.3), grid)

    def test_repair_restores_invariants(self):
        from qsl_lab.propagate import _repair

        bad = np.array([[[0.6, 0.1 + 1e-9j], [0.1, 0.41]]])
        fixed, size = _repair(bad)
        assert size == pytest.approx(0.01)
        assert np.trace(fixed[0]).real == pytest.approx(1.0, abs=1e-15)
        assert np.array_equal(fixed[0], fixed[0].conj().T)

    def test_ode_physicality_cp(self, rng):
        grid = TimeGrid.uniform(3.0, 301)
        for rho0 in random_pure_states(20, rng):
            traj = propagate_ode(BUILTINS["cp-osc"], rho0, grid)
            lam_plus, lam_minus = hermitian_eigenvalues(traj.states)
            assert np.min(lam_minus) >= -1e-9
            assert np.max(np.abs(np.trace(traj.states, axis1=1, axis2=2) - 1)) <= 1e-10


class TestAnalyticEngine:
    def test_zero_rates_identity(self):
        rho0 = pure_state_from_a(0.3)
        traj = propagate_analytic(zero_model(), rho0, TimeGrid.uniform(4.0, 9))
        assert np.max(np.abs(traj.states - rho0)) <= 1e-15

    def test_cp_coherence_decay(self):
        grid = TimeGrid.uniform(1.0, 41)
        traj = propagate_analytic(BUILTINS["cp-osc"], pure_state_from_a(0.5), grid)
        assert_allclose(np.abs(traj.coherence), 0.5 * np.exp(-4 * grid.times), rtol=1e-10, atol=1e-15)

    def test_crossover_z_independent_of_k(self):
        grid = TimeGrid.uniform(5.0, 26)
        rho0 = pure_state_from_a(0.8)
        za = propagate_analytic(pdiv_crossover_model(0.5), rho0, grid).states[:, 0, 0]
        zb = propagate_analytic(pdiv_crossover_model(1.0), rho0, grid).states[:, 0, 0]
        assert np.array_equal(za, zb)

    def test_hamiltonian_phase(self):
        model = RateModel("rotate", gamma1=lambda t: 0.0, gamma2=lambda t: 0.0, gamma3=lambda t: 0.0,
                          omega_h=lambda t: 0.5)
        grid = TimeGrid.uniform(2.0, 11)
        a = propagate_analytic(model, pure_state_from_a(0.5), grid)
        b = propagate_ode(model, pure_state_from_a(0.5), grid)
        assert np.max(np.abs(a.states - b.states)) <= 1e-9
        assert_allclose(a.coherence, 0.5 * np.exp(-1j * grid.times), atol=1e-12)

    def test_propagator_reuse(self):
        grid = TimeGrid.uniform(2.0, 11)
        prop = analytic_propagator(BUILTINS["sign-1.0"], grid)
        for a in (0.1, 0.9):
            direct = propagate_analytic(BUILTINS["sign-1.0"], pure_state_from_a(a), grid)
            assert np.array_equal(prop(pure_state_from_a(a)).states, direct.states)

    def test_coherence_monotone_when_decoherence_rate_non_negative(self):
        grid = TimeGrid.uniform(10.0, 201)
        traj = propagate_analytic(BUILTINS["sign-1.0"], pure_state_from_a(0.5), grid)
        assert np.all(np.diff(np.abs(traj.coherence)) <= 1e-15)


@pytest.mark.parametrize("name", list(BUILTINS))
def test_oracle_equivalence(name):
    model = BUILTINS[name]
    grid = TimeGrid.uniform(10.0, 201)
    prop = analytic_propagator(model, grid)
    for a in A_VALUES:
        rho0 = pure_state_from_a(a)
        ode = propagate_ode(model, rho0, grid)
        exact = prop(rho0)
        assert np.max(np.abs(ode.states - exact.states)) <= 1e-8
        for traj in (ode, exact):
            assert np.max(np.abs(np.trace(traj.states, axis1=1, axis2=2) - 1)) <= 1e-10
            assert np.max(np.abs(traj.states - np.conj(np.swapaxes(traj.states, 1, 2)))) <= 1e-10


def test_excited_population_trace_examples():
    grid = TimeGrid.uniform(2.0, 5)
    times, p = excited_population_trace(propagate_ode(zero_model(), pure_state_from_a(1.0), grid))
    assert_allclose(p, 1.0)
    assert np.array_equal(times, grid.times)
    _, p = excited_population_trace(propagate_ode(pure_dephasing_model(1.0), np.eye(2) / 2, grid))
    assert_allclose(p, 0.5, atol=1e-14)
    assert EXCITED == 0


def test_trajectory_csv():
    traj = propagate_ode(amplitude_damping_model(1.0), pure_state_from_a(1.0), TimeGrid.uniform(1.0, 3))
    buf = io.StringIO()
    traj.to_csv(buf)
    lines = buf.getvalue().split("\n")
    assert lines[0] == "t,rho00,rho01_re,rho01_im,rho11,fidelity,gen_norm"
    assert len([ln for ln in lines if ln]) == 4
    first = [float(x) for x in lines[1].split(",")]
    assert first == [0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.5]
