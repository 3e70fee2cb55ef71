import math
import warnings

import numpy as np
import pytest

from bmc import (
    ChannelParams,
    DensityMatrix,
    IntegratorOptions,
    InvalidParameterError,
    InvalidTimeError,
    StiffnessError,
    TruncationError,
    beta_t,
    coherent_state,
    evolve,
    evolve_coherent_analytic,
    evolve_trajectory,
    g_entropy,
    ladder_operators,
    lindblad_rhs,
    mean_photon_number,
    number_state,
    projector,
    thermal_state,
    to_density_matrix,
    trace_distance,
    von_neumann_entropy,
)
from bmc import lindblad
from bmc.fock import _coherent_amplitudes

REF = ChannelParams(gamma=0.1, beta_rate=0.01)


class TestChannelParams:
    def test_rejects_nonpositive_gamma(self):
        with pytest.raises(InvalidParameterError, match="gamma"):
            ChannelParams(gamma=0.0)
        with pytest.raises(InvalidParameterError, match="gamma"):
            ChannelParams(gamma=-1.0)

    def test_rejects_negative_rates(self):
        with pytest.raises(InvalidParameterError, match="beta"):
            ChannelParams(gamma=0.1, beta_rate=-0.01)
        with pytest.raises(InvalidParameterError, match="n_bar"):
            ChannelParams(gamma=0.1, n_bar=-1.0)

    def test_squeezing_physicality_bound(self):
        # N = 0.1 -> |M|^2 <= 0.11, so |M| <= 0.3317
        ChannelParams(gamma=0.1, beta_rate=0.01, m_squeeze=0.3)
        with pytest.raises(InvalidParameterError, match="m_squeeze"):
            ChannelParams(gamma=0.1, beta_rate=0.01, m_squeeze=0.4)

    def test_reservoir_photons(self):
        assert REF.reservoir_photons == pytest.approx(0.1, rel=1e-12)


class TestIntegratorOptions:
    def test_defaults_valid(self):
        opts = IntegratorOptions()
        assert opts.method == "rk45"

    def test_rejects_bad_settings(self):
        with pytest.raises(InvalidParameterError):
            IntegratorOptions(rel_tol=0.0)
        with pytest.raises(InvalidParameterError):
            IntegratorOptions(abs_tol=-1e-9)
        with pytest.raises(InvalidParameterError):
            IntegratorOptions(max_step=0.0)
        with pytest.raises(InvalidParameterError):
            IntegratorOptions(method="euler")
        with pytest.raises(InvalidParameterError):
            IntegratorOptions(method="rk4")  # needs a finite max_step


class TestRhs:
    def test_vacuum_is_steady_for_pure_loss(self):
        params = ChannelParams(gamma=0.1)
        drho = lindblad_rhs(projector(number_state(0, 20)), params)
        assert np.max(np.abs(drho.entries)) < 1e-14

    def test_thermal_reservoir_state_is_steady(self):
        drho = lindblad_rhs(thermal_state(REF.reservoir_photons, 40), REF)
        assert np.max(np.abs(drho.entries)) < 1e-15

    def test_single_photon_decay_rates(self):
        params = ChannelParams(gamma=0.1)
        drho = lindblad_rhs(projector(number_state(1, 10)), params)
        assert drho.entries[0, 0].real == pytest.approx(params.gamma, abs=1e-14)
        assert drho.entries[1, 1].real == pytest.approx(-params.gamma, abs=1e-14)

    def test_traceless_and_hermitian(self):
        rho = projector(coherent_state(0.8 + 0.3j, 30))
        drho = lindblad_rhs(rho, REF)
        assert abs(np.trace(drho.entries)) < 1e-12
        assert np.max(np.abs(drho.entries - drho.entries.conj().T)) < 1e-14


class TestEvolve:
    def test_zero_time_returns_input(self):
        rho0 = projector(coherent_state(1.0, 30))
        assert evolve(rho0, REF, 0.0) is rho0

    def test_matches_analytic_output(self):
        dim = 40
        rho0 = projector(coherent_state(1.0, dim))
        out = evolve(rho0, REF, 1.0)
        exact = to_density_matrix(evolve_coherent_analytic(1.0, REF, 1.0), dim)
        assert trace_distance(out, exact) < 1e-6

    def test_steady_state_reached_from_undisplaced_inputs(self):
        dim = 40
        target = thermal_state(REF.reservoir_photons, dim)
        horizon = 10.0 / REF.gamma
        for rho0 in (
            projector(number_state(0, dim)),
            thermal_state(0.3, dim),
        ):
            assert trace_distance(evolve(rho0, REF, horizon), target) < 1e-5
        # excitations decay as e^{-gamma t}: needs a longer horizon
        out = evolve(projector(number_state(1, dim)), REF, 15.0 / REF.gamma)
        assert trace_distance(out, target) < 1e-5

    def test_steady_state_reached_from_coherent_input(self):
        # the displacement decays as e^{-gamma t / 2}
        dim = 40
        target = thermal_state(REF.reservoir_photons, dim)
        out = evolve(projector(coherent_state(1.0, dim)), REF, 30.0 / REF.gamma)
        assert trace_distance(out, target) < 1e-5

    def test_semigroup_property(self):
        rho0 = projector(coherent_state(1.0 + 0.5j, 36))
        split = evolve(evolve(rho0, REF, 0.4), REF, 0.6)
        direct = evolve(rho0, REF, 1.0)
        assert trace_distance(split, direct) < 1e-7

    def test_entropy_matches_thermal_formula(self):
        dim = 40
        rho0 = projector(coherent_state(0.5, dim))
        for t in (0.5, 2.0):
            out = evolve(rho0, REF, t)
            assert abs(von_neumann_entropy(out) - g_entropy(beta_t(REF, t))) < 1e-6

    def test_rk4_agrees_with_rk45(self):
        rho0 = projector(coherent_state(1.0, 36))
        fixed = evolve(rho0, REF, 1.0, IntegratorOptions(method="rk4", max_step=1e-3))
        adaptive = evolve(rho0, REF, 1.0)
        assert trace_distance(fixed, adaptive) < 1e-8

    def test_negative_time_rejected(self):
        with pytest.raises(InvalidTimeError):
            evolve(projector(number_state(0, 10)), REF, -1.0)


class TestTrajectory:
    def test_samples_align_with_single_shots(self):
        dim = 30
        rho0 = projector(coherent_state(0.7, dim))
        times = [0.0, 0.3, 1.0, 2.5]
        traj = evolve_trajectory(rho0, REF, times)
        assert [t for t, _ in traj] == times
        assert traj[0][1] is rho0
        for t, state in traj[1:]:
            assert trace_distance(state, evolve(rho0, REF, t)) < 1e-9

    def test_invariants_along_trajectory(self):
        rho0 = projector(coherent_state(1.0, 36))
        for _, state in evolve_trajectory(rho0, REF, [0.2, 0.7, 1.5, 4.0, 12.0]):
            assert abs(state.trace() - 1.0) < 1e-8
            assert np.max(np.abs(state.entries - state.entries.conj().T)) < 1e-10
            assert np.linalg.eigvalsh(state.entries)[0] > -1e-8

    def test_rejects_decreasing_times(self):
        rho0 = projector(number_state(0, 10))
        with pytest.raises(InvalidTimeError):
            evolve_trajectory(rho0, REF, [1.0, 0.5])


class TestSqueezedReservoir:
    def test_second_moments_from_vacuum(self):
        # independently derived moment dynamics for this generator:
        # <a+a>(t) = N (1 - e^{-gamma t}), <a^2>(t) = -M (1 - e^{-gamma t})
        params = ChannelParams(gamma=0.2, beta_rate=0.06, m_squeeze=0.25 + 0.1j)
        dim = 30
        a, _ = ladder_operators(dim)
        vac = projector(number_state(0, dim))
        for t in (0.5, 2.0, 10.0):
            out = evolve(vac, params, t)
            grow = -math.expm1(-params.gamma * t)
            assert mean_photon_number(out) == pytest.approx(
                params.reservoir_photons * grow, abs=1e-9
            )
            a_sq = complex(np.trace(out.entries @ a @ a))
            assert a_sq == pytest.approx(-params.m_squeeze * grow, abs=1e-9)

    def test_squeezed_evolution_stays_physical(self):
        params = ChannelParams(gamma=0.2, beta_rate=0.06, m_squeeze=0.2)
        out = evolve(projector(number_state(0, 30)), params, 5.0)
        out.validate(herm_tol=1e-10, trace_tol=1e-8, psd_tol=1e-8)


class TestFailureModes:
    def test_step_floor_raises_stiffness_error(self):
        rho0 = projector(number_state(0, 20))
        with pytest.raises(StiffnessError):
            evolve(rho0, REF, 1.0, IntegratorOptions(max_step=1e-20))

    def test_hostile_rhs_underflows_step_size(self):
        # a non-smooth right-hand side defeats the error estimator
        rng = np.random.default_rng(3)

        def hostile(_y):
            return rng.standard_normal((4, 4)) * 1e6

        with pytest.raises(StiffnessError):
            lindblad._integrate_rk45(
                hostile, np.eye(4, dtype=complex) / 4.0, 0.0, 1.0, IntegratorOptions()
            )

    def test_trace_deficient_input_raises_truncation_error(self):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            amps, _ = _coherent_amplitudes(2.0, 5)
        leaky = DensityMatrix(np.outer(amps, amps.conj()))  # trace well below 1
        with pytest.raises(TruncationError, match="trace drifted"):
            evolve(leaky, REF, 1.0)

    def test_unstable_fixed_step_detected(self):
        rho0 = projector(number_state(0, 24))
        with pytest.raises(TruncationError):
            evolve(rho0, REF, 100.0, IntegratorOptions(method="rk4", max_step=5.0))
