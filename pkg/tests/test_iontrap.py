"""Tests for the two-ion register: Hamiltonians, integration, protocol, gamma."""

import math

import numpy as np
import pytest
from pydantic import ValidationError
from qutip import coherent, expect, qeye, sigmax, sigmay, sigmaz, tensor
from scipy.linalg import expm

from utils.errors import ProtocolRangeError, TruncationError
from utils.iontrap import (
    DEFAULT_DELTA,
    IonTrapConfig,
    compare_with_effective,
    decode_register,
    dispersive_fidelity,
    effective_hamiltonian,
    effective_params,
    encoding_frame,
    gamma_closed_form,
    gamma_ratio,
    integrate,
    interaction_hamiltonian,
    kinetic_correlator,
    laser_schedule,
    lifted_product_state,
    loop_step,
    max_time_step,
    mean_quadrature,
    measure_Ak,
    measure_U1_correlation,
    product_state,
    pseudo_helicity_direct,
    pseudo_helicity_operator,
    pseudo_helicity_protocol,
    register_operators,
    slope_Ak,
    slope_U1,
    spin_correlator,
    truncation_leakage,
)

ETA_R = 0.06 / 3**0.25


def with_ratio(ratio: float, **overrides) -> IonTrapConfig:
    """Config with delta/(eta_r Omega) = ratio at the default detuning."""
    values = {"Omega": DEFAULT_DELTA / (ratio * ETA_R)}
    values.update(overrides)
    return IonTrapConfig(**values)


def loops(config: IonTrapConfig, count: float) -> float:
    return count * 2 * math.pi / config.delta


# ===== TESTS: Configuration =====


class TestIonTrapConfig:
    """Tests for IonTrapConfig validation and derived quantities."""

    def test_stretch_parameters_derived(self):
        config = IonTrapConfig(nu=2.0)
        assert config.nu_r == pytest.approx(2.0 * math.sqrt(3.0))
        assert config.eta_r == pytest.approx(ETA_R)

    def test_inconsistent_stretch_frequency_rejected(self):
        with pytest.raises(ValueError, match="nu_r"):
            IonTrapConfig(nu=1.0, nu_r=2.0)

    def test_lamb_dicke_bound(self):
        with pytest.raises(ValueError):
            IonTrapConfig(eta=0.3)

    def test_unknown_key_rejected(self):
        with pytest.raises(ValueError):
            IonTrapConfig(gamma=1.0)

    def test_light_speed_formula(self):
        assert IonTrapConfig(eta=0.06, Delta=1.0, Omega_tilde=10.0).c_sim == pytest.approx(1.2)

    def test_mass_formula(self):
        config = IonTrapConfig(Omega=20.0, delta=2.0)
        assert config.mc2_sim == pytest.approx(2 * ETA_R**2 * 400 / 2)

    def test_mass_scales_with_omega_squared(self):
        single = IonTrapConfig(Omega=0.1).mc2_sim
        double = IonTrapConfig(Omega=0.2).mc2_sim
        assert double / single == pytest.approx(4.0)

    def test_mass_needs_detuning(self):
        with pytest.raises(ValidationError, match="delta must be positive"):
            IonTrapConfig(delta=0.0)

    def test_zero_detuning_allowed_without_stretch_drive(self):
        config = IonTrapConfig(delta=0.0, Omega=0.0)
        assert config.mc2_sim == 0.0
        assert gamma_closed_form(config, 2.0) == 0.0

    def test_default_point(self):
        config = IonTrapConfig.default()
        assert config.delta / config.stretch_coupling == pytest.approx(30.0)
        assert (config.n_a, config.n_b) == (24, 8)
        # gamma = 1 for <i(a+ - a)> = 2
        assert gamma_closed_form(config, 2.0) == pytest.approx(1.0)

    def test_ion_mass(self):
        assert IonTrapConfig(nu=2.0, Delta=0.5).ion_mass == pytest.approx(0.5)

    def test_dimension(self, small_trap):
        assert small_trap.dims == [2, 2, 10, 6]
        assert small_trap.dimension == 240


class TestLaserSchedule:
    """Tests for the laser frequency/phase table."""

    def test_table(self):
        config = IonTrapConfig(omega0=100.0, nu=1.0, delta=0.05)
        nu_r = math.sqrt(3.0)
        schedule = laser_schedule(config)
        assert schedule.omega_1 == pytest.approx(100.0 + nu_r - 0.05)
        assert schedule.omega_1_prime == pytest.approx(100.0 - nu_r + 0.05)
        assert schedule.omega_2 == pytest.approx(100.0 - nu_r + 0.05)
        assert schedule.omega_2_prime == pytest.approx(100.0 + nu_r - 0.05)
        assert schedule.omega == pytest.approx(99.0)
        assert schedule.omega_prime == pytest.approx(101.0)
        assert (schedule.phi, schedule.phi_prime) == (math.pi, 0.0)
        assert (schedule.phi_1, schedule.phi_1_prime) == (math.pi / 2, math.pi / 2)
        assert (schedule.phi_2, schedule.phi_2_prime) == (0.0, 0.0)

    def test_sideband_splitting(self):
        config = IonTrapConfig(delta=0.07)
        schedule = laser_schedule(config)
        assert schedule.omega_1 - schedule.omega_1_prime == pytest.approx(2 * (config.nu_r - 0.07))

    def test_resonant_without_detuning(self):
        config = IonTrapConfig(delta=0.0, Omega=0.0, omega0=5.0)
        assert laser_schedule(config).omega_1 == pytest.approx(5.0 + config.nu_r)


# ===== TESTS: Hamiltonians =====


class TestInteractionHamiltonian:
    """Tests for the interaction-picture Hamiltonian."""

    def test_zero_couplings(self):
        config = IonTrapConfig(Omega=0.0, Omega_tilde=0.0, n_a=4, n_b=4)
        assert np.max(np.abs(interaction_hamiltonian(config, 3.7).full())) == 0.0

    def test_stretch_term_at_t_zero(self):
        config = IonTrapConfig(Omega_tilde=0.0, n_a=4, n_b=4)
        reg = register_operators(config)
        expected = config.stretch_coupling * reg.coupling_spin * (reg.b.dag() + reg.b)
        assert np.allclose(interaction_hamiltonian(config, 0.0).full(), expected.full())

    def test_hermitian(self, small_trap, rng):
        for t in rng.uniform(0.0, 500.0, size=50):
            h = interaction_hamiltonian(small_trap, float(t)).full()
            assert np.max(np.abs(h - h.conj().T)) <= 1e-13

    def test_coupling_spin(self, small_trap):
        reg = register_operators(small_trap)
        expected = tensor(sigmax(), qeye(2), qeye(10), qeye(6)) - tensor(qeye(2), sigmay(), qeye(10), qeye(6))
        assert np.allclose(reg.coupling_spin.full(), expected.full())


class TestEffectiveHamiltonian:
    """Tests for c (1 x sigma_x) p - m c^2 (sigma_x x sigma_y)."""

    def test_kinetic_only_without_stretch_drive(self, small_trap):
        config = small_trap.model_copy(update={"Omega": 0.0})
        reg = register_operators(config)
        expected = config.c_sim * reg.kinetic_spin * reg.momentum
        assert np.allclose(effective_hamiltonian(config).full(), expected.full())

    def test_mass_spectrum(self):
        config = IonTrapConfig(Omega_tilde=0.0, n_a=4, n_b=4)
        eigenvalues = np.linalg.eigvalsh(effective_hamiltonian(config).full())
        mc2 = config.mc2_sim
        assert np.allclose(eigenvalues[:32], -mc2)
        assert np.allclose(eigenvalues[32:], mc2)

    def test_reality_preserving(self, small_trap):
        generator = -1j * effective_hamiltonian(small_trap).full()
        assert np.max(np.abs(generator.imag)) <= 1e-15

    def test_pseudo_helicity_conserved(self):
        config = IonTrapConfig(Omega=0.2, Omega_tilde=0.05, n_a=12, n_b=4)
        state = lifted_product_state(config, [1, 1], 0.5j).full().ravel()
        h = effective_hamiltonian(config).full()
        sigma = pseudo_helicity_operator(config).full()
        start = np.real(np.vdot(state, sigma @ state))
        for t in (50.0, 150.0, 300.0):
            evolved = expm(-1j * t * h) @ state
            assert abs(np.real(np.vdot(evolved, sigma @ evolved)) - start) <= 1e-4

    def test_encoding_frame_flips_mass_sign(self, small_trap):
        frame = encoding_frame(small_trap).full()
        reg = register_operators(small_trap)
        flipped = small_trap.c_sim * reg.kinetic_spin * reg.momentum + small_trap.mc2_sim * reg.mass_spin
        assert np.allclose(frame.conj().T @ effective_hamiltonian(small_trap).full() @ frame, flipped.full())


# ===== TESTS: States =====


class TestLiftedRegister:
    """Tests for encoded register states."""

    def test_amplitudes_real(self, small_trap):
        vector = lifted_product_state(small_trap, [1, 1j], 0.5j).full()
        assert np.max(np.abs(vector.imag)) == 0.0
        assert np.linalg.norm(vector) == pytest.approx(1.0)

    def test_decode(self, small_trap):
        state = lifted_product_state(small_trap, [1, 1j], 0.5j)
        chi = np.array([1, 1j]) / math.sqrt(2)
        motion = coherent(10, 0.5j).full().ravel()
        expected = np.einsum("s,a,b->sab", chi, motion, np.eye(6)[0])
        assert np.allclose(decode_register(state, small_trap), expected)

    def test_pseudo_helicity_reads_physical_value(self, small_trap):
        state = lifted_product_state(small_trap, [1, 1], 0.5j)
        # <sigma_x> = 1 and <p> = Im(alpha) / Delta = 0.5
        assert pseudo_helicity_direct(state, small_trap) == pytest.approx(0.5, abs=1e-6)

    def test_truncation_leakage(self, small_trap):
        assert truncation_leakage(product_state(small_trap, [1, 0], [1, 0]).full().ravel(), small_trap) < 1e-12


# ===== TESTS: Integration =====


class TestIntegrate:
    """Tests for midpoint exponential stepping."""

    def test_static_without_couplings(self):
        config = IonTrapConfig(Omega=0.0, Omega_tilde=0.0, n_a=4, n_b=4)
        state = product_state(config, [1, 1j], [1, 0])
        trajectory = integrate(state, config, 10.0, 1.0)
        assert np.array_equal(trajectory.vectors[-1], state.full().ravel())

    def test_time_step_bound(self, small_trap):
        state = product_state(small_trap, [1, 0], [1, 0])
        with pytest.raises(ValueError, match="exceeds"):
            integrate(state, small_trap, 10.0, 2 * max_time_step(small_trap))

    def test_whole_number_of_steps(self, small_trap):
        state = product_state(small_trap, [1, 0], [1, 0])
        with pytest.raises(ValueError, match="whole number"):
            integrate(state, small_trap, 1.5, 1.0)

    def test_nonpositive_step(self, small_trap):
        state = product_state(small_trap, [1, 0], [1, 0])
        with pytest.raises(ValueError):
            integrate(state, small_trap, 1.0, 0.0)

    def test_norm_conserved(self, small_trap):
        state = lifted_product_state(small_trap, [1, 1], 0.5j)
        dt, stride = loop_step(small_trap)
        trajectory = integrate(state, small_trap, 256 * dt, dt, stride)
        assert trajectory.norm_drift() <= 1e-8
        assert len(trajectory.times) == 256 // stride + 1

    def test_self_convergence(self):
        config = with_ratio(6.0, Omega_tilde=0.01 / 0.06, n_a=8, n_b=8)
        state = lifted_product_state(config, [1, 1], 0.0)
        t_final = loops(config, 0.375)
        finals = [
            integrate(state, config, t_final, loops(config, 1) / steps).vectors[-1] for steps in (128, 256, 512)
        ]
        coarse = np.linalg.norm(finals[0] - finals[1])
        fine = np.linalg.norm(finals[1] - finals[2])
        assert 4 / 1.5 <= coarse / fine <= 4 * 1.5

    def test_truncation_abort(self):
        config = with_ratio(2.0, n_a=6, n_b=4)
        state = lifted_product_state(config, [1, 1], 0.0)
        dt, _ = loop_step(config)
        with pytest.raises(TruncationError, match="increase Fock truncation") as excinfo:
            integrate(state, config, loops(config, 1), dt)
        assert excinfo.value.partial.times[0] == 0.0
        assert excinfo.value.leakage > 1e-4

    def test_truncated_initial_state_aborts(self):
        config = IonTrapConfig(n_a=4, n_b=4)
        state = product_state(config, [1, 0], [1, 0], beta=2.0)
        with pytest.raises(TruncationError):
            integrate(state, config, 1.0, 1.0)

    def test_loop_step_divides_loop(self, small_trap):
        dt, stride = loop_step(small_trap, steps_per_loop=128, samples_per_loop=8)
        assert loops(small_trap, 1) / dt == pytest.approx(128)
        assert stride == 16


class TestDispersiveFidelity:
    """Full interaction-picture dynamics against the effective Hamiltonian."""

    def test_large_detuning(self, small_trap):
        state = lifted_product_state(small_trap, [1, 1], 0.5j)
        series = dispersive_fidelity(small_trap, state, loops(small_trap, 4))
        assert series.minimum >= 0.985
        assert series.norm_drift <= 1e-8

    def test_without_stretch_drive(self):
        config = IonTrapConfig(Omega=0.0, n_a=10, n_b=6)
        state = lifted_product_state(config, [1, 1], 0.5j)
        assert dispersive_fidelity(config, state, loops(config, 4)).minimum >= 0.999

    def test_small_detuning_degrades(self):
        near = with_ratio(3.0, n_a=6, n_b=14)
        far = with_ratio(30.0, n_a=6, n_b=14)
        state = lifted_product_state(near, [1, 1], 0.0)
        degraded = dispersive_fidelity(near, state, loops(near, 1)).minimum
        assert degraded < dispersive_fidelity(far, state, loops(far, 1)).minimum
        assert degraded < 0.9

    def test_deficit_scales_with_coupling_ratio_squared(self):
        coupling = DEFAULT_DELTA / 30
        deficits = []
        for delta in (0.025, 0.05, 0.1):
            config = IonTrapConfig(delta=delta, Omega=coupling / ETA_R, Omega_tilde=0.0, n_a=4, n_b=8)
            state = lifted_product_state(config, [1, 1], 0.0)
            series = dispersive_fidelity(config, state, loops(config, 1), samples_per_loop=16)
            deficits.append(1 - series.minimum)
        # (eta_r Omega / delta)^2 falls by 4 each time delta doubles
        for larger, smaller in zip(deficits, deficits[1:]):
            assert 2.0 <= larger / smaller <= 8.0

    def test_truncation_robustness(self):
        small = IonTrapConfig(n_a=10, n_b=6)
        large = IonTrapConfig(n_a=14, n_b=10)
        finals = [
            dispersive_fidelity(config, lifted_product_state(config, [1, 1], 0.5j), loops(config, 2)).final
            for config in (small, large)
        ]
        assert abs(finals[0] - finals[1]) <= 1e-4

    def test_compare_reuses_trajectory(self, small_trap):
        state = lifted_product_state(small_trap, [1, 1], 0.5j)
        dt, stride = loop_step(small_trap)
        trajectory = integrate(state, small_trap, 128 * dt, dt, stride)
        series = compare_with_effective(small_trap, state, trajectory)
        assert series.fidelities[0] == pytest.approx(1.0)
        assert len(series.times) == 9


# ===== TESTS: Measurement protocol =====


class TestMeasureAk:
    """Tests for the U2 displacement and sigma_z readout."""

    def test_vacuum_slope_vanishes(self, small_trap):
        state = product_state(small_trap, [1, 0], [1, 0], 0.0)
        assert slope_Ak(state, small_trap) == pytest.approx(0.0, abs=1e-9)

    def test_slope_matches_direct_expectation(self, small_trap):
        state = product_state(small_trap, [1, 0], [1, 1], 0.5j)
        direct = kinetic_correlator(state, small_trap)
        assert direct == pytest.approx(0.5, abs=1e-6)
        assert slope_Ak(state, small_trap) == pytest.approx(direct, rel=0.02)

    def test_identity_at_zero(self, small_trap):
        state = product_state(small_trap, [1, 0], [1, 0], 0.5j)
        assert measure_Ak(state, 0.0, small_trap) == pytest.approx(1.0)

    def test_range_checked(self, small_trap):
        state = product_state(small_trap, [1, 0], [1, 0])
        with pytest.raises(ProtocolRangeError):
            measure_Ak(state, 0.6, small_trap)


class TestMeasureU1:
    """Tests for the U1 displacement and sigma_z x sigma_x readout."""

    def test_eigenstate_slope(self, small_trap):
        # (1, i) x (1, 1) is the +1 eigenstate of sigma_y x sigma_x
        state = product_state(small_trap, [1, 1j], [1, 1], 0.5j)
        assert spin_correlator(state, small_trap) == pytest.approx(0.5, abs=1e-6)
        assert slope_U1(state, small_trap) == pytest.approx(2 * 0.5, rel=0.02)

    def test_readout_at_zero(self, small_trap):
        state = product_state(small_trap, [1, 0], [1, 1], 0.5j)
        expected = expect(tensor(sigmaz(), sigmax(), qeye(10), qeye(6)), state)
        assert measure_U1_correlation(state, 0.0, small_trap) == pytest.approx(expected)
        assert expected == pytest.approx(1.0)

    def test_vacuum_slope_vanishes(self, small_trap):
        state = product_state(small_trap, [1, 1j], [1, 1], 0.0)
        assert slope_U1(state, small_trap) == pytest.approx(0.0, abs=1e-9)

    def test_range_checked(self, small_trap):
        state = product_state(small_trap, [1, 0], [1, 0])
        with pytest.raises(ProtocolRangeError):
            measure_U1_correlation(state, -0.51, small_trap)


class TestPseudoHelicityProtocol:
    """Tests for the assembled pseudo-helicity measurement."""

    def test_vacuum(self, small_trap):
        state = lifted_product_state(small_trap, [1, 1], 0.0)
        assert pseudo_helicity_protocol(state, small_trap) == pytest.approx(0.0, abs=1e-9)

    def test_lifted_state_matches_direct(self, small_trap):
        state = lifted_product_state(small_trap, [1, 1], 0.5j)
        direct = pseudo_helicity_direct(state, small_trap)
        assert pseudo_helicity_protocol(state, small_trap) == pytest.approx(direct, rel=0.03)

    def test_sign_follows_momentum(self, small_trap):
        forward = pseudo_helicity_protocol(lifted_product_state(small_trap, [1, 1], 0.5j), small_trap)
        backward = pseudo_helicity_protocol(lifted_product_state(small_trap, [1, 1], -0.5j), small_trap)
        assert forward > 0
        assert backward == pytest.approx(-forward, rel=1e-6)

    def test_random_product_states(self, small_trap, rng):
        for _ in range(10):
            spins = [rng.normal(size=2) + 1j * rng.normal(size=2) for _ in range(2)]
            alpha = complex(*rng.uniform(-1.0, 1.0, size=2))
            state = product_state(small_trap, spins[0], spins[1], alpha)
            direct = pseudo_helicity_direct(state, small_trap)
            assert abs(pseudo_helicity_protocol(state, small_trap) - direct) <= 0.03 * abs(direct) + 1e-6


# ===== TESTS: Relativistic ratio =====


class TestGammaRatio:
    """Tests for gamma = |m c^2 / <c p>|."""

    def test_ultrarelativistic_without_mass(self, small_trap):
        config = small_trap.model_copy(update={"Omega": 0.0})
        state = product_state(config, [1, 0], [1, 0], 0.5j)
        assert gamma_ratio(config, state) == 0.0

    def test_quadratic_in_omega(self, small_trap):
        state = product_state(small_trap, [1, 0], [1, 0], 0.5j)
        doubled = small_trap.model_copy(update={"Omega": 2 * small_trap.Omega})
        assert gamma_ratio(doubled, state) / gamma_ratio(small_trap, state) == pytest.approx(4.0)

    def test_real_alpha_is_nonrelativistic_limit(self, small_trap):
        state = product_state(small_trap, [1, 0], [1, 0], 0.5)
        assert gamma_ratio(small_trap, state) == math.inf

    def test_closed_form_agrees(self, small_trap):
        state = product_state(small_trap, [1, 0], [1, 0], 0.5j)
        closed = gamma_closed_form(small_trap, mean_quadrature(state, small_trap))
        assert gamma_ratio(small_trap, state) == pytest.approx(closed, rel=1e-10)

    def test_encoded_register(self, small_trap):
        state = lifted_product_state(small_trap, [1, 1], 0.5j)
        assert gamma_ratio(small_trap, state) == math.inf
        assert mean_quadrature(state, small_trap, encoded=True) == pytest.approx(1.0, abs=1e-6)
        assert gamma_ratio(small_trap, state, encoded=True) == pytest.approx(
            gamma_closed_form(small_trap, 1.0), rel=1e-5
        )

    def test_default_point_balances_mass_and_momentum(self):
        config = IonTrapConfig(n_a=12, n_b=4)
        state = lifted_product_state(config, [1, 1], 1j)
        assert gamma_ratio(config, state, encoded=True) == pytest.approx(1.0, rel=1e-3)

    def test_effective_params(self, small_trap):
        params = effective_params(small_trap, product_state(small_trap, [1, 0], [1, 0], 0.5))
        assert params.c_sim == small_trap.c_sim
        assert params.gamma == math.inf
        assert effective_params(small_trap).gamma is None
