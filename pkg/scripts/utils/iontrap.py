"""
Two-ion register simulating the lifted Majorana equation.

Register order: qubit1 (ancilla) x qubit2 (spinor) x Fock(n_a, COM mode)
x Fock(n_b, stretch mode). The interaction-picture Hamiltonian

    H(t) = eta_r Omega S (b+ e^{i delta t} + b e^{-i delta t})
           + eta Omega~ (1 x sigma_x) i(a+ - a),   S = sigma_x x 1 - 1 x sigma_y

is integrated in the truncated Fock space and compared with the effective
Hamiltonian c (1 x sigma_x) p - m c^2 (sigma_x x sigma_y) reached in the
dispersive regime. The module also simulates the displacement-and-readout
protocol used to measure the pseudo-helicity.
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from qutip import Qobj, basis, coherent, destroy, expect, qeye, sigmax, sigmay, sigmaz, tensor
from scipy.linalg import expm

from .errors import ProtocolRangeError, TruncationError
from .hilbert_lift import lift_linear_operator, lift_observable, lift_state, reconstruct

logger = logging.getLogger(__name__)

TRUNCATION_WARN = 1e-6
TRUNCATION_ABORT = 1e-4
NORM_TOLERANCE = 1e-8
MAX_PROBE_K = 0.5  # in units of Delta

DEFAULT_ETA = 0.06
DEFAULT_DELTA = 0.05
DEFAULT_DETUNING_RATIO = 30.0
_DEFAULT_ETA_R = DEFAULT_ETA / 3**0.25
DEFAULT_OMEGA = DEFAULT_DELTA / (DEFAULT_DETUNING_RATIO * _DEFAULT_ETA_R)
# mass and kinetic energy balanced (gamma = 1) for a coherent state |alpha = 1i>
DEFAULT_OMEGA_TILDE = (_DEFAULT_ETA_R * DEFAULT_OMEGA) ** 2 / (DEFAULT_DELTA * DEFAULT_ETA)


# === Configuration ===


class IonTrapConfig(BaseModel):
    """Trap, laser and truncation parameters (hbar = 1)."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    nu: float = Field(default=1.0, gt=0.0)
    nu_r: Optional[float] = None
    Omega: float = Field(default=DEFAULT_OMEGA, ge=0.0)
    Omega_tilde: float = Field(default=DEFAULT_OMEGA_TILDE, ge=0.0)
    delta: float = Field(default=DEFAULT_DELTA, ge=0.0)
    eta: float = Field(default=DEFAULT_ETA, gt=0.0, le=0.2)
    eta_r: Optional[float] = None
    Delta: float = Field(default=1.0, gt=0.0)
    omega0: float = 0.0
    n_a: int = Field(default=24, ge=4)
    n_b: int = Field(default=8, ge=4)

    @model_validator(mode="before")
    @classmethod
    def derive_stretch_parameters(cls, data):
        if isinstance(data, dict):
            data = dict(data)
            if data.get("nu_r") is None:
                data["nu_r"] = math.sqrt(3.0) * float(data.get("nu", 1.0))
            if data.get("eta_r") is None:
                data["eta_r"] = float(data.get("eta", DEFAULT_ETA)) / 3**0.25
        return data

    @model_validator(mode="after")
    def stretch_mode_relations(self) -> "IonTrapConfig":
        if abs(self.nu_r - math.sqrt(3.0) * self.nu) > 1e-12 * max(1.0, self.nu):
            raise ValueError(f"nu_r must equal sqrt(3)*nu, got nu_r={self.nu_r} for nu={self.nu}")
        if abs(self.eta_r * 3**0.25 - self.eta) > 1e-12:
            raise ValueError(f"eta_r*3^(1/4) must equal eta, got eta_r={self.eta_r} for eta={self.eta}")
        if self.delta == 0.0 and self.Omega > 0.0:
            raise ValueError(f"delta must be positive when Omega > 0: the mass term needs a detuned stretch drive (Omega={self.Omega})")
        return self

    @classmethod
    def default(cls) -> "IonTrapConfig":
        """delta/(eta_r Omega) = 30, gamma = 1 for |alpha = 1i>, n_a = 24, n_b = 8."""
        return cls()

    @property
    def ion_mass(self) -> float:
        """m' from Delta = sqrt(hbar / (4 m' nu))."""
        return 1.0 / (4.0 * self.nu * self.Delta**2)

    @property
    def stretch_coupling(self) -> float:
        return self.eta_r * self.Omega

    @property
    def kinetic_coupling(self) -> float:
        return self.eta * self.Omega_tilde

    @property
    def c_sim(self) -> float:
        return 2.0 * self.eta * self.Delta * self.Omega_tilde

    @property
    def mc2_sim(self) -> float:
        if self.Omega == 0.0:
            return 0.0
        if self.delta == 0.0:
            raise ValueError("the effective mass needs a nonzero detuning")
        return 2.0 * self.eta_r**2 * self.Omega**2 / self.delta

    @property
    def dims(self) -> list[int]:
        return [2, 2, self.n_a, self.n_b]

    @property
    def dimension(self) -> int:
        return 4 * self.n_a * self.n_b


class LaserSchedule(BaseModel):
    """Laser frequencies and phases that produce the interaction Hamiltonian."""

    omega_1: float
    omega_1_prime: float
    omega_2: float
    omega_2_prime: float
    omega: float
    omega_prime: float
    phi: float
    phi_prime: float
    phi_1: float
    phi_1_prime: float
    phi_2: float
    phi_2_prime: float


class EffectiveParams(BaseModel):
    model_config = ConfigDict(ser_json_inf_nan="strings")

    c_sim: float
    mc2_sim: float
    gamma: Optional[float] = None


def laser_schedule(config: IonTrapConfig) -> LaserSchedule:
    w0, nu, nu_r, delta = config.omega0, config.nu, config.nu_r, config.delta
    return LaserSchedule(
        omega_1=w0 + nu_r - delta,
        omega_1_prime=w0 - nu_r + delta,
        omega_2=w0 - nu_r + delta,
        omega_2_prime=w0 + nu_r - delta,
        omega=w0 - nu,
        omega_prime=w0 + nu,
        phi=math.pi,
        phi_prime=0.0,
        phi_1=math.pi / 2,
        phi_1_prime=math.pi / 2,
        phi_2=0.0,
        phi_2_prime=0.0,
    )


# === Operators ===


@dataclass(frozen=True)
class Register:
    """Operators on the truncated register, built once per config."""

    a: Qobj
    b: Qobj
    quadrature: Qobj  # i(a+ - a)
    momentum: Qobj  # i(a+ - a) / (2 Delta)
    coupling_spin: Qobj  # S = sigma_x x 1 - 1 x sigma_y
    kinetic_spin: Qobj  # 1 x sigma_x
    mass_spin: Qobj  # sigma_x x sigma_y


def _on_spins(first: Qobj, second: Qobj, config: IonTrapConfig) -> Qobj:
    return tensor(first, second, qeye(config.n_a), qeye(config.n_b))


@lru_cache(maxsize=16)
def register_operators(config: IonTrapConfig) -> Register:
    a = tensor(qeye(2), qeye(2), destroy(config.n_a), qeye(config.n_b))
    b = tensor(qeye(2), qeye(2), qeye(config.n_a), destroy(config.n_b))
    quadrature = 1j * (a.dag() - a)
    return Register(
        a=a,
        b=b,
        quadrature=quadrature,
        momentum=quadrature / (2.0 * config.Delta),
        coupling_spin=_on_spins(sigmax(), qeye(2), config) - _on_spins(qeye(2), sigmay(), config),
        kinetic_spin=_on_spins(qeye(2), sigmax(), config),
        mass_spin=_on_spins(sigmax(), sigmay(), config),
    )


def interaction_hamiltonian(config: IonTrapConfig, t: float) -> Qobj:
    reg = register_operators(config)
    stretch = reg.coupling_spin * (reg.b.dag() * np.exp(1j * config.delta * t) + reg.b * np.exp(-1j * config.delta * t))
    return config.stretch_coupling * stretch + config.kinetic_coupling * reg.kinetic_spin * reg.quadrature


def effective_hamiltonian(config: IonTrapConfig) -> Qobj:
    """c (1 x sigma_x) p - m c^2 (sigma_x x sigma_y), identity on both modes otherwise."""
    reg = register_operators(config)
    return config.c_sim * reg.kinetic_spin * reg.momentum - config.mc2_sim * reg.mass_spin


def pseudo_helicity_operator(config: IonTrapConfig) -> Qobj:
    """(1 x sigma_x - sigma_y x sigma_x) p on the register."""
    reg = register_operators(config)
    return (reg.kinetic_spin - _on_spins(sigmay(), sigmax(), config)) * reg.momentum


def encoding_frame(config: IonTrapConfig) -> Qobj:
    """J = Theta(i 1) = -i sigma_y x 1 on the two qubits.

    J^dagger H_eff J flips the sign of the mass term only; eliminating the
    stretch mode from the interaction Hamiltonian lands in that frame.
    """
    lifted_i = lift_linear_operator(1j * np.eye(2)).matrix
    return tensor(Qobj(lifted_i, dims=[[2, 2], [2, 2]]), qeye(config.n_a), qeye(config.n_b))


# === States ===


def _register_ket(vector: np.ndarray, config: IonTrapConfig) -> Qobj:
    return Qobj(np.asarray(vector, dtype=complex).reshape(-1, 1), dims=[config.dims, [1, 1, 1, 1]])


def product_state(config: IonTrapConfig, spin1, spin2, alpha: complex = 0.0, beta: complex = 0.0) -> Qobj:
    """Spin1 x spin2 x coherent(alpha) x coherent(beta)."""
    spins = [Qobj(np.asarray(s, dtype=complex).reshape(2, 1)).unit() for s in (spin1, spin2)]
    return tensor(spins[0], spins[1], coherent(config.n_a, alpha), coherent(config.n_b, beta))


def lifted_product_state(config: IonTrapConfig, spinor, alpha: complex) -> Qobj:
    """Encoded register lift(chi x |alpha>) x |0>_b.

    qubit1 carries the real/imaginary split of the spinor-and-COM state, so the
    register amplitudes are real and Sigma~ reads the physical pseudo-helicity.
    """
    chi = np.asarray(spinor, dtype=complex)
    chi = chi / np.linalg.norm(chi)
    motion = coherent(config.n_a, alpha).full().ravel()
    physical = np.kron(chi, motion)
    lifted = lift_state(physical)
    vacuum = basis(config.n_b, 0).full().ravel()
    return _register_ket(np.kron(lifted, vacuum), config)


def decode_register(state: Qobj, config: IonTrapConfig) -> np.ndarray:
    """Complex spinor x COM x stretch amplitudes, psi = M Psi on qubit1."""
    vector = state.full().ravel()
    return reconstruct(vector.reshape(2, -1)).reshape(2, config.n_a, config.n_b)


def _expectation(operator: Qobj, state: Qobj) -> float:
    return float(np.real(expect(operator, state)))


# === Integration ===


@dataclass
class Trajectory:
    times: np.ndarray
    vectors: np.ndarray
    dims: list[int]

    @property
    def states(self) -> list[Qobj]:
        return [Qobj(v.reshape(-1, 1), dims=[self.dims, [1, 1, 1, 1]]) for v in self.vectors]

    @property
    def final(self) -> Qobj:
        return self.states[-1]

    def norm_drift(self) -> float:
        return float(np.max(np.abs(np.linalg.norm(self.vectors, axis=1) - 1.0)))


def truncation_leakage(vector: np.ndarray, config: IonTrapConfig) -> float:
    """Largest population in the top two Fock levels of either mode."""
    amplitudes = np.abs(vector.reshape(2, 2, config.n_a, config.n_b)) ** 2
    top_a = float(np.sum(amplitudes[:, :, -2:, :]))
    top_b = float(np.sum(amplitudes[:, :, :, -2:]))
    return max(top_a, top_b)


def max_time_step(config: IonTrapConfig) -> float:
    rate = max(config.delta, config.stretch_coupling, config.kinetic_coupling)
    return math.inf if rate == 0.0 else 0.05 / rate


def _loop_steps(config: IonTrapConfig, dt: float) -> Optional[int]:
    """Steps per detuning loop when dt divides 2 pi/delta, else None."""
    if config.delta == 0.0:
        return 1
    steps = 2 * math.pi / (config.delta * dt)
    nearest = round(steps)
    return int(nearest) if nearest > 0 and abs(steps - nearest) <= 1e-9 * steps else None


def integrate(
    state: Qobj,
    config: IonTrapConfig,
    t_final: float,
    dt: float,
    sample_every: int = 1,
) -> Trajectory:
    """Midpoint exponential stepping: psi <- exp(-i dt H(t + dt/2)) psi.

    When dt divides the detuning loop the step propagators repeat and are
    cached by phase index.
    """
    if dt <= 0.0:
        raise ValueError(f"time step must be positive, got {dt}")
    if dt > max_time_step(config) * (1 + 1e-12):
        raise ValueError(f"dt={dt} exceeds 0.05/max(delta, eta_r Omega, eta Omega~) = {max_time_step(config)}")
    n_steps = round(t_final / dt)
    if abs(n_steps * dt - t_final) > 1e-9 * max(1.0, abs(t_final)):
        raise ValueError(f"t_final={t_final} is not a whole number of steps of {dt}")

    period = _loop_steps(config, dt)
    cache: dict[int, np.ndarray] = {}

    def propagator(n: int) -> np.ndarray:
        key = n % period if period else None
        if key in cache:
            return cache[key]
        midpoint = ((n if key is None else key) + 0.5) * dt
        matrix = expm(-1j * dt * interaction_hamiltonian(config, midpoint).full())
        if key is not None:
            cache[key] = matrix
        return matrix

    vector = state.full().ravel().astype(complex)
    times = [0.0]
    vectors = [vector.copy()]
    leakage = truncation_leakage(vector, config)
    if leakage > TRUNCATION_ABORT:
        raise TruncationError(leakage, 0.0, partial=Trajectory(np.array(times), np.array(vectors), config.dims))
    warned = False
    logger.debug(f"Integrating {n_steps} steps of dt={dt} on a {config.dimension}-dimensional register")
    for n in range(n_steps):
        vector = propagator(n) @ vector
        if (n + 1) % sample_every and n + 1 != n_steps:
            continue
        t = (n + 1) * dt
        leakage = truncation_leakage(vector, config)
        if leakage > TRUNCATION_ABORT:
            partial = Trajectory(np.array(times), np.array(vectors), config.dims)
            raise TruncationError(leakage, t, partial=partial)
        if leakage > TRUNCATION_WARN and not warned:
            logger.warning(f"Top Fock levels hold {leakage:.2e} of the population at t={t:.6g}")
            warned = True
        norm = np.linalg.norm(vector)
        if abs(norm - 1.0) > NORM_TOLERANCE:
            logger.warning(f"Register norm drifted to {norm!r} at t={t:.6g}")
        times.append(t)
        vectors.append(vector.copy())
    return Trajectory(np.array(times), np.array(vectors), config.dims)


@dataclass
class FidelitySeries:
    times: np.ndarray
    fidelities: np.ndarray
    norm_drift: float

    @property
    def minimum(self) -> float:
        return float(np.min(self.fidelities))

    @property
    def final(self) -> float:
        return float(self.fidelities[-1])


def loop_step(config: IonTrapConfig, steps_per_loop: int = 128, samples_per_loop: int = 8) -> tuple[float, int]:
    """Time step that divides the detuning loop, and the matching sample stride."""
    if config.delta == 0.0:
        return min(max_time_step(config), 1.0), 1
    loop = 2 * math.pi / config.delta
    steps = max(steps_per_loop, math.ceil(loop / max_time_step(config)))
    steps = samples_per_loop * math.ceil(steps / samples_per_loop)
    return 2 * math.pi / (config.delta * steps), steps // samples_per_loop


def dispersive_fidelity(
    config: IonTrapConfig,
    initial: Qobj,
    t_final: float,
    steps_per_loop: int = 128,
    samples_per_loop: int = 8,
) -> FidelitySeries:
    """|<psi_full(t)|psi_eff(t)>|^2 with psi_eff(t) = J^dagger exp(-i H_eff t) J psi0."""
    b_occupation = _expectation(register_operators(config).b.dag() * register_operators(config).b, initial)
    if b_occupation > 1.0:
        logger.warning(f"Stretch mode starts with <b+b> = {b_occupation:.3f}; the dispersive picture assumes <= 1")
    dt, sample_every = loop_step(config, steps_per_loop, samples_per_loop)
    n_steps = max(1, math.ceil(t_final / dt - 1e-9))
    full = integrate(initial, config, n_steps * dt, dt, sample_every)
    return compare_with_effective(config, initial, full)


def compare_with_effective(config: IonTrapConfig, initial: Qobj, full: Trajectory) -> FidelitySeries:
    frame = encoding_frame(config).full()
    effective = effective_hamiltonian(config).full()
    vector = frame @ initial.full().ravel()
    steps: dict[float, np.ndarray] = {}
    fidelities = []
    previous = 0.0
    for t, full_vector in zip(full.times, full.vectors):
        if t > previous:
            interval = round(t - previous, 12)
            if interval not in steps:
                steps[interval] = expm(-1j * (t - previous) * effective)
            vector = steps[interval] @ vector
            previous = t
        fidelities.append(abs(np.vdot(frame @ full_vector, vector)) ** 2)
    return FidelitySeries(full.times, np.array(fidelities), full.norm_drift())


# === Pseudo-helicity measurement protocol ===


@lru_cache(maxsize=32)
def _probe_unitary(config: IonTrapConfig, which: str, k: float) -> np.ndarray:
    reg = register_operators(config)
    if which == "U2":
        # readout after U2(k)^dagger equals <A(k)>
        generator = _on_spins(qeye(2), sigmay(), config) * reg.momentum / 2
        return expm(1j * k * generator.full())
    generator = _on_spins(sigmax(), qeye(2), config) * reg.momentum
    return expm(-1j * k * generator.full())


def _check_probe_range(k: float, config: IonTrapConfig) -> None:
    if abs(k) > MAX_PROBE_K * config.Delta:
        raise ProtocolRangeError(f"|k|={abs(k)} exceeds {MAX_PROBE_K}*Delta for the truncated motional space")


def _probe_readout(state: Qobj, k: float, config: IonTrapConfig, which: str, readout: Qobj) -> float:
    _check_probe_range(k, config)
    vector = state.full().ravel()
    if k != 0.0:
        vector = _probe_unitary(config, which, float(k)) @ vector
    return float(np.real(np.vdot(vector, readout.full() @ vector)))


def measure_Ak(state: Qobj, k: float, config: IonTrapConfig) -> float:
    """<1 x sigma_z> after the state-dependent displacement on ion 2."""
    return _probe_readout(state, k, config, "U2", _on_spins(qeye(2), sigmaz(), config))


def measure_U1_correlation(state: Qobj, k: float, config: IonTrapConfig) -> float:
    """<sigma_z x sigma_x> after the displacement on ion 1."""
    return _probe_readout(state, k, config, "U1", _on_spins(sigmaz(), sigmax(), config))


def _central_slope(measure, state: Qobj, config: IonTrapConfig) -> float:
    h = 1e-3 * config.Delta
    return (measure(state, h, config) - measure(state, -h, config)) / (2 * h)


def slope_Ak(state: Qobj, config: IonTrapConfig) -> float:
    """d<A(k)>/dk at k = 0, equal to <(1 x sigma_x) p>."""
    return _central_slope(measure_Ak, state, config)


def slope_U1(state: Qobj, config: IonTrapConfig) -> float:
    """d<sigma_z x sigma_x>/dk at k = 0, equal to 2<(sigma_y x sigma_x) p>."""
    return _central_slope(measure_U1_correlation, state, config)


def pseudo_helicity_protocol(state: Qobj, config: IonTrapConfig) -> float:
    return slope_Ak(state, config) - slope_U1(state, config) / 2


def kinetic_correlator(state: Qobj, config: IonTrapConfig) -> float:
    """Direct <(1 x sigma_x) p>."""
    reg = register_operators(config)
    return _expectation(reg.kinetic_spin * reg.momentum, state)


def spin_correlator(state: Qobj, config: IonTrapConfig) -> float:
    """Direct <(sigma_y x sigma_x) p>."""
    return _expectation(_on_spins(sigmay(), sigmax(), config) * register_operators(config).momentum, state)


def pseudo_helicity_direct(state: Qobj, config: IonTrapConfig) -> float:
    return _expectation(pseudo_helicity_operator(config), state)


# === Relativistic ratio ===


def mean_quadrature(state: Qobj, config: IonTrapConfig, encoded: bool = False) -> float:
    """<i(a+ - a)>, read through the lifted observable when the register is encoded."""
    if not encoded:
        return _expectation(register_operators(config).quadrature, state)
    a = destroy(config.n_a).full()
    physical = np.kron(np.eye(2), 1j * (a.conj().T - a))
    observable = np.kron(lift_observable(physical).matrix, np.eye(config.n_b))
    vector = state.full().ravel()
    return float(np.real(np.vdot(vector, observable @ vector)))


def gamma_closed_form(config: IonTrapConfig, quadrature_mean: float) -> float:
    if config.Omega == 0.0:
        return 0.0
    if config.delta == 0.0:
        raise ValueError("gamma needs a nonzero detuning")
    denominator = abs(quadrature_mean) * config.kinetic_coupling / config.delta
    if denominator == 0.0:
        return math.inf
    return 2 * (config.stretch_coupling / config.delta) ** 2 / denominator


def gamma_ratio(config: IonTrapConfig, state: Qobj, encoded: bool = False) -> float:
    """gamma = |m c^2 / <c p>|; +inf when <c p> vanishes (nonrelativistic limit)."""
    mc2 = config.mc2_sim
    if mc2 == 0.0:
        return 0.0
    kinetic = abs(config.c_sim * mean_quadrature(state, config, encoded) / (2 * config.Delta))
    return math.inf if kinetic == 0.0 else mc2 / kinetic


def effective_params(config: IonTrapConfig, state: Optional[Qobj] = None, encoded: bool = False) -> EffectiveParams:
    gamma = gamma_ratio(config, state, encoded) if state is not None else None
    return EffectiveParams(c_sim=config.c_sim, mc2_sim=config.mc2_sim, gamma=gamma)
