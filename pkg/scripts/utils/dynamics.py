"""
Split-operator propagation of 1D spinor fields.

Two-component Dirac fields and four-component lifted fields (lifted Dirac,
Majorana, mixed Dirac/Majorana mass) are sampled on a periodic grid and
advanced with Strang splitting: half local step, full kinetic step in
momentum space, half local step. The kinetic factor is exponentiated in closed
form per momentum mode, the local factor by eigendecomposition per grid point.
"""

import logging
from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy.special import erfc

from .errors import NumericalAbort
from .hilbert_lift import (
    IDENTITY2,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    charge_conjugate_complex,
    charge_conjugation_unitary,
    conjugation_unitary,
    lift_hamiltonian_reality_preserving,
    lift_observable,
    lift_state,
    reality_residual,
    time_reversal_unitary,
)

logger = logging.getLogger(__name__)

ModelName = Literal["dirac2", "dirac-lifted4", "majorana4", "mixed-mass4"]
EventOp = Literal["K", "C", "T"]

NORM_TOLERANCE = 1e-10
BOUNDARY_TAIL_TOLERANCE = 1e-8


# === Configuration models ===


class Grid1D(BaseModel):
    """Periodic grid x_j = x_min + j*dx, j < n_points (x_max excluded)."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    n_points: int = Field(default=4096, ge=64)
    x_min: float = -150.0
    x_max: float = 150.0

    @field_validator("n_points")
    @classmethod
    def power_of_two(cls, v: int) -> int:
        if v & (v - 1):
            raise ValueError(f"n_points must be a power of two, got {v}")
        return v

    @model_validator(mode="after")
    def ordered_bounds(self) -> "Grid1D":
        if not self.x_max > self.x_min:
            raise ValueError(f"x_max ({self.x_max}) must exceed x_min ({self.x_min})")
        return self

    @property
    def length(self) -> float:
        return self.x_max - self.x_min

    @property
    def dx(self) -> float:
        return self.length / self.n_points

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n_points)

    @property
    def k(self) -> np.ndarray:
        """Momentum lattice in FFT order; the Nyquist mode sits at -pi/dx."""
        return 2 * np.pi * np.fft.fftfreq(self.n_points, d=self.dx)

    @property
    def nyquist_index(self) -> int:
        return self.n_points // 2


class PotentialSpec(BaseModel):
    """Static scalar potential V(x)."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Literal["none", "linear", "tabulated"] = "none"
    alpha: float = 1.0
    values: Optional[tuple[float, ...]] = None

    @model_validator(mode="after")
    def values_match_kind(self) -> "PotentialSpec":
        if self.kind == "tabulated" and not self.values:
            raise ValueError("tabulated potential needs values")
        if self.kind != "tabulated" and self.values is not None:
            raise ValueError(f"values only apply to tabulated potentials, not '{self.kind}'")
        return self

    def evaluate(self, grid: Grid1D) -> np.ndarray:
        if self.kind == "none":
            return np.zeros(grid.n_points)
        if self.kind == "linear":
            return self.alpha * grid.x
        values = np.asarray(self.values, dtype=float)
        if values.shape != (grid.n_points,):
            raise ValueError(f"tabulated potential has {values.size} values for {grid.n_points} grid points")
        return values


class HamiltonianSpec(BaseModel):
    """Model selector plus masses, light speed and potential."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    model: ModelName = "dirac2"
    m: float = Field(default=0.0, ge=0.0)
    m_D: float = Field(default=0.0, ge=0.0)
    m_M: float = Field(default=0.0, ge=0.0)
    c: float = Field(default=1.0, gt=0.0)
    potential: PotentialSpec = PotentialSpec()
    charge: Literal[1, -1] = 1

    @property
    def n_components(self) -> int:
        return 2 if self.model == "dirac2" else 4

    @property
    def reality_preserving(self) -> bool:
        return self.model != "dirac2"


class PlannedEvent(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    step: int = Field(ge=0)
    op: EventOp


class EvolutionPlan(BaseModel):
    """Time step, step count, symmetry events and output cadence."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    dt: float = Field(gt=0.0)
    n_steps: int = Field(ge=0)
    events: tuple[PlannedEvent, ...] = ()
    snapshot_stride: int = Field(default=0, ge=0)
    sample_every: int = Field(default=1, ge=1)
    probe_x: float = 0.0

    @model_validator(mode="after")
    def events_in_range(self) -> "EvolutionPlan":
        for index, event in enumerate(self.events):
            if event.step > self.n_steps:
                raise ValueError(f"event {index} at step {event.step} is beyond n_steps={self.n_steps}")
        return self


# === Fields ===


@dataclass(frozen=True)
class SpinorField:
    """Spinor amplitudes with shape (n_comp, n_points)."""

    grid: Grid1D
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.amplitudes.shape[1:] != (self.grid.n_points,) or self.amplitudes.shape[0] not in (2, 4):
            raise ValueError(f"amplitudes of shape {self.amplitudes.shape} do not fit a {self.grid.n_points}-point grid")

    @property
    def n_comp(self) -> int:
        return self.amplitudes.shape[0]

    def density(self) -> np.ndarray:
        return np.sum(np.abs(self.amplitudes) ** 2, axis=0)

    def norm(self) -> float:
        return float(np.sum(self.density()) * self.grid.dx)


def energy_spinor(p: float, mass: float, c: float, sign: int = 1) -> np.ndarray:
    """Free Dirac eigenspinor of c sigma_x p + m c^2 sigma_z with energy sign*E."""
    mc2 = mass * c**2
    energy = np.hypot(c * p, mc2)
    if energy == 0.0:
        spinor = np.array([1.0, sign], dtype=complex)
    elif sign > 0:
        spinor = np.array([energy + mc2, c * p], dtype=complex)
    else:
        spinor = np.array([-c * p, energy + mc2], dtype=complex)
    return spinor / np.linalg.norm(spinor)


def boundary_tail(grid: Grid1D, x0: float, sigma: float) -> float:
    """Probability mass of a Gaussian density beyond the nearer box edge."""
    distance = min(x0 - grid.x_min, grid.x_max - x0)
    return float(0.5 * erfc(distance / (sigma * np.sqrt(2.0))))


def gaussian_packet(
    grid: Grid1D,
    x0: float,
    sigma: float,
    p0: float,
    polarization,
    n_comp: int = 2,
) -> SpinorField:
    """Normalized pol * exp(-(x-x0)^2/(4 sigma^2) + i p0 x).

    Four-component packets are the lift of the two-component packet, so they
    start exactly real.
    """
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if n_comp not in (2, 4):
        raise ValueError(f"n_comp must be 2 or 4, got {n_comp}")
    pol = np.asarray(polarization, dtype=complex)
    if pol.shape != (2,):
        raise ValueError(f"polarization must have 2 components, got shape {pol.shape}")
    if np.linalg.norm(pol) == 0.0:
        raise ValueError("polarization vector must be nonzero")

    tail = boundary_tail(grid, x0, sigma)
    if tail > BOUNDARY_TAIL_TOLERANCE:
        logger.warning(f"Packet at x0={x0} with sigma={sigma} has {tail:.2e} of its mass past the periodic boundary")

    x = grid.x
    envelope = np.exp(-((x - x0) ** 2) / (4 * sigma**2) + 1j * p0 * x)
    amplitudes = pol[:, None] / np.linalg.norm(pol) * envelope[None, :]
    amplitudes /= np.sqrt(np.sum(np.abs(amplitudes) ** 2) * grid.dx)
    if n_comp == 4:
        amplitudes = lift_state(amplitudes)
    return SpinorField(grid, amplitudes)


# === Hamiltonian factors ===


def _local_exponential(hamiltonians: np.ndarray, tau: float, real: bool) -> np.ndarray:
    """exp(-i tau H(x)) for a stack of Hermitian matrices of shape (N, n, n)."""
    eigenvalues, vectors = np.linalg.eigh(hamiltonians)
    phases = np.exp(-1j * tau * eigenvalues)
    result = np.einsum("xij,xj,xkj->xik", vectors, phases, vectors.conj())
    if real:
        # -iH is real, so the exact exponential is real too
        result = result.real.astype(complex)
    return result


@dataclass
class SplitPropagator:
    """Precomputed Strang factors for one time step."""

    dt: float
    kinetic_cos: np.ndarray
    kinetic_sin: np.ndarray
    kinetic_spin: np.ndarray
    local_half: np.ndarray
    local_full: np.ndarray

    def apply_kinetic(self, amplitudes: np.ndarray) -> np.ndarray:
        spectrum = np.fft.fft(amplitudes, axis=1)
        rotated = self.kinetic_cos * spectrum - 1j * self.kinetic_sin * (self.kinetic_spin @ spectrum)
        return np.fft.ifft(rotated, axis=1)

    @staticmethod
    def apply_local(matrices: np.ndarray, amplitudes: np.ndarray) -> np.ndarray:
        return np.einsum("xij,jx->ix", matrices, amplitudes)


@dataclass
class HamiltonianFactors:
    """Kinetic symbol c*S*k and per-point local matrices for one model on one grid."""

    spec: HamiltonianSpec
    grid: Grid1D
    kinetic_spin: np.ndarray
    mass: np.ndarray
    potential_unit: np.ndarray
    potential: np.ndarray
    _propagators: dict = field(default_factory=dict, repr=False)

    @property
    def n_components(self) -> int:
        return self.kinetic_spin.shape[0]

    @property
    def local(self) -> np.ndarray:
        return self.mass[None, :, :] + self.potential[:, None, None] * self.potential_unit[None, :, :]

    def symbol(self, k: float, x_index: Optional[int] = None) -> np.ndarray:
        """Total Hamiltonian matrix at momentum k (and potential at x_index)."""
        matrix = self.spec.c * k * self.kinetic_spin + self.mass
        if x_index is not None:
            matrix = matrix + self.potential[x_index] * self.potential_unit
        return matrix

    def propagator(self, dt: float) -> SplitPropagator:
        if dt <= 0:
            raise ValueError(f"time step must be positive, got {dt}")
        if dt not in self._propagators:
            logger.debug(f"Building {self.spec.model} propagator for dt={dt} on {self.grid.n_points} points")
            phase = self.spec.c * self.grid.k * dt
            # the Nyquist mode has no -k partner: it gets no kinetic phase at all,
            # which keeps the factor unitary and lifted fields real
            phase[self.grid.nyquist_index] = 0.0
            real = self.spec.reality_preserving
            local = self.local
            self._propagators[dt] = SplitPropagator(
                dt=dt,
                kinetic_cos=np.cos(phase),
                kinetic_sin=np.sin(phase),
                kinetic_spin=self.kinetic_spin,
                local_half=_local_exponential(local, dt / 2, real),
                local_full=_local_exponential(local, dt, real),
            )
        return self._propagators[dt]


def build_hamiltonian(spec: HamiltonianSpec, grid: Grid1D) -> HamiltonianFactors:
    """Split a model into its kinetic symbol and local (mass + potential) part.

    Four-component models use the reality-preserving lift: the kinetic term
    c sigma_x p (p = -i d/dx is imaginary) lifts to c (1 x sigma_x) p, a scalar
    potential V to -sigma_y x V, a Dirac mass to -m c^2 sigma_y x sigma_z and the
    Majorana mass -i m c^2 sigma_y psi* to -m c^2 sigma_x x sigma_y.
    """
    mc2 = spec.m * spec.c**2
    if spec.model == "dirac2":
        kinetic = SIGMA_X
        mass = mc2 * SIGMA_Z
        unit = spec.charge * IDENTITY2
    else:
        kinetic = np.kron(IDENTITY2, SIGMA_X)
        unit = lift_hamiltonian_reality_preserving(spec.charge * IDENTITY2).matrix
        if spec.model == "dirac-lifted4":
            mass = lift_hamiltonian_reality_preserving(mc2 * SIGMA_Z).matrix
        elif spec.model == "majorana4":
            mass = lift_hamiltonian_reality_preserving(antilinear=-1j * mc2 * SIGMA_Y).matrix
        elif spec.model == "mixed-mass4":
            mass = lift_hamiltonian_reality_preserving(
                spec.m_D * spec.c**2 * SIGMA_Z,
                -1j * spec.m_M * spec.c**2 * SIGMA_Y,
            ).matrix
        else:
            raise ValueError(f"unknown model '{spec.model}'")
    return HamiltonianFactors(
        spec=spec,
        grid=grid,
        kinetic_spin=np.asarray(kinetic, dtype=complex),
        mass=np.asarray(mass, dtype=complex),
        potential_unit=np.asarray(unit, dtype=complex),
        potential=spec.potential.evaluate(grid),
    )


# === Propagation ===


def evolve(state: SpinorField, factors: HamiltonianFactors, dt: float, n_steps: int, t0: float = 0.0) -> SpinorField:
    """n_steps Strang steps, merging adjacent half local steps."""
    if state.n_comp != factors.n_components:
        raise ValueError(f"{state.n_comp}-component state cannot be evolved by a {factors.spec.model} model")
    if state.grid != factors.grid:
        raise ValueError("state and Hamiltonian factors live on different grids")
    if n_steps < 0:
        raise ValueError(f"step count must be non-negative, got {n_steps}")
    if n_steps == 0:
        return state

    prop = factors.propagator(dt)
    amplitudes = prop.apply_local(prop.local_half, state.amplitudes)
    for i in range(n_steps):
        amplitudes = prop.apply_kinetic(amplitudes)
        closing = prop.local_half if i == n_steps - 1 else prop.local_full
        amplitudes = prop.apply_local(closing, amplitudes)
        if not np.all(np.isfinite(amplitudes)):
            raise NumericalAbort("non-finite amplitudes", step=i + 1, time=t0 + (i + 1) * dt)
    return SpinorField(state.grid, amplitudes)


def step(state: SpinorField, factors: HamiltonianFactors, dt: float) -> SpinorField:
    """One Strang step: half local, full kinetic, half local."""
    return evolve(state, factors, dt, 1)


def apply_event(state: SpinorField, op: EventOp) -> SpinorField:
    """Apply K, C or T to every grid point.

    Two-component fields are conjugated explicitly (T = sigma_z K, C via
    i sigma_y sigma_z K); lifted fields get the unitaries V_K, V_C, V_T.
    """
    amplitudes = state.amplitudes
    if state.n_comp == 2:
        if op == "K":
            result = amplitudes.conj()
        elif op == "T":
            result = np.tensordot(SIGMA_Z, amplitudes.conj(), axes=(1, 0))
        elif op == "C":
            result = charge_conjugate_complex(amplitudes)
        else:
            raise ValueError(f"unknown event '{op}'")
    else:
        unitaries = {
            "K": lambda: conjugation_unitary(2),
            "C": charge_conjugation_unitary,
            "T": time_reversal_unitary,
        }
        if op not in unitaries:
            raise ValueError(f"unknown event '{op}'")
        result = unitaries[op]().apply(amplitudes)
    return SpinorField(state.grid, result)


# === Observables ===


def _spin_momentum_expectation(state: SpinorField, spin: np.ndarray) -> float:
    """<(spin x p)> with p diagonal on the momentum lattice."""
    spectrum = np.fft.fft(state.amplitudes, axis=1)
    weighted = np.einsum("ik,ij,jk->k", spectrum.conj(), spin, spectrum).real
    return float(np.sum(state.grid.k * weighted) * state.grid.dx / state.grid.n_points)


def pseudo_helicity(state: SpinorField) -> float:
    """<sigma_x p> for 2-component fields, <(1 x sigma_x - sigma_y x sigma_x) p> for lifted ones."""
    spin = SIGMA_X if state.n_comp == 2 else lift_observable(SIGMA_X).matrix
    return _spin_momentum_expectation(state, spin)


def transmission(state: SpinorField, x_c: float) -> float:
    """Probability to the right of x_c.

    Each sample owns the cell [x_j - dx/2, x_j + dx/2]; the cell containing x_c
    is split proportionally, so a point sitting exactly on x_c counts half.
    """
    grid = state.grid
    if not grid.x_min <= x_c <= grid.x_max:
        raise ValueError(f"probe position {x_c} lies outside the grid")
    weights = np.clip((grid.x - x_c) / grid.dx + 0.5, 0.0, 1.0)
    return float(np.sum(weights * state.density()) * grid.dx)


@dataclass(frozen=True)
class Observables:
    """Scalar diagnostics of one field snapshot."""

    t: float
    norm: float
    x_mean: float
    p_mean: float
    sigma_ph: float
    transmission: float
    reality_residual: Optional[float]
    density: np.ndarray = field(repr=False)


def observables(state: SpinorField, x_c: float = 0.0, t: float = 0.0) -> Observables:
    density = state.density()
    dx = state.grid.dx
    momentum_spin = IDENTITY2 if state.n_comp == 2 else lift_observable(IDENTITY2).matrix
    return Observables(
        t=t,
        norm=float(np.sum(density) * dx),
        x_mean=float(np.sum(state.grid.x * density) * dx),
        p_mean=_spin_momentum_expectation(state, momentum_spin),
        sigma_ph=pseudo_helicity(state),
        transmission=transmission(state, x_c),
        reality_residual=reality_residual(state.amplitudes) if state.n_comp == 4 else None,
        density=density,
    )


# === Scenarios ===


@dataclass
class ScenarioResult:
    """Observable series, snapshots and final state of one run."""

    spec: HamiltonianSpec
    plan: EvolutionPlan
    series: list[Observables]
    snapshots: list[tuple[float, SpinorField]]
    initial: SpinorField
    final: SpinorField

    @property
    def times(self) -> np.ndarray:
        return np.array([obs.t for obs in self.series])

    def density_l1_to_initial(self) -> float:
        return float(np.sum(np.abs(self.final.density() - self.initial.density())) * self.final.grid.dx)

    def summary(self) -> dict:
        last = self.series[-1]
        residuals = [obs.reality_residual for obs in self.series if obs.reality_residual is not None]
        return {
            "model": self.spec.model,
            "t_final": last.t,
            "transmission": last.transmission,
            "reflection": last.norm - last.transmission,
            "max_norm_drift": max(abs(obs.norm - 1.0) for obs in self.series),
            "max_sigma_ph_drift": max(abs(obs.sigma_ph - self.series[0].sigma_ph) for obs in self.series),
            "max_reality_residual": max(residuals) if residuals else None,
            "density_l1_to_initial": self.density_l1_to_initial(),
        }


def run_scenario(
    spec: HamiltonianSpec,
    plan: EvolutionPlan,
    grid: Grid1D,
    packet: SpinorField,
) -> ScenarioResult:
    """Evolve a packet through the plan, sampling observables and snapshots.

    Events scheduled at a step are applied before that step is sampled.
    """
    if packet.grid != grid:
        raise ValueError("packet was built on a different grid")
    factors = build_hamiltonian(spec, grid)
    if packet.n_comp != factors.n_components:
        raise ValueError(f"{spec.model} needs {factors.n_components}-component packets, got {packet.n_comp}")

    samples = set(range(0, plan.n_steps + 1, plan.sample_every)) | {plan.n_steps}
    snapshot_steps = set(range(0, plan.n_steps + 1, plan.snapshot_stride)) if plan.snapshot_stride else set()
    events: dict[int, list[str]] = {}
    for event in plan.events:
        events.setdefault(event.step, []).append(event.op)
    checkpoints = sorted(samples | snapshot_steps | set(events))

    logger.info(f"Running {spec.model} for {plan.n_steps} steps of dt={plan.dt} with {len(plan.events)} event(s)")
    series: list[Observables] = []
    snapshots: list[tuple[float, SpinorField]] = []
    state = packet
    current = 0
    for checkpoint in checkpoints:
        state = evolve(state, factors, plan.dt, checkpoint - current, t0=current * plan.dt)
        current = checkpoint
        t = checkpoint * plan.dt
        for op in events.get(checkpoint, []):
            logger.debug(f"Applying {op} at t={t}")
            state = apply_event(state, op)
        if checkpoint in samples:
            obs = observables(state, plan.probe_x, t)
            if abs(obs.norm - 1.0) > NORM_TOLERANCE:
                logger.warning(f"Norm drifted to {obs.norm!r} at t={t}")
            series.append(obs)
        if checkpoint in snapshot_steps:
            snapshots.append((t, state))

    result = ScenarioResult(spec, plan, series, snapshots, packet, state)
    logger.info(f"Finished {spec.model}: transmission {series[-1].transmission:.6f} at t={series[-1].t}")
    return result
