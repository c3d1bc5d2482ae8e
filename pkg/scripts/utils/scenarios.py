"""
Scenario configuration: validated documents, built-in presets, parsing.

A scenario document (JSON or YAML) names a model, grid, initial packet,
evolution plan and output options. Unknown keys are rejected and every
validation problem is reported with its field path.
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Literal, Optional, TypeVar, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .dynamics import (
    EventOp,
    EvolutionPlan,
    Grid1D,
    HamiltonianSpec,
    PlannedEvent,
    SpinorField,
    energy_spinor,
    gaussian_packet,
)
from .errors import ConfigError

logger = logging.getLogger(__name__)

Polarization = Union[
    Literal["positive-energy", "negative-energy"],
    tuple[float, float],
    tuple[tuple[float, float], tuple[float, float]],
]


class PacketConfig(BaseModel):
    """Gaussian packet; complex polarization components are [re, im] pairs."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    x0: float = -60.0
    sigma: float = Field(default=5.0, gt=0.0)
    p0: float = 1.5
    polarization: Polarization = "positive-energy"

    @model_validator(mode="after")
    def nonzero_polarization(self) -> "PacketConfig":
        if not isinstance(self.polarization, str):
            flat = np.ravel(np.asarray(self.polarization, dtype=float))
            if not np.any(flat):
                raise ValueError("polarization vector must be nonzero")
        return self

    def spinor(self, spec: HamiltonianSpec) -> np.ndarray:
        if isinstance(self.polarization, str):
            mass = spec.m_D if spec.model == "mixed-mass4" else spec.m
            sign = 1 if self.polarization == "positive-energy" else -1
            return energy_spinor(self.p0, mass, spec.c, sign)
        if isinstance(self.polarization[0], tuple):
            return np.array([complex(re, im) for re, im in self.polarization])
        return np.array(self.polarization, dtype=complex)


class EventConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    t: float = Field(ge=0.0)
    op: EventOp


class PlanConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    dt: float = Field(default=0.005, gt=0.0)
    t_final: float = Field(default=30.0, gt=0.0)
    events: tuple[EventConfig, ...] = ()
    sample_every: int = Field(default=20, ge=1)
    probe_x: Optional[float] = None

    @model_validator(mode="after")
    def events_before_end(self) -> "PlanConfig":
        late = [f"event {i} at t={e.t} exceeds t_final={self.t_final}" for i, e in enumerate(self.events) if e.t > self.t_final]
        if late:
            raise ValueError("; ".join(late))
        return self

    def _lattice_step(self, t: float) -> tuple[int, bool]:
        """Nearest step to t, and whether t already sat on the step lattice."""
        index = int(round(t / self.dt))
        return index, abs(index * self.dt - t) <= 1e-9 * max(1.0, t)

    @property
    def n_steps(self) -> int:
        steps, exact = self._lattice_step(self.t_final)
        if not exact:
            logger.warning(f"t_final={self.t_final} moved to t={steps * self.dt} on the step lattice")
        return steps

    def event_steps(self) -> list[PlannedEvent]:
        planned = []
        for index, event in enumerate(self.events):
            event_step, exact = self._lattice_step(event.t)
            if not exact:
                logger.warning(f"Event {index} at t={event.t} moved to t={event_step * self.dt} on the step lattice")
            planned.append(PlannedEvent(step=event_step, op=event.op))
        return planned


class OutputConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    directory: Optional[str] = None
    snapshot_stride: int = Field(default=1000, ge=0)


class ScenarioConfig(BaseModel):
    """One wavepacket experiment."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    name: str = Field(pattern=r"^[a-z0-9][a-z0-9._-]*$")
    description: str = ""
    hamiltonian: HamiltonianSpec
    grid: Grid1D = Grid1D()
    packet: PacketConfig
    plan: PlanConfig
    outputs: OutputConfig = OutputConfig()

    @model_validator(mode="after")
    def fits_grid(self) -> "ScenarioConfig":
        problems = []
        if not self.grid.x_min < self.packet.x0 < self.grid.x_max:
            problems.append(f"packet.x0={self.packet.x0} lies outside the grid")
        probe = self.probe_x
        if not self.grid.x_min <= probe <= self.grid.x_max:
            problems.append(f"plan.probe_x={probe} lies outside the grid")
        if self.hamiltonian.potential.kind == "tabulated" and len(self.hamiltonian.potential.values) != self.grid.n_points:
            problems.append(
                f"hamiltonian.potential.values has {len(self.hamiltonian.potential.values)} entries "
                f"for {self.grid.n_points} grid points"
            )
        if problems:
            raise ValueError("; ".join(problems))
        return self

    @property
    def probe_x(self) -> float:
        return self.packet.x0 if self.plan.probe_x is None else self.plan.probe_x

    def evolution_plan(self) -> EvolutionPlan:
        return EvolutionPlan(
            dt=self.plan.dt,
            n_steps=self.plan.n_steps,
            events=tuple(self.plan.event_steps()),
            snapshot_stride=self.outputs.snapshot_stride,
            sample_every=self.plan.sample_every,
            probe_x=self.probe_x,
        )

    def initial_packet(self) -> SpinorField:
        return gaussian_packet(
            self.grid,
            self.packet.x0,
            self.packet.sigma,
            self.packet.p0,
            self.packet.spinor(self.hamiltonian),
            n_comp=self.hamiltonian.n_components,
        )


# === Presets ===


@dataclass(frozen=True)
class Preset:
    description: str
    build: Callable[[], ScenarioConfig]


def _scattering(name: str, description: str, model: str = "dirac2", events=(), **masses) -> ScenarioConfig:
    """Linear-potential scattering with m=0.5, c=1, V(x)=x."""
    hamiltonian = {"model": model, "c": 1.0, "potential": {"kind": "linear", "alpha": 1.0}}
    hamiltonian.update(masses or {"m": 0.5})
    return ScenarioConfig.model_validate(
        {
            "name": name,
            "description": description,
            "hamiltonian": hamiltonian,
            "grid": {"n_points": 4096, "x_min": -150.0, "x_max": 150.0},
            "packet": {"x0": -60.0, "sigma": 5.0, "p0": 1.5, "polarization": "positive-energy"},
            "plan": {"dt": 0.005, "t_final": 30.0, "events": list(events), "sample_every": 20},
            "outputs": {"snapshot_stride": 1000},
        }
    )


def _free(name: str, description: str, model: str) -> ScenarioConfig:
    return ScenarioConfig.model_validate(
        {
            "name": name,
            "description": description,
            "hamiltonian": {"model": model, "m": 0.5, "c": 1.0},
            "grid": {"n_points": 2048, "x_min": -100.0, "x_max": 100.0},
            "packet": {"x0": 0.0, "sigma": 5.0, "p0": 1.0, "polarization": [1.0, 1.0]},
            "plan": {"dt": 0.005, "t_final": 20.0, "sample_every": 20, "probe_x": 0.0},
            "outputs": {"snapshot_stride": 1000},
        }
    )


PRESETS: dict[str, Preset] = {
    "fig2a": Preset(
        "Klein process: Dirac packet against V(x)=x",
        lambda: _scattering("fig2a", "Klein process: Dirac packet against V(x)=x"),
    ),
    "fig2b": Preset(
        "time reversal mid-run: the packet retraces its trajectory",
        lambda: _scattering(
            "fig2b",
            "time reversal mid-run: the packet retraces its trajectory",
            events=[{"t": 15.0, "op": "T"}],
        ),
    ),
    "fig2c": Preset(
        "charge conjugation mid-run: particle turned into its antiparticle",
        lambda: _scattering(
            "fig2c",
            "charge conjugation mid-run: particle turned into its antiparticle",
            events=[{"t": 0.5, "op": "C"}],
        ),
    ),
    "fig2d": Preset(
        "Majorana packet propagating through V(x)=x",
        lambda: _scattering("fig2d", "Majorana packet propagating through V(x)=x", model="majorana4"),
    ),
    "free-dirac": Preset(
        "free massive Dirac packet; pseudo-helicity not conserved",
        lambda: _free("free-dirac", "free massive Dirac packet; pseudo-helicity not conserved", "dirac2"),
    ),
    "free-majorana": Preset(
        "free Majorana packet; pseudo-helicity conserved",
        lambda: _free("free-majorana", "free Majorana packet; pseudo-helicity conserved", "majorana4"),
    ),
    "mixed-mass": Preset(
        "combined Dirac and Majorana mass terms against V(x)=x",
        lambda: _scattering(
            "mixed-mass",
            "combined Dirac and Majorana mass terms against V(x)=x",
            model="mixed-mass4",
            m_D=0.25,
            m_M=0.25,
        ),
    ),
}


def list_scenarios() -> list[tuple[str, str]]:
    """Built-in scenario names with one-line descriptions, sorted by name."""
    return sorted((name, preset.description) for name, preset in PRESETS.items())


def load_preset(name: str) -> ScenarioConfig:
    if name not in PRESETS:
        raise ConfigError([f"preset: unknown scenario '{name}' (available: {', '.join(sorted(PRESETS))})"])
    return PRESETS[name].build()


# === Parsing ===

ModelT = TypeVar("ModelT", bound=BaseModel)


def format_validation_errors(exc: ValidationError) -> list[str]:
    """One "<dotted.path>: <message>" line per pydantic error."""
    lines = []
    for error in exc.errors():
        path = ".".join(str(part) for part in error["loc"]) or "<document>"
        lines.append(f"{path}: {error['msg']}")
    return lines


def load_document(path: Union[str, Path]) -> dict:
    """Read a JSON or YAML mapping."""
    path = Path(path)
    if not path.exists():
        raise ConfigError([f"{path}: file not found"], source=str(path))
    text = path.read_text(encoding="utf-8")
    try:
        if path.suffix.lower() in (".yaml", ".yml"):
            document = yaml.safe_load(text)
        else:
            document = json.loads(text) if text.strip() else None
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError([f"{path}: not a well-formed document ({exc})"], source=str(path)) from exc
    if document is None:
        document = {}
    if not isinstance(document, dict):
        raise ConfigError([f"{path}: top level must be a mapping, got {type(document).__name__}"], source=str(path))
    return document


def validate_document(document: dict, model: type[ModelT], source: Optional[str] = None) -> ModelT:
    try:
        return model.model_validate(document)
    except ValidationError as exc:
        raise ConfigError(format_validation_errors(exc), source=source) from exc


def parse_config(path: Union[str, Path]) -> ScenarioConfig:
    """Load and fully validate a scenario document."""
    return validate_document(load_document(path), ScenarioConfig, source=str(path))


def normalize(document: dict) -> dict:
    """Canonical form of a scenario document: validated, defaults filled."""
    return validate_document(document, ScenarioConfig).model_dump(mode="json")
