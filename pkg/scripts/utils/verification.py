"""Ion-trap verification report: dispersive fidelity plus measurement-protocol checks."""

import logging
import math
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .errors import TruncationError
from .iontrap import (
    EffectiveParams,
    IonTrapConfig,
    LaserSchedule,
    compare_with_effective,
    dispersive_fidelity,
    effective_params,
    kinetic_correlator,
    laser_schedule,
    lifted_product_state,
    product_state,
    pseudo_helicity_direct,
    pseudo_helicity_protocol,
    slope_Ak,
    slope_U1,
    spin_correlator,
)

logger = logging.getLogger(__name__)

ABSOLUTE_SLOPE_FLOOR = 1e-6


class IonTrapVerification(BaseModel):
    """`verify-iontrap` configuration document."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    trap: IonTrapConfig = IonTrapConfig.default()
    spinor: tuple[float, float] = (1.0, 1.0)
    alpha: tuple[float, float] = Field(default=(0.0, 1.0), description="COM coherent amplitude as (re, im)")
    t_final: Optional[float] = Field(default=None, gt=0.0)
    steps_per_loop: int = Field(default=128, ge=8)
    samples_per_loop: int = Field(default=8, ge=1)
    fidelity_threshold: float = Field(default=0.99, gt=0.0, le=1.0)
    slope_tolerance: float = Field(default=0.02, gt=0.0)
    protocol_tolerance: float = Field(default=0.03, gt=0.0)
    random_states: int = Field(default=50, ge=0)
    seed: int = 7

    @property
    def alpha_complex(self) -> complex:
        return complex(self.alpha[0], self.alpha[1])

    def window(self) -> float:
        """One mass period pi/mc^2, or ten detuning loops when the mass vanishes."""
        if self.t_final is not None:
            return self.t_final
        if self.trap.mc2_sim > 0.0:
            return math.pi / self.trap.mc2_sim
        if self.trap.delta > 0.0:
            return 10 * 2 * math.pi / self.trap.delta
        return 10.0


class Check(BaseModel):
    model_config = ConfigDict(ser_json_inf_nan="strings")

    name: str
    passed: bool
    measured: Optional[float] = None
    threshold: Optional[float] = None
    detail: str = ""


class SlopeRow(BaseModel):
    label: str
    slope_Ak: float
    oracle_Ak: float
    slope_U1: float
    oracle_U1: float
    protocol: float
    direct: float


class FidelityReport(BaseModel):
    times: list[float]
    values: list[float]
    minimum: Optional[float]
    norm_drift: Optional[float]


class IonTrapReport(BaseModel):
    model_config = ConfigDict(ser_json_inf_nan="strings")

    config: IonTrapVerification
    schedule: LaserSchedule
    effective: EffectiveParams
    fidelity: FidelityReport
    slopes: list[SlopeRow]
    checks: list[Check]
    passed: bool
    aborted: bool = False


def _within(value: float, oracle: float, tolerance: float) -> bool:
    return abs(value - oracle) <= tolerance * abs(oracle) + ABSOLUTE_SLOPE_FLOOR


def _relative_error(value: float, oracle: float) -> float:
    return abs(value - oracle) / max(abs(oracle), ABSOLUTE_SLOPE_FLOOR)


def _random_spinor(rng: np.random.Generator) -> np.ndarray:
    spinor = rng.normal(size=2) + 1j * rng.normal(size=2)
    return spinor / np.linalg.norm(spinor)


def slope_table(verification: IonTrapVerification, initial) -> list[SlopeRow]:
    """Protocol slopes against direct expectations for the encoded state and random product states."""
    config = verification.trap
    rng = np.random.default_rng(verification.seed)
    states = [("lifted-initial", initial)]
    for index in range(verification.random_states):
        alpha = complex(*rng.uniform(-1.0, 1.0, size=2))
        state = product_state(config, _random_spinor(rng), _random_spinor(rng), alpha)
        states.append((f"random-{index:02d}", state))

    rows = []
    for label, state in states:
        rows.append(
            SlopeRow(
                label=label,
                slope_Ak=slope_Ak(state, config),
                oracle_Ak=kinetic_correlator(state, config),
                slope_U1=slope_U1(state, config),
                oracle_U1=2 * spin_correlator(state, config),
                protocol=pseudo_helicity_protocol(state, config),
                direct=pseudo_helicity_direct(state, config),
            )
        )
    return rows


def _slope_checks(rows: list[SlopeRow], verification: IonTrapVerification) -> list[Check]:
    checks = []
    for name, pairs, tolerance in (
        ("slope_Ak", [(r.slope_Ak, r.oracle_Ak) for r in rows], verification.slope_tolerance),
        ("slope_U1", [(r.slope_U1, r.oracle_U1) for r in rows], verification.slope_tolerance),
        ("pseudo_helicity_protocol", [(r.protocol, r.direct) for r in rows], verification.protocol_tolerance),
    ):
        worst = max((_relative_error(v, o) for v, o in pairs), default=0.0)
        checks.append(
            Check(
                name=name,
                passed=all(_within(v, o, tolerance) for v, o in pairs),
                measured=worst,
                threshold=tolerance,
                detail=f"worst relative error over {len(pairs)} states",
            )
        )
    return checks


def verify_iontrap(verification: IonTrapVerification) -> IonTrapReport:
    """Run the dispersive comparison and the protocol checks, collecting pass/fail entries."""
    config = verification.trap
    initial = lifted_product_state(config, verification.spinor, verification.alpha_complex)
    window = verification.window()
    logger.info(f"Verifying ion-trap register of dimension {config.dimension} over t={window:.6g}")

    checks: list[Check] = []
    aborted = False
    try:
        series = dispersive_fidelity(
            config,
            initial,
            window,
            steps_per_loop=verification.steps_per_loop,
            samples_per_loop=verification.samples_per_loop,
        )
    except TruncationError as exc:
        logger.warning(str(exc))
        aborted = True
        checks.append(
            Check(name="truncation", passed=False, measured=exc.leakage, threshold=1e-4, detail=str(exc))
        )
        series = compare_with_effective(config, initial, exc.partial)

    fidelity = FidelityReport(
        times=series.times.tolist(),
        values=series.fidelities.tolist(),
        minimum=series.minimum,
        norm_drift=series.norm_drift,
    )
    checks.append(
        Check(
            name="dispersive_fidelity",
            passed=not aborted and series.minimum >= verification.fidelity_threshold,
            measured=series.minimum,
            threshold=verification.fidelity_threshold,
            detail="minimum over the window" + (" before truncation abort" if aborted else ""),
        )
    )
    checks.append(
        Check(name="norm_conservation", passed=series.norm_drift <= 1e-8, measured=series.norm_drift, threshold=1e-8)
    )
    rows = slope_table(verification, initial)
    checks.extend(_slope_checks(rows, verification))

    passed = all(check.passed for check in checks)
    logger.info(f"Ion-trap verification {'passed' if passed else 'FAILED'} (min fidelity {series.minimum:.6f})")
    return IonTrapReport(
        config=verification,
        schedule=laser_schedule(config),
        effective=effective_params(config, initial, encoded=True),
        fidelity=fidelity,
        slopes=rows,
        checks=checks,
        passed=passed,
        aborted=aborted,
    )
