"""Exception hierarchy shared by the library modules and the CLI exit codes."""

from typing import Any, Optional


class SimulationError(Exception):
    """Base class for every error the simulator raises on purpose."""


class ConfigError(SimulationError):
    """A configuration document failed validation.

    Carries every problem found, not just the first, as
    ``"<dotted.field.path>: <message>"`` strings.
    """

    def __init__(self, errors: list[str], source: Optional[str] = None):
        self.errors = list(errors)
        self.source = source
        where = f" in {source}" if source else ""
        super().__init__(f"{len(self.errors)} validation error(s){where}:\n  " + "\n  ".join(self.errors))


class NumericalAbort(SimulationError):
    """Integration produced non-finite amplitudes or lost its norm."""

    def __init__(self, message: str, step: Optional[int] = None, time: Optional[float] = None):
        self.step = step
        self.time = time
        if step is not None:
            message = f"{message} (step {step}, t={time})"
        super().__init__(message)


class TruncationError(NumericalAbort):
    """Population reached the top Fock levels of a truncated mode."""

    def __init__(self, leakage: float, time: float, partial: Any = None):
        self.leakage = leakage
        self.partial = partial
        super().__init__(f"top-level Fock population {leakage:.3e} at t={time:.6g}: increase Fock truncation")
        self.time = time


class ProtocolRangeError(ValueError):
    """Displacement parameter too large for the truncated motional space."""


class LiftError(ValueError):
    """Malformed input to the complex-to-real lift algebra."""
