"""
Complex-to-real lift of spinor states and operators.

A complex state psi in C^n is embedded as Psi = (Re psi, Im psi) in a space of
dimension 2n = ancilla (left factor) x system. In the enlarged space complex
conjugation, charge conjugation and time reversal become ordinary unitaries,
and dynamics with an antilinear term (psi*) becomes Hamiltonian.

Amplitude arrays carry the component axis first, so every function here works
on a single vector (n,) as well as on a sampled field (n, n_points).
"""

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import LiftError

logger = logging.getLogger(__name__)

IDENTITY2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)

_HERMITIAN_TOL = 1e-12


class OperatorKind(str, Enum):
    """How a lifted operator was produced."""

    THETA = "theta"
    REALITY_PRESERVING_HAMILTONIAN = "reality-preserving-hamiltonian"
    OBSERVABLE = "observable"
    SYMMETRY = "symmetry"


@dataclass(frozen=True)
class LiftedOperator:
    """Dense 2n x 2n matrix acting on lifted states."""

    matrix: np.ndarray
    kind: OperatorKind

    def __post_init__(self):
        shape = self.matrix.shape
        if len(shape) != 2 or shape[0] != shape[1] or shape[0] % 2:
            raise LiftError(f"lifted operator must be square with even size, got {shape}")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def apply(self, state: np.ndarray) -> np.ndarray:
        """Apply along the leading (component) axis of a vector or field."""
        state = np.asarray(state)
        if state.shape[0] != self.dim:
            raise LiftError(f"operator of size {self.dim} cannot act on {state.shape[0]} components")
        return np.tensordot(self.matrix, state, axes=(1, 0))

    def is_unitary(self, tol: float = 1e-12) -> bool:
        return bool(np.allclose(self.matrix.conj().T @ self.matrix, np.eye(self.dim), atol=tol))

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return bool(np.allclose(self.matrix, self.matrix.conj().T, atol=tol))


def _square(matrix, name: str) -> np.ndarray:
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise LiftError(f"{name} must be a square matrix, got shape {matrix.shape}")
    return matrix


def _require_hermitian(matrix: np.ndarray, name: str) -> None:
    scale = max(1.0, float(np.max(np.abs(matrix), initial=0.0)))
    if not np.allclose(matrix, matrix.conj().T, atol=_HERMITIAN_TOL * scale, rtol=0.0):
        raise LiftError(f"{name} must be Hermitian")


def split_conjugation(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split O into the parts that commute / anticommute with conjugation.

    O_r = (O + KOK)/2 and O_i = -(i/2)(O - KOK), i.e. the entrywise real and
    imaginary parts of O.
    """
    conj = matrix.conj()
    return (matrix + conj) / 2, -0.5j * (matrix - conj)


# === States ===


def lift_state(psi) -> np.ndarray:
    """Embed psi as (Re psi, Im psi) stacked along the component axis."""
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim == 0 or psi.shape[0] < 1:
        raise LiftError("cannot lift an empty state")
    return np.concatenate([psi.real, psi.imag], axis=0).astype(complex)


def reconstruct(lifted) -> np.ndarray:
    """Recover psi = Psi_top + i Psi_bottom, i.e. apply M = (1, i1)."""
    lifted = np.asarray(lifted, dtype=complex)
    if lifted.ndim == 0 or lifted.shape[0] % 2:
        raise LiftError(f"lifted state must have an even number of components, got {lifted.shape}")
    n = lifted.shape[0] // 2
    return lifted[:n] + 1j * lifted[n:]


def reconstruction_matrix(n: int) -> np.ndarray:
    """M = (1, i1) as an n x 2n matrix."""
    return np.hstack([np.eye(n), 1j * np.eye(n)]).astype(complex)


def reality_residual(lifted) -> float:
    """Largest imaginary part among the lifted amplitudes."""
    return float(np.max(np.abs(np.imag(lifted)), initial=0.0))


# === Unphysical operations ===


def conjugation_unitary(n: int) -> LiftedOperator:
    """V_K = sigma_z x 1_n: complex conjugation of an n-component state."""
    if n < 1:
        raise LiftError("dimension must be positive")
    return LiftedOperator(np.kron(SIGMA_Z, np.eye(n)), OperatorKind.SYMMETRY)


def charge_conjugate_complex(psi) -> np.ndarray:
    """psi_c = i sigma_y sigma_z psi* for a 2-component spinor (or field)."""
    psi = np.asarray(psi, dtype=complex)
    if psi.shape[0] != 2:
        raise LiftError(f"charge conjugation is defined for 2-component spinors, got {psi.shape[0]}")
    return np.tensordot(1j * SIGMA_Y @ SIGMA_Z, psi.conj(), axes=(1, 0))


def charge_conjugation_unitary() -> LiftedOperator:
    """V_C = -(sigma_z x sigma_x) on the lifted 2-component spinor."""
    return LiftedOperator(-np.kron(SIGMA_Z, SIGMA_X), OperatorKind.SYMMETRY)


def time_reversal_unitary() -> LiftedOperator:
    """V_T = sigma_z x sigma_z, the lift of T = sigma_z K."""
    return LiftedOperator(np.kron(SIGMA_Z, SIGMA_Z), OperatorKind.SYMMETRY)


# === Operator lifts ===


def lift_linear_operator(operator) -> LiftedOperator:
    """Theta = 1 x O_r - i sigma_y x O_i, so that M Theta = O M.

    Unitarity and Hermiticity of O carry over to Theta.
    """
    operator = _square(operator, "operator")
    o_r, o_i = split_conjugation(operator)
    theta = np.kron(IDENTITY2, o_r) - 1j * np.kron(SIGMA_Y, o_i)
    return LiftedOperator(theta, OperatorKind.THETA)


def lift_observable(observable) -> LiftedOperator:
    """O~ = M^dagger O M = (1 - sigma_y) x O.

    Expectations of O~ on a lifted state equal those of O on the original.
    """
    observable = _square(observable, "observable")
    _require_hermitian(observable, "observable")
    return LiftedOperator(np.kron(IDENTITY2 - SIGMA_Y, observable), OperatorKind.OBSERVABLE)


def lift_hamiltonian_reality_preserving(
    linear=None,
    antilinear=None,
) -> LiftedOperator:
    """Enlarged generator for i d/dt psi = O psi + A psi*.

    H = i 1 x O_i - sigma_y x O_r + i sigma_z x A_i - i sigma_x x A_r

    -iH is entrywise real, so real lifted states stay real, and
    M (-iH) lift(psi) = -i (O psi + A psi*). O must be Hermitian and A
    antisymmetric for H to be Hermitian.
    """
    if linear is None and antilinear is None:
        raise LiftError("need a linear part, an antilinear part, or both")
    n = np.asarray(linear if linear is not None else antilinear).shape[0]
    linear = _square(np.zeros((n, n)) if linear is None else linear, "linear part")
    antilinear = _square(np.zeros((n, n)) if antilinear is None else antilinear, "antilinear part")
    if linear.shape != antilinear.shape:
        raise LiftError(f"linear {linear.shape} and antilinear {antilinear.shape} parts differ in size")
    _require_hermitian(linear, "linear part")
    scale = max(1.0, float(np.max(np.abs(antilinear), initial=0.0)))
    if not np.allclose(antilinear, -antilinear.T, atol=_HERMITIAN_TOL * scale, rtol=0.0):
        raise LiftError("antilinear part must be antisymmetric for a Hermitian generator")

    o_r, o_i = split_conjugation(linear)
    a_r, a_i = split_conjugation(antilinear)
    matrix = (
        1j * np.kron(IDENTITY2, o_i)
        - np.kron(SIGMA_Y, o_r)
        + 1j * np.kron(SIGMA_Z, a_i)
        - 1j * np.kron(SIGMA_X, a_r)
    )
    return LiftedOperator(matrix, OperatorKind.REALITY_PRESERVING_HAMILTONIAN)


def expectation(lifted, observable) -> float:
    """<psi|O|psi> read out from the lifted state through M^dagger O M."""
    lifted = np.asarray(lifted, dtype=complex)
    op = lift_observable(observable)
    return float(np.real(np.vdot(lifted, op.apply(lifted))))
