"""Random matrices and states for the lift and dynamics tests."""

import numpy as np


def random_hermitian(rng: np.random.Generator, n: int) -> np.ndarray:
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (a + a.conj().T) / 2


def random_antisymmetric(rng: np.random.Generator, n: int) -> np.ndarray:
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (a - a.T) / 2


def random_state(rng: np.random.Generator, n: int) -> np.ndarray:
    psi = rng.normal(size=n) + 1j * rng.normal(size=n)
    return psi / np.linalg.norm(psi)


def periodic_momentum(n_sites: int) -> np.ndarray:
    """p = -i D with D the central difference on a ring of unit spacing."""
    shift = np.roll(np.eye(n_sites), 1, axis=1)
    derivative = (shift - shift.T) / 2
    return -1j * derivative
