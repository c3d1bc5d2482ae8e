"""Shared pytest fixtures for the Majorana simulator tests."""

from pathlib import Path

import numpy as np
import pytest

from utils.dynamics import Grid1D
from utils.iontrap import IonTrapConfig

REPO_ROOT = Path(__file__).parent.parent


@pytest.fixture
def rng():
    """Seeded generator so random-state checks are reproducible."""
    return np.random.default_rng(20240611)


@pytest.fixture
def small_grid():
    """Coarse periodic grid for long step counts."""
    return Grid1D(n_points=256, x_min=-40.0, x_max=40.0)


@pytest.fixture
def medium_grid():
    return Grid1D(n_points=512, x_min=-40.0, x_max=40.0)


@pytest.fixture
def free_grid():
    """Grid used by the free-packet checks."""
    return Grid1D(n_points=2048, x_min=-100.0, x_max=100.0)


@pytest.fixture
def small_trap():
    """Default couplings on a truncated register small enough for quick tests."""
    return IonTrapConfig(n_a=10, n_b=6)


@pytest.fixture
def scenarios_dir():
    return REPO_ROOT / "scenarios"


@pytest.fixture
def fixtures_dir():
    return Path(__file__).parent / "fixtures"
