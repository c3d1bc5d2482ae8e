"""End-to-end checks of the built-in scattering scenarios against V(x)=x.

Each preset runs once per module; thresholds come from
fixtures/scattering_reference.json.
"""

import json
from pathlib import Path

import numpy as np
import pytest

from utils.dynamics import run_scenario
from utils.scenarios import load_preset

REFERENCE = json.loads((Path(__file__).parent / "fixtures" / "scattering_reference.json").read_text())


@pytest.fixture(scope="module")
def results():
    cache = {}

    def get(name):
        if name not in cache:
            config = load_preset(name)
            cache[name] = run_scenario(config.hamiltonian, config.evolution_plan(), config.grid, config.initial_packet())
        return cache[name]

    return get


def edge_mass(result, width: float = 10.0) -> float:
    grid = result.final.grid
    near_edge = (grid.x < grid.x_min + width) | (grid.x > grid.x_max - width)
    return float(np.sum(result.final.density()[near_edge]) * grid.dx)


class TestKleinProcess:
    """Dirac packet against the linear potential."""

    def test_transmission_matches_crossing_probability(self, results):
        summary = results("fig2a").summary()
        expected = REFERENCE["fig2a"]
        assert summary["transmission"] == pytest.approx(expected["transmission"], abs=expected["tolerance"])

    def test_both_channels_populated(self, results):
        summary = results("fig2a").summary()
        assert summary["transmission"] > 0.3
        assert summary["reflection"] > 0.3

    def test_norm_and_box(self, results):
        result = results("fig2a")
        assert result.summary()["max_norm_drift"] <= 1e-10
        assert edge_mass(result) <= REFERENCE["wraparound"]["max_edge_density"]


class TestTimeReversalEvent:
    """T applied at t=15 makes the packet retrace its path."""

    def test_density_returns(self, results):
        assert results("fig2b").density_l1_to_initial() <= REFERENCE["fig2b"]["max_density_l1"]

    def test_centroid_retraces(self, results):
        series = results("fig2b").series
        x = np.array([obs.x_mean for obs in series])
        assert np.max(np.abs(x - x[::-1])) <= 1e-3


class TestChargeConjugationEvent:
    """C applied at t=0.5 turns the particle into an antiparticle that is not reflected."""

    def test_antiparticle_is_transmitted(self, results):
        conjugated = results("fig2c").summary()["transmission"]
        assert conjugated > 0.9
        assert conjugated >= results("fig2a").summary()["transmission"]

    def test_momentum_reversed_at_event(self, results):
        series = results("fig2c").series
        before = [obs.p_mean for obs in series if obs.t < 0.5 - 1e-9]
        after = next(obs.p_mean for obs in series if obs.t >= 0.5 - 1e-9)
        assert before[-1] > 0
        assert after < 0


class TestMajoranaScattering:
    """Majorana packet through the same potential."""

    def test_mostly_transmitted(self, results):
        majorana = results("fig2d").summary()
        assert majorana["transmission"] >= REFERENCE["fig2d"]["min_transmission"]
        assert majorana["transmission"] > results("fig2a").summary()["transmission"]

    def test_crosses_barrier_region(self, results):
        result = results("fig2d")
        grid = result.final.grid
        right = grid.x > result.plan.probe_x + 20.0
        assert np.sum(result.final.density()[right]) * grid.dx > 0.5

    def test_stays_real(self, results):
        summary = results("fig2d").summary()
        assert summary["max_reality_residual"] <= 1e-8
        assert summary["max_norm_drift"] <= 1e-10


class TestMixedMass:
    def test_invariants(self, results):
        summary = results("mixed-mass").summary()
        assert summary["max_norm_drift"] <= 1e-10
        assert summary["max_reality_residual"] <= 1e-8
        assert 0.0 < summary["transmission"] < 1.0
