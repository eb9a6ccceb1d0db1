"""Shared fixtures for iasim tests."""

import numpy as np
import pytest

from iasim.netmodel import NetworkScenario
from iasim.scenarios import desk_scenario, four_link_scenario


@pytest.fixture
def rng():
    """Seeded generator so statistical checks are reproducible."""
    return np.random.default_rng(42)


@pytest.fixture
def four_link():
    """Factory for the four-link 8x8 reference network."""
    return four_link_scenario


@pytest.fixture
def desk():
    """Factory for the three-link 4x4 network."""
    return desk_scenario


@pytest.fixture
def two_link():
    """Two links, 2x2 antennas, one bit budget of 4."""
    return NetworkScenario(
        K=2, nt=2, nr=2, P=10.0, sigma2=1.0, alpha=((1.0, 0.5), (0.5, 1.0)), B_total=4
    )
