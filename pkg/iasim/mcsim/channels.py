"""Rayleigh fading channel realizations."""

import logging
from dataclasses import dataclass
from typing import Union

import numpy as np

from ..netmodel import NetworkScenario

logger = logging.getLogger(__name__)

SeedLike = Union[int, np.random.SeedSequence, np.random.Generator, None]


class DimensionMismatch(Exception):
    """Arrays do not match the scenario dimensions."""
    pass


@dataclass(frozen=True)
class ChannelSet:
    """One fading realization: H[k, i] is the nr x nt channel from transmitter i to receiver k."""
    H: np.ndarray
    scenario: NetworkScenario

    def channel(self, k: int, i: int) -> np.ndarray:
        return self.H[k, i]

    def vectorized(self, k: int, i: int) -> np.ndarray:
        return vec(self.H[k, i])


def as_generator(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def crandn(rng: np.random.Generator, *shape: int) -> np.ndarray:
    """Circularly-symmetric complex Gaussian samples with unit variance."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def vec(H: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization."""
    return np.asarray(H).reshape(-1, order="F")


def unvec(h: np.ndarray, nr: int, nt: int) -> np.ndarray:
    return np.asarray(h).reshape((nr, nt), order="F")


def stream_direction(v: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Vector t with v^H H w = t^H vec(H)."""
    return np.kron(np.conj(w), v)


def sample_channels(scenario: NetworkScenario, seed: SeedLike = None) -> ChannelSet:
    """Draw i.i.d. CN(0, 1) channels for every transmitter/receiver pair."""
    rng = as_generator(seed)
    H = crandn(rng, scenario.K, scenario.K, scenario.nr, scenario.nt)
    return ChannelSet(H=H, scenario=scenario)


def check_channels(H: np.ndarray, scenario: NetworkScenario) -> None:
    expected = (scenario.K, scenario.K, scenario.nr, scenario.nt)
    if np.shape(H) != expected:
        raise DimensionMismatch(f"expected channels of shape {expected}, got {np.shape(H)}")
