"""Network description types and feasibility logic."""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

logger = logging.getLogger(__name__)


class InfeasibleNetwork(Exception):
    """No interference alignment mode is feasible for the network."""
    pass


class NetworkScenario(BaseModel):
    """Static description of a homogeneous K-link MIMO interference network."""
    model_config = ConfigDict(frozen=True)

    K: int = Field(..., ge=1, description="Number of transmitter/receiver pairs")
    nt: int = Field(..., ge=1, description="Transmit antennas per node")
    nr: int = Field(..., ge=1, description="Receive antennas per node")
    P: float = Field(..., gt=0, description="Per-transmitter power (linear)")
    sigma2: float = Field(1.0, gt=0, description="Noise power (linear)")
    alpha: Tuple[Tuple[float, ...], ...] = Field(
        ..., description="K x K path loss, alpha[k][i] from transmitter i to receiver k"
    )
    B_total: int = Field(0, ge=0, description="Feedback bits per receiver")

    @field_validator("alpha")
    @classmethod
    def _check_alpha_entries(cls, value):
        for row in value:
            for entry in row:
                if not math.isfinite(entry) or entry < 0:
                    raise ValueError(f"alpha entries must be finite and nonnegative, got {entry}")
        return value

    @model_validator(mode="after")
    def _check_alpha_shape(self):
        if len(self.alpha) != self.K or any(len(row) != self.K for row in self.alpha):
            raise ValueError(f"alpha must be a {self.K}x{self.K} matrix")
        for k in range(self.K):
            if self.alpha[k][k] <= 0:
                raise ValueError(f"alpha[{k}][{k}] must be strictly positive")
        return self

    @property
    def alpha_matrix(self) -> np.ndarray:
        return np.asarray(self.alpha, dtype=float)

    @property
    def dim(self) -> int:
        """Length of a vectorized channel, nt * nr."""
        return self.nt * self.nr

    @property
    def snr_db(self) -> float:
        return 10.0 * math.log10(self.P / self.sigma2)

    def with_power(self, P: float) -> "NetworkScenario":
        """Copy of the scenario at a different transmit power."""
        return self.model_copy(update={"P": float(P)})

    def with_budget(self, B_total: int) -> "NetworkScenario":
        return self.model_copy(update={"B_total": int(B_total)})


class StreamProfile(BaseModel):
    """Per-link stream counts (the transmission mode)."""
    model_config = ConfigDict(frozen=True)

    d: Tuple[int, ...] = Field(..., min_length=1, description="Streams per link")

    @field_validator("d")
    @classmethod
    def _check_positive(cls, value):
        if any(dk < 1 for dk in value):
            raise ValueError("every link carries at least one stream")
        return value

    @classmethod
    def symmetric(cls, K: int, d: int) -> "StreamProfile":
        return cls(d=(d,) * K)

    @property
    def K(self) -> int:
        return len(self.d)


class FeedbackSplit(BaseModel):
    """Per-receiver partition of the feedback budget across the K channels."""
    model_config = ConfigDict(frozen=True)

    bits: Tuple[Tuple[int, ...], ...] = Field(
        ..., description="bits[k][i] spent by receiver k on channel H_{k,i}"
    )

    @classmethod
    def from_array(cls, bits: np.ndarray) -> "FeedbackSplit":
        arr = np.asarray(bits, dtype=int)
        return cls(bits=tuple(tuple(int(b) for b in row) for row in arr))

    @classmethod
    def zeros(cls, K: int) -> "FeedbackSplit":
        return cls.from_array(np.zeros((K, K), dtype=int))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.bits, dtype=int)

    def with_row(self, k: int, row: Sequence[int]) -> "FeedbackSplit":
        arr = self.as_array()
        arr[k] = np.asarray(row, dtype=int)
        return FeedbackSplit.from_array(arr)


@dataclass(frozen=True)
class SplitViolation:
    """First violation found in a feedback split."""
    row: Optional[int]
    message: str


def max_feasible_mode(scenario: NetworkScenario) -> int:
    """Largest symmetric stream count with nt + nr - (K+1) d >= 0."""
    d_max = (scenario.nt + scenario.nr) // (scenario.K + 1)
    if d_max < 1:
        raise InfeasibleNetwork(
            f"no feasible mode: nt={scenario.nt}, nr={scenario.nr}, K={scenario.K}"
        )
    return d_max


def is_feasible(streams: StreamProfile, scenario: NetworkScenario) -> bool:
    """Feasibility of a stream profile.

    Only the symmetric condition is known to be sufficient, so asymmetric
    profiles are checked per link against the same bound and otherwise
    accepted without further validation.
    """
    if streams.K != scenario.K:
        return False
    bound = scenario.nt + scenario.nr
    return all(bound - (scenario.K + 1) * dk >= 0 for dk in streams.d)


def require_feasible(streams: StreamProfile, scenario: NetworkScenario) -> None:
    if not is_feasible(streams, scenario):
        raise InfeasibleNetwork(
            f"stream profile {streams.d} is not feasible for nt={scenario.nt}, "
            f"nr={scenario.nr}, K={scenario.K}"
        )


def validate_split(
    split: FeedbackSplit, scenario: NetworkScenario
) -> Optional[SplitViolation]:
    """Return None when every row is nonnegative and sums to B_total."""
    arr = split.as_array()
    if arr.shape != (scenario.K, scenario.K):
        return SplitViolation(
            row=None, message=f"expected {scenario.K}x{scenario.K} bits, got {arr.shape}"
        )
    for k, row in enumerate(arr):
        if np.any(row < 0):
            return SplitViolation(row=k, message=f"row {k} has negative entries: {row.tolist()}")
        if int(row.sum()) != scenario.B_total:
            return SplitViolation(
                row=k,
                message=f"row {k} sums to {int(row.sum())}, expected {scenario.B_total}",
            )
    return None
