"""Pydantic models for iasim reports and results."""

from enum import Enum
from typing import List, Optional

from pydantic import BaseModel, Field

from .netmodel import FeedbackSplit, StreamProfile


class AllocationScheme(str, Enum):
    """Feedback-bit allocation policy."""
    EQUAL = "EAS"
    RESIDUAL_MIN = "RIMS"
    GREEDY = "GREEDY"
    EXHAUSTIVE = "EXHAUSTIVE"


class McMode(str, Enum):
    """How the Monte Carlo oracle models quantized feedback."""
    RVQ = "rvq"
    CELL_APPROX = "cell"


class RateReport(BaseModel):
    """Average rates of every stream, link and the network (bits/s/Hz)."""
    per_stream: List[List[float]] = Field(
        ..., description="K x max(d) per-stream rates, zero-padded beyond d_k"
    )
    per_link: List[float] = Field(..., description="d_k times the stream rate of link k")
    sum: float = Field(..., description="Sum rate over all links")


class McRateReport(RateReport):
    """Monte Carlo rates with 95% normal confidence half-widths."""
    per_link_ci95: List[float] = Field(..., description="Half-width per link")
    sum_ci95: float = Field(..., description="Half-width of the sum rate")
    trials: int = Field(..., ge=1, description="Number of channel realizations")
    mode: McMode = Field(..., description="Feedback model used for the estimate")
    reliable: bool = Field(True, description="False when the CI cannot be estimated")


class OptimizationResult(BaseModel):
    """Outcome of a joint feedback/mode optimization."""
    split: FeedbackSplit
    streams: StreamProfile
    sum_rate: float = Field(..., description="Sum rate of (split, streams)")
    iterations: int = Field(..., ge=0, description="Alternation rounds performed")
    converged: bool = Field(..., description="True when a fixed point was reached")
    evaluations: int = Field(0, ge=0, description="Mode candidates evaluated")
    history: List[float] = Field(default_factory=list, description="Sum rate per round")


class LossDiagnostic(BaseModel):
    """High-power rate loss of a link under a symmetric mode."""
    reference_d: int = Field(1, ge=1, description="Mode whose mixture weights define zeta1 and zeta2")
    zeta1: float = Field(..., description="Mode-independent part of the per-stream loss")
    zeta2: float = Field(..., description="Coefficient of ln(d) in the per-stream loss")
    symmetric_total: float = Field(..., description="d * (zeta1 - zeta2 * ln d)")
    exact_total: float = Field(..., description="d times the per-stream loss with the weights of mode d")
    discrepancy: float = Field(..., description="symmetric_total - exact_total")


class SweepRow(BaseModel):
    """One CSV row of a sweep."""
    scenario_id: str
    snr_db: float
    scheme: str
    mode_d: int
    B_total: int
    rate_theory_bps_hz: float
    rate_mc_bps_hz: Optional[float] = None
    ci95_halfwidth: Optional[float] = None
    trials: int = 0
    seed: int = 0
    error: Optional[str] = Field(None, description="Why the point has no rate; not written to CSV")
