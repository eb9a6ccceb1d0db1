"""Monte Carlo oracle for the closed-form rate model."""

from .channels import ChannelSet, DimensionMismatch, sample_channels
from .estimate import LinkEvaluation, estimate_avg_rate, evaluate_link
from .ia import IASolution, solve_ia
from .quantize import BitsTooLarge, QuantizedCSI, quantize_rvq, sample_cell_approx

__all__ = [
    "BitsTooLarge",
    "ChannelSet",
    "DimensionMismatch",
    "IASolution",
    "LinkEvaluation",
    "QuantizedCSI",
    "estimate_avg_rate",
    "evaluate_link",
    "quantize_rvq",
    "sample_cell_approx",
    "sample_channels",
    "solve_ia",
]
