"""Per-link SINR evaluation and Monte Carlo rate estimates."""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..models import McMode, McRateReport
from ..netmodel import FeedbackSplit, NetworkScenario, StreamProfile, require_feasible
from ..rate_engine import quantization_exponent
from .channels import (
    ChannelSet,
    DimensionMismatch,
    check_channels,
    sample_channels,
    stream_direction,
    unvec,
    vec,
)
from .ia import IASolution, interference_covariance, leig, solve_ia
from .quantize import (
    QuantizedCSI,
    cell_approx_projections,
    equivalence_residual,
    quantize_with_codebook,
    rvq_codebook,
)

logger = logging.getLogger(__name__)

Z95 = 1.959963984540054


@dataclass(frozen=True)
class LinkEvaluation:
    """Instantaneous quantities of stream j on link k."""
    signal: float
    residual: float
    sinr: float
    inst_rate: float


def _stream_powers(scenario: NetworkScenario, streams: StreamProfile) -> np.ndarray:
    return scenario.P * scenario.alpha_matrix / np.asarray(streams.d, dtype=float)[None, :]


def evaluate_link(
    channels_true: np.ndarray,
    csi_quantized: Optional[Sequence[Sequence[QuantizedCSI]]],
    ia: IASolution,
    scenario: NetworkScenario,
    streams: StreamProfile,
    k: int,
    j: int,
) -> LinkEvaluation:
    """SINR and rate of stream j at receiver k over the true channels."""
    H = channels_true.H if isinstance(channels_true, ChannelSet) else np.asarray(channels_true)
    check_channels(H, scenario)
    if len(ia.W) != scenario.K or len(ia.V) != scenario.K:
        raise DimensionMismatch(f"IA solution covers {len(ia.W)} links, scenario has {scenario.K}")
    if not 0 <= j < streams.d[k] or ia.V[k].shape[1] != streams.d[k]:
        raise DimensionMismatch(f"stream {j} is not carried by link {k}")

    kappa = _stream_powers(scenario, streams)
    v = ia.V[k][:, j]
    signal = kappa[k, k] * abs(v.conj() @ H[k, k] @ ia.W[k][:, j]) ** 2

    residual = 0.0
    for i in range(scenario.K):
        for l in range(streams.d[i]):
            if i == k and l == j:
                continue
            residual += kappa[k, i] * abs(v.conj() @ H[k, i] @ ia.W[i][:, l]) ** 2

    if csi_quantized is not None and ia.leakage < 1e-8:
        _check_error_decomposition(H, csi_quantized, ia, streams, k, j)

    denom = residual + scenario.sigma2
    sinr = signal / denom if denom > 0 else math.inf
    return LinkEvaluation(
        signal=float(signal),
        residual=float(residual),
        sinr=float(sinr),
        inst_rate=float(np.log2(1.0 + sinr)),
    )


def _check_error_decomposition(
    H: np.ndarray,
    csi: Sequence[Sequence[QuantizedCSI]],
    ia: IASolution,
    streams: StreamProfile,
    k: int,
    j: int,
) -> float:
    worst = 0.0
    v = ia.V[k][:, j]
    for i in range(len(ia.W)):
        h = vec(H[k, i])
        htilde = h / np.linalg.norm(h)
        for l in range(streams.d[i]):
            if i == k and l == j:
                continue
            t = stream_direction(v, ia.W[i][:, l])
            exact, aligned = equivalence_residual(htilde, csi[k][i], t)
            worst = max(worst, aligned)
            if exact > 1e-10:
                logger.warning("error decomposition off by %.3e on channel (%d, %d)", exact, k, i)
    if worst > 1e-6:
        logger.warning("aligned residual deviates from a|s^H T|^2 by %.3e at link %d", worst, k)
    return worst


def _ci(samples: np.ndarray) -> float:
    if samples.size < 2:
        return math.inf
    return float(Z95 * samples.std(ddof=1) / math.sqrt(samples.size))


def _report(
    link_rates: np.ndarray, streams: StreamProfile, mode: McMode
) -> McRateReport:
    """Build a report from per-trial link rates of shape (trials, K)."""
    trials = link_rates.shape[0]
    per_link = link_rates.mean(axis=0)
    width = max(streams.d)
    per_stream = [
        [float(per_link[k] / dk)] * dk + [0.0] * (width - dk) for k, dk in enumerate(streams.d)
    ]
    sums = link_rates.sum(axis=1)
    return McRateReport(
        per_stream=per_stream,
        per_link=[float(x) for x in per_link],
        sum=float(sums.mean()),
        per_link_ci95=[_ci(link_rates[:, k]) for k in range(link_rates.shape[1])],
        sum_ci95=_ci(sums),
        trials=trials,
        mode=mode,
        reliable=trials >= 2,
    )


def _cell_approx_rates(
    scenario: NetworkScenario,
    streams: StreamProfile,
    split: FeedbackSplit,
    trials: int,
    rng: np.random.Generator,
) -> np.ndarray:
    K, dim = scenario.K, scenario.dim
    kappa = _stream_powers(scenario, streams)
    bits = split.as_array()
    link_rates = np.zeros((trials, K))
    for k in range(K):
        dk = streams.d[k]
        residual = np.zeros((trials, dk))
        for i in range(K):
            omega = dk - 1 if i == k else streams.d[i]
            if omega == 0 or kappa[k, i] == 0:
                continue
            # stream j projects onto its own block of omega orthonormal directions
            blocks = dk if dk * omega <= dim - 1 else 1
            a_gain, fractions = cell_approx_projections(bits[k, i], dim, blocks * omega, rng, trials)
            per_block = fractions.reshape(trials, blocks, omega).sum(axis=2)
            if blocks == 1:
                per_block = np.repeat(per_block, dk, axis=1)
            residual += kappa[k, i] * a_gain[:, None] * per_block
        signal = kappa[k, k] * rng.exponential(size=(trials, dk))
        link_rates[:, k] = np.log2(1.0 + signal / (residual + scenario.sigma2)).sum(axis=1)
    return link_rates


def design_channels(
    channels: ChannelSet, csi: Sequence[Sequence[QuantizedCSI]]
) -> np.ndarray:
    """Path-loss weighted quantized directions used for IA design."""
    scenario = channels.scenario
    alpha = scenario.alpha_matrix
    H = np.empty_like(channels.H)
    for k in range(scenario.K):
        for i in range(scenario.K):
            H[k, i] = np.sqrt(alpha[k, i]) * unvec(csi[k][i].hhat, scenario.nr, scenario.nt)
    return H


def _true_csi_combiners(
    channels: ChannelSet, ia: IASolution, streams: StreamProfile
) -> IASolution:
    alpha = channels.scenario.alpha_matrix
    H = np.sqrt(alpha)[:, :, None, None] * channels.H
    V = [leig(interference_covariance(H, ia.W, k), streams.d[k]) for k in range(streams.K)]
    return IASolution(W=ia.W, V=V, leakage=ia.leakage, iterations=ia.iterations, converged=ia.converged)


def _rvq_rates(
    scenario: NetworkScenario,
    streams: StreamProfile,
    split: FeedbackSplit,
    trials: int,
    seed: int,
    codebook_seed: int,
    true_csi_combiners: bool,
) -> np.ndarray:
    K = scenario.K
    bits = split.as_array()
    codebooks = [
        [rvq_codebook(scenario.dim, int(bits[k, i]), np.random.default_rng([codebook_seed, k, i])) for i in range(K)]
        for k in range(K)
    ]
    children = np.random.SeedSequence(seed).spawn(trials)
    link_rates = np.zeros((trials, K))
    for n, child in enumerate(children):
        channel_seed, ia_seed = child.spawn(2)
        channels = sample_channels(scenario, channel_seed)
        csi = [[quantize_with_codebook(channels.H[k, i], codebooks[k][i]) for i in range(K)] for k in range(K)]
        ia = solve_ia(design_channels(channels, csi), streams, seed=ia_seed, restarts=1)
        if true_csi_combiners:
            ia = _true_csi_combiners(channels, ia, streams)
        for k in range(K):
            link_rates[n, k] = sum(
                evaluate_link(channels.H, csi, ia, scenario, streams, k, j).inst_rate
                for j in range(streams.d[k])
            )
    return link_rates


def estimate_avg_rate(
    scenario: NetworkScenario,
    streams: StreamProfile,
    split: FeedbackSplit,
    trials: int,
    mode: McMode = McMode.CELL_APPROX,
    seed: int = 0,
    codebook_seed: Optional[int] = None,
    true_csi_combiners: bool = False,
) -> McRateReport:
    """Empirical average rates with 95% normal confidence intervals.

    RVQ runs the full pipeline (channels, codebooks, IA on quantized CSI);
    CELL_APPROX draws the residual terms from the quantization cell model
    and skips IA altogether.
    """
    if trials < 1:
        raise ValueError(f"trials must be at least 1, got {trials}")
    require_feasible(streams, scenario)
    if quantization_exponent(scenario) < 1:
        raise DimensionMismatch("quantized feedback needs nt * nr >= 2")

    if mode == McMode.RVQ:
        link_rates = _rvq_rates(
            scenario,
            streams,
            split,
            trials,
            seed,
            seed if codebook_seed is None else codebook_seed,
            true_csi_combiners,
        )
    else:
        link_rates = _cell_approx_rates(scenario, streams, split, trials, np.random.default_rng(seed))

    report = _report(link_rates, streams, mode)
    if not report.reliable:
        logger.warning("single-trial estimate: confidence interval is unbounded")
    logger.info("MC %s: sum rate %.4f +/- %.4f over %d trials", mode.value, report.sum, report.sum_ci95, trials)
    return report
