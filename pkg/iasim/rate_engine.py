"""Closed-form average rates under limited feedback.

Per-stream SINR at receiver k is built from three independent pieces: the
desired signal, exponential with mean kappa_kk; d_k - 1 intra-link residual
terms with mean rho_kk; and d_i residual terms with mean rho_ki from every
other transmitter i. The signal-plus-interference and interference-only sums
are Erlang mixtures, and the rate is the difference of their log-moments.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from .models import LossDiagnostic, RateReport
from .netmodel import FeedbackSplit, NetworkScenario, StreamProfile
from .specfun import (
    DomainError,
    ErlangComponent,
    ErlangMixture,
    mixture_log_mean,
    mixture_log_moment,
    mixture_log_scale,
    mixture_weights,
    scaled_expn,
)

logger = logging.getLogger(__name__)

LN2 = math.log(2.0)


class NoInterference(Exception):
    """The link sees no residual interference."""
    pass


@dataclass(frozen=True)
class LinkRateInputs:
    """Per-stream power scales seen by receiver k."""
    kappa: np.ndarray
    rho: np.ndarray
    kappa_signal: float
    sigma2: float
    omega: Tuple[int, ...]


@dataclass(frozen=True)
class FeedbackBudget:
    """Bits needed to hold the limited-feedback gap constant."""
    per_channel: float
    total: float


def quantization_exponent(scenario: NetworkScenario) -> int:
    """Degrees of freedom of a quantized channel direction, nt * nr - 1."""
    return scenario.dim - 1


def link_rate_inputs(
    scenario: NetworkScenario, streams: StreamProfile, split: FeedbackSplit, k: int
) -> LinkRateInputs:
    """Collect kappa, rho and residual shapes for receiver k."""
    if streams.K != scenario.K:
        raise DomainError(f"stream profile has {streams.K} links, scenario has {scenario.K}")
    d = np.asarray(streams.d, dtype=float)
    kappa = scenario.P * scenario.alpha_matrix[k] / d
    bits = split.as_array()[k].astype(float)
    m = quantization_exponent(scenario)
    rho = kappa * np.exp2(-bits / m) if m > 0 else kappa.copy()
    omega = tuple(
        streams.d[i] - 1 if i == k else streams.d[i] for i in range(scenario.K)
    )
    return LinkRateInputs(
        kappa=kappa,
        rho=rho,
        kappa_signal=float(kappa[k]),
        sigma2=scenario.sigma2,
        omega=omega,
    )


def _residual_components(inputs: LinkRateInputs) -> List[ErlangComponent]:
    # zero path loss means no interference from that transmitter
    return [
        ErlangComponent(shape, float(scale))
        for shape, scale in zip(inputs.omega, inputs.rho)
        if shape > 0 and scale > 0
    ]


def build_link_mixtures(
    scenario: NetworkScenario, streams: StreamProfile, split: FeedbackSplit, k: int
) -> Tuple[ErlangMixture, ErlangMixture]:
    """Mixtures of signal-plus-interference and interference-only at receiver k."""
    inputs = link_rate_inputs(scenario, streams, split, k)
    residual = _residual_components(inputs)
    signal = mixture_weights(residual + [ErlangComponent(1, inputs.kappa_signal)])
    interference = mixture_weights(residual)
    return signal, interference


def _clip(rate: float, what: str) -> float:
    if rate < 0:
        if rate < -1e-9:
            logger.warning("Negative %s %.3e clipped to zero", what, rate)
        return 0.0
    return rate


def noise_limited_stream_rate(kappa_signal: float, sigma2: float) -> float:
    """Interference-free per-stream rate E[log2(1 + kappa X / sigma2)], X ~ Exp(1)."""
    if not kappa_signal > 0 or not sigma2 > 0:
        raise DomainError(
            f"noise-limited rate needs positive inputs, got kappa={kappa_signal}, sigma2={sigma2}"
        )
    mu = sigma2 / kappa_signal
    # -exp(mu) Ei(-mu) == exp(mu) E_1(mu)
    return scaled_expn(1, mu) / LN2


def stream_rate(
    scenario: NetworkScenario, streams: StreamProfile, split: FeedbackSplit, k: int
) -> float:
    """Average rate of one data stream on link k, in bits/s/Hz."""
    inputs = link_rate_inputs(scenario, streams, split, k)
    residual = _residual_components(inputs)
    if not residual:
        return noise_limited_stream_rate(inputs.kappa_signal, inputs.sigma2)

    signal = mixture_weights(residual + [ErlangComponent(1, inputs.kappa_signal)])
    interference = mixture_weights(residual)
    rate = (
        mixture_log_moment(signal, inputs.sigma2) - mixture_log_moment(interference, inputs.sigma2)
    ) / LN2
    return _clip(rate, f"stream rate on link {k}")


def _report(per_stream_rates: List[float], streams: StreamProfile) -> RateReport:
    width = max(streams.d)
    per_stream = [
        [rate] * dk + [0.0] * (width - dk) for rate, dk in zip(per_stream_rates, streams.d)
    ]
    per_link = [dk * rate for rate, dk in zip(per_stream_rates, streams.d)]
    return RateReport(per_stream=per_stream, per_link=per_link, sum=math.fsum(per_link))


def sum_rate(
    scenario: NetworkScenario, streams: StreamProfile, split: FeedbackSplit
) -> RateReport:
    """Per-stream, per-link and network sum rates."""
    rates = [stream_rate(scenario, streams, split, k) for k in range(scenario.K)]
    return _report(rates, streams)


def interference_limited_stream_rate(
    scenario: NetworkScenario, streams: StreamProfile, split: FeedbackSplit, k: int
) -> float:
    """High-power ceiling of the stream rate on link k (noise neglected)."""
    inputs = link_rate_inputs(scenario, streams, split, k)
    residual = _residual_components(inputs)
    if not residual:
        raise NoInterference(f"link {k} has no residual interference")
    signal = mixture_weights(residual + [ErlangComponent(1, inputs.kappa_signal)])
    interference = mixture_weights(residual)
    rate = (mixture_log_mean(signal) - mixture_log_mean(interference)) / LN2
    return _clip(rate, f"ceiling rate on link {k}")


def _link_interference(
    scenario: NetworkScenario, streams: StreamProfile, split: FeedbackSplit, k: int
) -> ErlangMixture:
    inputs = link_rate_inputs(scenario, streams, split, k)
    residual = _residual_components(inputs)
    if not residual:
        raise NoInterference(f"link {k} has no residual interference")
    return mixture_weights(residual)


def expected_log_interference(
    scenario: NetworkScenario, streams: StreamProfile, split: FeedbackSplit, k: int
) -> float:
    """E[log2 I] of the residual interference on one stream of link k."""
    return mixture_log_mean(_link_interference(scenario, streams, split, k)) / LN2


def high_power_rate_loss(
    scenario: NetworkScenario, streams: StreamProfile, split: FeedbackSplit, k: int
) -> float:
    """Per-stream rate lost to limited feedback on link k at high power.

    Uses the large-power approximation that keeps only the log of each
    residual scale, so it is P-dependent and grows without bound in P.
    """
    return mixture_log_scale(_link_interference(scenario, streams, split, k)) / LN2


def loss_coefficients(
    scenario: NetworkScenario, split: FeedbackSplit, d: int, reference_d: int = 1
) -> LossDiagnostic:
    """Network loss under symmetric mode d, written as d * (zeta1 - zeta2 ln d).

    zeta1 and zeta2 are built from the mixture weights of mode ``reference_d``
    and held fixed while d varies. ``exact_total`` is d times the sum of the
    per-stream losses with the weights of mode d itself, so the two agree when
    ``reference_d == d`` and drift apart as the residual shapes change with d.
    """
    reference = StreamProfile.symmetric(scenario.K, reference_d)
    streams = StreamProfile.symmetric(scenario.K, d)
    zeta1 = 0.0
    zeta2 = 0.0
    exact = 0.0
    for k in range(scenario.K):
        mixture = _link_interference(scenario, reference, split, k)
        weight = mixture.total_weight
        # scale * reference_d == P * 2^(-B/m) * alpha
        zeta1 += mixture_log_scale(mixture) + weight * math.log(reference_d)
        zeta2 += weight
        exact += mixture_log_scale(_link_interference(scenario, streams, split, k))
    zeta1 /= LN2
    zeta2 /= LN2
    symmetric_total = d * (zeta1 - zeta2 * math.log(d))
    exact_total = d * exact / LN2
    discrepancy = symmetric_total - exact_total
    if abs(discrepancy) > 1e-6:
        log = logger.warning if reference_d == d else logger.info
        log(
            "Symmetric loss %.4f differs from per-stream loss %.4f by %.4f bits "
            "(d=%d, weights from d=%d)",
            symmetric_total,
            exact_total,
            discrepancy,
            d,
            reference_d,
        )
    return LossDiagnostic(
        reference_d=reference_d,
        zeta1=zeta1,
        zeta2=zeta2,
        symmetric_total=symmetric_total,
        exact_total=exact_total,
        discrepancy=discrepancy,
    )


def feedback_bits_for_constant_gap(
    scenario: NetworkScenario, P: float, theta: float
) -> FeedbackBudget:
    """Bits keeping P * 2^(-B/(nt nr - 1)) equal to theta on every channel."""
    if not P > 0 or not theta > 0:
        raise DomainError(f"P and theta must be positive, got P={P}, theta={theta}")
    if P < theta:
        raise DomainError(f"P={P} below theta={theta} would need negative feedback")
    per_channel = quantization_exponent(scenario) * math.log2(P / theta)
    return FeedbackBudget(per_channel=per_channel, total=scenario.K * per_channel)


def constant_gap_split(
    scenario: NetworkScenario, theta: float
) -> Tuple[NetworkScenario, FeedbackSplit]:
    """Scenario and uniform split rounded from the constant-gap budget at scenario.P."""
    budget = feedback_bits_for_constant_gap(scenario, scenario.P, theta)
    per = int(round(budget.per_channel))
    split = FeedbackSplit.from_array(np.full((scenario.K, scenario.K), per, dtype=int))
    return scenario.with_budget(per * scenario.K), split


def perfect_csi_stream_rate(scenario: NetworkScenario, streams: StreamProfile, k: int) -> float:
    """Per-stream rate with interference fully aligned away."""
    kappa = scenario.P * scenario.alpha[k][k] / streams.d[k]
    return noise_limited_stream_rate(kappa, scenario.sigma2)


def perfect_csi_sum_rate(scenario: NetworkScenario, streams: StreamProfile) -> RateReport:
    rates = [perfect_csi_stream_rate(scenario, streams, k) for k in range(scenario.K)]
    return _report(rates, streams)


def rate_gap(
    scenario: NetworkScenario, streams: StreamProfile, split: FeedbackSplit
) -> float:
    """Perfect-CSI sum rate minus limited-feedback sum rate."""
    return perfect_csi_sum_rate(scenario, streams).sum - sum_rate(scenario, streams, split).sum
