"""Feedback-bit allocation, transmission-mode selection and joint optimization."""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, Iterator, List, Optional, Tuple

import numpy as np

from .config import config
from .models import AllocationScheme, OptimizationResult
from .netmodel import (
    FeedbackSplit,
    NetworkScenario,
    StreamProfile,
    max_feasible_mode,
)
from .rate_engine import link_rate_inputs, quantization_exponent, stream_rate, sum_rate

logger = logging.getLogger(__name__)


class BudgetTooLarge(Exception):
    """Exhaustive search would exceed the configured candidate cap."""
    pass


@dataclass(frozen=True)
class ModeCandidate:
    """Sum rate of one symmetric mode under a given split."""
    d: int
    split: FeedbackSplit
    sum_rate: float


class _RowEvaluator:
    """Stream rate of receiver k as a function of its own bit row."""

    def __init__(self, scenario: NetworkScenario, streams: StreamProfile, k: int):
        self.scenario = scenario
        self.streams = streams
        self.k = k
        self._base = np.zeros((scenario.K, scenario.K), dtype=int)
        self._cache: Dict[Tuple[int, ...], float] = {}

    def __call__(self, row: Tuple[int, ...]) -> float:
        cached = self._cache.get(row)
        if cached is None:
            bits = self._base.copy()
            bits[self.k] = row
            cached = stream_rate(self.scenario, self.streams, FeedbackSplit.from_array(bits), self.k)
            self._cache[row] = cached
        return cached

    @property
    def evaluations(self) -> int:
        return len(self._cache)


def _assemble(rows: List[np.ndarray]) -> FeedbackSplit:
    return FeedbackSplit.from_array(np.vstack(rows))


def allocate_equal(scenario: NetworkScenario) -> FeedbackSplit:
    """B/K bits per channel, remainder to the strongest channels."""
    K, B = scenario.K, scenario.B_total
    base, remainder = divmod(B, K)
    alpha = scenario.alpha_matrix
    rows = []
    for k in range(K):
        row = np.full(K, base, dtype=int)
        order = sorted(range(K), key=lambda i: (-alpha[k, i], i))
        row[order[:remainder]] += 1
        rows.append(row)
    return _assemble(rows)


def _apportion(targets: np.ndarray, budget: int) -> np.ndarray:
    """Integer row with the given sum, by largest fractional part (ties by index)."""
    floors = np.floor(targets).astype(int)
    short = budget - int(floors.sum())
    fractions = targets - floors
    order = sorted(range(len(targets)), key=lambda i: (-fractions[i], i))
    for i in order[:short]:
        floors[i] += 1
    return floors


def _rims_row(weights: np.ndarray, budget: int, m: int) -> np.ndarray:
    K = len(weights)
    if budget == 0:
        return np.zeros(K, dtype=int)
    active = [i for i in range(K) if weights[i] > 0]
    if not active:
        # nothing to suppress: fall back to an even spread
        return _apportion(np.full(K, budget / K), budget)

    targets = np.zeros(K)
    while True:
        logs = np.log2(weights[active])
        targets[:] = 0.0
        targets[active] = budget / len(active) + m * (logs - logs.mean())
        negative = [i for i in active if targets[i] < 0]
        if not negative:
            break
        active = [i for i in active if targets[i] >= 0]
    return _apportion(targets, budget)


def allocate_rims(scenario: NetworkScenario, streams: StreamProfile) -> FeedbackSplit:
    """Minimize the expected residual interference sum_i c_i 2^(-B_i/m) per receiver."""
    m = max(quantization_exponent(scenario), 1)
    empty = FeedbackSplit.zeros(scenario.K)
    rows = []
    for k in range(scenario.K):
        inputs = link_rate_inputs(scenario, streams, empty, k)
        weights = inputs.kappa * np.asarray(inputs.omega, dtype=float)
        rows.append(_rims_row(weights, scenario.B_total, m))
    return _assemble(rows)


def allocate_greedy(scenario: NetworkScenario, streams: StreamProfile) -> FeedbackSplit:
    """Award each bit to the channel with the largest rate increment."""
    K = scenario.K
    rows = []
    for k in range(K):
        evaluate = _RowEvaluator(scenario, streams, k)
        row = [0] * K
        for _ in range(scenario.B_total):
            current = evaluate(tuple(row))
            best_i, best_gain = 0, -math.inf
            for i in range(K):
                row[i] += 1
                gain = evaluate(tuple(row)) - current
                row[i] -= 1
                if gain > best_gain:
                    best_i, best_gain = i, gain
            row[best_i] += 1
            logger.debug("receiver %d: bit to channel %d (gain %.3e)", k, best_i, best_gain)
        rows.append(np.asarray(row, dtype=int))
    return _assemble(rows)


def _compositions(total: int, parts: int) -> Iterator[Tuple[int, ...]]:
    """All compositions of total into parts nonnegative integers, lexicographic."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def allocate_exhaustive(scenario: NetworkScenario, streams: StreamProfile) -> FeedbackSplit:
    """Brute-force best composition of B per receiver."""
    K, B = scenario.K, scenario.B_total
    if K ** B > config.exhaustive_cap:
        raise BudgetTooLarge(
            f"K^B = {K}^{B} exceeds the exhaustive cap of {config.exhaustive_cap}"
        )
    rows = []
    for k in range(K):
        evaluate = _RowEvaluator(scenario, streams, k)
        best_row: Optional[Tuple[int, ...]] = None
        best_rate = -math.inf
        for row in _compositions(B, K):
            rate = evaluate(row)
            if rate > best_rate:
                best_row, best_rate = row, rate
        rows.append(np.asarray(best_row, dtype=int))
    return _assemble(rows)


def allocate(
    scheme: AllocationScheme, scenario: NetworkScenario, streams: StreamProfile
) -> FeedbackSplit:
    """Dispatch to the allocator for a scheme."""
    if scheme == AllocationScheme.EQUAL:
        return allocate_equal(scenario)
    if scheme == AllocationScheme.RESIDUAL_MIN:
        return allocate_rims(scenario, streams)
    if scheme == AllocationScheme.GREEDY:
        return allocate_greedy(scenario, streams)
    if scheme == AllocationScheme.EXHAUSTIVE:
        return allocate_exhaustive(scenario, streams)
    raise ValueError(f"Unknown allocation scheme: {scheme}")


def _best(candidates: List[ModeCandidate]) -> ModeCandidate:
    best = candidates[0]
    for cand in candidates[1:]:
        if cand.sum_rate > best.sum_rate:
            best = cand
    return best


def evaluate_modes(
    scenario: NetworkScenario,
    split_for: Callable[[StreamProfile], FeedbackSplit],
) -> List[ModeCandidate]:
    """Sum rate of every feasible symmetric mode, d = 1 .. d_max."""
    d_max = max_feasible_mode(scenario)
    candidates = []
    for d in range(1, d_max + 1):
        streams = StreamProfile.symmetric(scenario.K, d)
        split = split_for(streams)
        rate = sum_rate(scenario, streams, split).sum
        logger.debug("mode d=%d: sum rate %.4f", d, rate)
        candidates.append(ModeCandidate(d=d, split=split, sum_rate=rate))
    return candidates


def select_mode(scenario: NetworkScenario, split_policy: AllocationScheme) -> StreamProfile:
    """Symmetric mode with the highest sum rate under an allocation policy."""
    best = _best(evaluate_modes(scenario, lambda streams: allocate(split_policy, scenario, streams)))
    logger.info("selected mode d=%d (%s, sum rate %.4f)", best.d, split_policy.value, best.sum_rate)
    return StreamProfile.symmetric(scenario.K, best.d)


def joint_optimize(scenario: NetworkScenario) -> OptimizationResult:
    """Alternate greedy bit allocation and mode selection until neither changes.

    The bit step runs greedy allocation for the current mode. The mode step
    scores every feasible d under the greedy split computed for that d. Greedy
    splits are cached per d, so a fixed point is reached within a few rounds.
    Starts from d = 1 with no feedback, stops at a fixed point or after
    ``config.joint_max_iter`` rounds, and returns the best pair seen.
    """
    greedy: Dict[int, FeedbackSplit] = {}

    def greedy_for(streams: StreamProfile) -> FeedbackSplit:
        d = streams.d[0]
        if d not in greedy:
            greedy[d] = allocate_greedy(scenario, streams)
        return greedy[d]

    streams = StreamProfile.symmetric(scenario.K, 1)
    split = FeedbackSplit.zeros(scenario.K)
    best: Optional[ModeCandidate] = None
    history = [sum_rate(scenario, streams, split).sum]
    evaluations = 1
    converged = False
    iterations = 0

    for iterations in range(1, config.joint_max_iter + 1):
        new_split = greedy_for(streams)
        candidates = evaluate_modes(scenario, greedy_for)
        evaluations += len(candidates)
        chosen = _best(candidates)
        if best is None or chosen.sum_rate > best.sum_rate:
            best = chosen
        history.append(chosen.sum_rate)
        logger.debug("joint round %d: d=%d, sum rate %.4f", iterations, chosen.d, chosen.sum_rate)

        new_streams = StreamProfile.symmetric(scenario.K, chosen.d)
        if new_split == split and new_streams == streams:
            converged = True
            break
        split, streams = new_split, new_streams

    if not converged:
        logger.warning("joint optimization stopped after %d rounds without a fixed point", iterations)

    assert best is not None
    logger.info(
        "joint optimum d=%d at %.1f dB after %d rounds (sum rate %.4f)",
        best.d,
        scenario.snr_db,
        iterations,
        best.sum_rate,
    )
    return OptimizationResult(
        split=best.split,
        streams=StreamProfile.symmetric(scenario.K, best.d),
        sum_rate=best.sum_rate,
        iterations=iterations,
        converged=converged,
        evaluations=evaluations,
        history=history,
    )
