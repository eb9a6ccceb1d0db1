"""Tests for feedback allocation and mode selection."""

import math

import numpy as np
import pytest

from iasim.allocator import (
    BudgetTooLarge,
    _compositions,
    allocate,
    allocate_equal,
    allocate_exhaustive,
    allocate_greedy,
    allocate_rims,
    evaluate_modes,
    joint_optimize,
    select_mode,
)
from iasim.models import AllocationScheme
from iasim.netmodel import FeedbackSplit, NetworkScenario, StreamProfile, validate_split
from iasim.rate_engine import link_rate_inputs, stream_rate, sum_rate

SMALL_ALPHA = ((1.0, 0.5, 0.1), (0.55, 1.0, 0.45), (0.1, 0.5, 1.0))


def _small(snr_db=10.0, B_total=9, alpha=SMALL_ALPHA, nt=2, nr=2):
    K = len(alpha)
    return NetworkScenario(K=K, nt=nt, nr=nr, P=10 ** (snr_db / 10), alpha=alpha, B_total=B_total)


def _residual_objective(scenario, streams, row, k):
    inputs = link_rate_inputs(scenario, streams, FeedbackSplit.zeros(scenario.K), k)
    c = inputs.kappa * np.asarray(inputs.omega, dtype=float)
    m = scenario.dim - 1
    return float(np.sum(c * np.exp2(-np.asarray(row, dtype=float) / m)))


class TestEqualAllocation:
    """Test the equal allocation scheme."""

    def test_divisible_budget(self, four_link):
        """Test 20 bits over four channels."""
        split = allocate_equal(four_link(10.0, B_total=20))
        assert split.as_array().tolist() == [[5] * 4] * 4

    def test_zero_budget(self, four_link):
        """Test no feedback gives the zero split."""
        split = allocate_equal(four_link(10.0, B_total=0))
        assert not split.as_array().any()

    def test_remainder_to_strongest(self, four_link):
        """Test leftover bits go to the largest path gains."""
        split = allocate_equal(four_link(10.0, B_total=5)).as_array()
        for k in range(4):
            expected = [1, 1, 1, 1]
            expected[k] = 2
            assert split[k].tolist() == expected


class TestResidualMinimizing:
    """Test the residual-interference minimizing scheme."""

    def test_equal_weights_give_equal_split(self):
        """Test equal c_i reduce to the equal split."""
        alpha = tuple(tuple(1.0 if i == k else 0.5 for i in range(4)) for k in range(4))
        scenario = NetworkScenario(K=4, nt=8, nr=8, P=10.0, alpha=alpha, B_total=20)
        split = allocate_rims(scenario, StreamProfile.symmetric(4, 2))
        assert split == allocate_equal(scenario)

    def test_dominant_interferer_gets_more(self):
        """Test a four times stronger interferer receives more than B/K bits."""
        alpha = ((1.0, 0.8, 0.2), (0.3, 1.0, 0.3), (0.6, 0.15, 1.0))
        scenario = _small(20.0, B_total=12, alpha=alpha, nt=4, nr=4)
        split = allocate_rims(scenario, StreamProfile.symmetric(3, 1)).as_array()
        assert split[0, 1] > 12 / 3
        assert split[2, 0] > 12 / 3

    def test_minimizes_expected_residual(self):
        """Test the rounded solution attains the integer minimum of sum c_i 2^(-B_i/m)."""
        alpha = ((1.0, 0.8, 0.2), (0.3, 1.0, 0.3), (0.6, 0.15, 1.0))
        scenario = _small(20.0, B_total=12, alpha=alpha, nt=4, nr=4)
        streams = StreamProfile.symmetric(3, 1)
        split = allocate_rims(scenario, streams).as_array()
        for k in range(3):
            best = min(_residual_objective(scenario, streams, row, k) for row in _compositions(12, 3))
            assert _residual_objective(scenario, streams, split[k], k) <= best + 1e-12

    def test_zero_budget(self, four_link):
        """Test no feedback gives the zero split."""
        split = allocate_rims(four_link(10.0, B_total=0), StreamProfile.symmetric(4, 2))
        assert not split.as_array().any()


class TestGreedy:
    """Test greedy bit allocation."""

    def test_rows_sum_to_budget(self, four_link):
        """Test every scheme returns a valid split."""
        scenario = four_link(10.0)
        streams = StreamProfile.symmetric(4, 2)
        for scheme in (AllocationScheme.EQUAL, AllocationScheme.RESIDUAL_MIN, AllocationScheme.GREEDY):
            assert validate_split(allocate(scheme, scenario, streams), scenario) is None

    def test_single_bit_goes_to_best_channel(self):
        """Test B = 1 lands where the one-bit gain is largest."""
        scenario = _small(10.0, B_total=1)
        streams = StreamProfile.symmetric(3, 1)
        split = allocate_greedy(scenario, streams).as_array()
        for k in range(3):
            gains = []
            for i in range(3):
                bits = np.zeros((3, 3), dtype=int)
                bits[k, i] = 1
                gains.append(stream_rate(scenario, streams, FeedbackSplit.from_array(bits), k))
            assert split[k].tolist() == np.eye(3, dtype=int)[int(np.argmax(gains))].tolist()

    def test_symmetric_interferers_balanced(self):
        """Test equal interferers end up within one bit of each other."""
        alpha = ((1.0, 0.4, 0.4), (0.4, 1.0, 0.4), (0.4, 0.4, 1.0))
        scenario = _small(20.0, B_total=9, alpha=alpha)
        split = allocate_greedy(scenario, StreamProfile.symmetric(3, 1)).as_array()
        for k in range(3):
            cross = [split[k, i] for i in range(3) if i != k]
            assert split[k, k] == 0
            assert max(cross) - min(cross) <= 1

    @pytest.mark.parametrize("snr_db", [0.0, 10.0, 20.0, 30.0])
    @pytest.mark.parametrize("B_total", [3, 6, 9])
    def test_close_to_exhaustive(self, snr_db, B_total):
        """Test greedy reaches 99% of the exhaustive optimum."""
        scenario = _small(snr_db, B_total=B_total)
        streams = StreamProfile.symmetric(3, 1)
        greedy = sum_rate(scenario, streams, allocate_greedy(scenario, streams)).sum
        best = sum_rate(scenario, streams, allocate_exhaustive(scenario, streams)).sum
        assert best >= greedy - 1e-12
        assert greedy >= 0.99 * best

    def test_random_networks_close_to_exhaustive(self, rng):
        """Test greedy against exhaustive search on random small networks."""
        for _ in range(6):
            K = int(rng.integers(2, 4))
            alpha = np.where(np.eye(K, dtype=bool), 1.0, rng.uniform(0.01, 1.0, size=(K, K)))
            scenario = _small(
                float(rng.choice([0.0, 10.0, 20.0])),
                B_total=int(rng.integers(3, 10)),
                alpha=tuple(tuple(float(a) for a in row) for row in alpha),
            )
            streams = StreamProfile.symmetric(K, 1)
            greedy = sum_rate(scenario, streams, allocate_greedy(scenario, streams)).sum
            best = sum_rate(scenario, streams, allocate_exhaustive(scenario, streams)).sum
            assert greedy >= 0.99 * best

    @pytest.mark.parametrize("snr_db", [20.0, 25.0, 30.0])
    def test_dominance_at_high_snr(self, four_link, snr_db):
        """Test greedy >= residual-minimizing >= equal at high SNR."""
        scenario = four_link(snr_db)
        streams = StreamProfile.symmetric(4, 2)
        rates = {
            scheme: sum_rate(scenario, streams, allocate(scheme, scenario, streams)).sum
            for scheme in (AllocationScheme.EQUAL, AllocationScheme.RESIDUAL_MIN, AllocationScheme.GREEDY)
        }
        assert rates[AllocationScheme.GREEDY] >= rates[AllocationScheme.RESIDUAL_MIN]
        assert rates[AllocationScheme.RESIDUAL_MIN] >= rates[AllocationScheme.EQUAL]

    def test_dominance_on_random_networks(self, rng):
        """Test greedy is never beaten by the residual-minimizing or equal split."""
        for _ in range(30):
            K = int(rng.integers(2, 5))
            N = int(rng.integers(max(2, math.ceil((K + 1) / 2)), 5))
            alpha = np.where(np.eye(K, dtype=bool), 1.0, rng.uniform(0.01, 1.0, size=(K, K)))
            scenario = NetworkScenario(
                K=K,
                nt=N,
                nr=N,
                P=10 ** (float(rng.uniform(-10.0, 40.0)) / 10),
                alpha=tuple(tuple(float(a) for a in row) for row in alpha),
                B_total=int(rng.integers(0, 25)),
            )
            streams = StreamProfile.symmetric(K, 1)
            rates = {
                scheme: sum_rate(scenario, streams, allocate(scheme, scenario, streams)).sum
                for scheme in (AllocationScheme.EQUAL, AllocationScheme.RESIDUAL_MIN, AllocationScheme.GREEDY)
            }
            assert rates[AllocationScheme.GREEDY] >= rates[AllocationScheme.RESIDUAL_MIN] - 1e-9
            assert rates[AllocationScheme.GREEDY] >= rates[AllocationScheme.EQUAL] - 1e-9


class TestExhaustive:
    """Test brute-force allocation."""

    def test_compositions(self):
        """Test the enumeration of 2 bits over 3 channels."""
        rows = list(_compositions(2, 3))
        assert len(rows) == math.comb(4, 2)
        assert rows[0] == (0, 0, 2)
        assert all(sum(r) == 2 for r in rows)

    def test_budget_cap(self, four_link):
        """Test the candidate cap is enforced."""
        with pytest.raises(BudgetTooLarge):
            allocate_exhaustive(four_link(10.0, B_total=20), StreamProfile.symmetric(4, 2))

    def test_picks_best_row(self, two_link):
        """Test the two-link optimum puts every bit on the interfering channel."""
        scenario = two_link.with_budget(2)
        split = allocate_exhaustive(scenario, StreamProfile.symmetric(2, 1))
        assert split.as_array().tolist() == [[0, 2], [2, 0]]


class TestModeSelection:
    """Test symmetric mode selection."""

    @pytest.mark.parametrize("policy", [AllocationScheme.EQUAL, AllocationScheme.GREEDY])
    def test_single_stream_at_high_snr(self, four_link, policy):
        """Test interference dominance favours d = 1."""
        assert select_mode(four_link(30.0), policy).d == (1, 1, 1, 1)

    @pytest.mark.parametrize("snr_db", [-20.0, -30.0])
    def test_max_mode_at_low_snr(self, four_link, snr_db):
        """Test noise dominance favours the largest feasible mode."""
        assert select_mode(four_link(snr_db), AllocationScheme.GREEDY).d == (3, 3, 3, 3)

    def test_max_mode_at_low_snr_equal_split(self, four_link):
        """Test the same with equal allocation."""
        assert select_mode(four_link(-30.0), AllocationScheme.EQUAL).d == (3, 3, 3, 3)

    @pytest.mark.parametrize("snr_db", [0.0, 30.0])
    def test_single_link_multiplexes(self, snr_db):
        """Test a lone link with ample feedback uses every feasible stream."""
        scenario = NetworkScenario(
            K=1, nt=4, nr=4, P=10 ** (snr_db / 10), alpha=((1.0,),), B_total=2000
        )
        assert select_mode(scenario, AllocationScheme.EQUAL).d == (4,)

    def test_evaluate_modes_covers_feasible_range(self, four_link):
        """Test one candidate per feasible d."""
        scenario = four_link(10.0)
        candidates = evaluate_modes(scenario, lambda streams: allocate_equal(scenario))
        assert [c.d for c in candidates] == [1, 2, 3]


class TestJointOptimization:
    """Test alternating allocation and mode selection."""

    def test_high_snr_converges_to_single_stream(self, four_link):
        """Test a fast fixed point at d = 1 at 30 dB."""
        result = joint_optimize(four_link(30.0))
        assert result.converged
        assert result.iterations <= 3
        assert result.streams.d == (1, 1, 1, 1)

    def test_result_is_consistent(self, four_link):
        """Test the reported rate matches the returned pair and is the best seen."""
        scenario = four_link(10.0)
        result = joint_optimize(scenario)
        assert result.sum_rate == pytest.approx(sum_rate(scenario, result.streams, result.split).sum)
        assert result.sum_rate >= max(result.history) - 1e-12
        assert result.sum_rate >= result.history[0]
        assert result.evaluations > 0
        assert validate_split(result.split, scenario) is None

    @pytest.mark.parametrize("snr_db", [-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0])
    def test_not_worse_than_equal_split(self, four_link, snr_db):
        """Test the joint result beats equal allocation at d = 2."""
        scenario = four_link(snr_db)
        streams = StreamProfile.symmetric(4, 2)
        equal = sum_rate(scenario, streams, allocate_equal(scenario)).sum
        assert joint_optimize(scenario).sum_rate >= equal

    def test_gain_at_moderate_snr(self, four_link):
        """Test a strictly positive gain over equal allocation at 15 dB."""
        scenario = four_link(15.0)
        streams = StreamProfile.symmetric(4, 2)
        equal = sum_rate(scenario, streams, allocate_equal(scenario)).sum
        assert joint_optimize(scenario).sum_rate > equal

    @pytest.mark.parametrize("snr_db", [-20.0, -10.0, 10.0])
    def test_at_least_best_greedy_mode(self, four_link, snr_db):
        """Test the joint rate reaches the best mode scored with its own greedy split."""
        scenario = four_link(snr_db)
        best = max(
            sum_rate(scenario, streams, allocate_greedy(scenario, streams)).sum
            for streams in (StreamProfile.symmetric(4, d) for d in (1, 2, 3))
        )
        result = joint_optimize(scenario)
        assert result.sum_rate >= best - 1e-12
        assert result.converged

    def test_max_mode_at_low_snr(self, four_link):
        """Test noise dominance drives the joint loop to the largest feasible mode."""
        scenario = four_link(-20.0)
        result = joint_optimize(scenario)
        assert result.streams.d == (3, 3, 3, 3)
        assert result.streams == select_mode(scenario, AllocationScheme.GREEDY)
