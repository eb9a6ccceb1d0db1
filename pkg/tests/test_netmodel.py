"""Tests for network description types and feasibility."""

import numpy as np
import pytest
from pydantic import ValidationError

from iasim.netmodel import (
    FeedbackSplit,
    InfeasibleNetwork,
    NetworkScenario,
    StreamProfile,
    is_feasible,
    max_feasible_mode,
    require_feasible,
    validate_split,
)

pytestmark = pytest.mark.unit


def _scenario(K=3, nt=4, nr=4, B_total=6, alpha=None):
    if alpha is None:
        alpha = tuple(tuple(1.0 if i == k else 0.5 for i in range(K)) for k in range(K))
    return NetworkScenario(K=K, nt=nt, nr=nr, P=10.0, alpha=alpha, B_total=B_total)


class TestNetworkScenario:
    """Test scenario validation."""

    def test_valid_scenario(self):
        """Test a well-formed scenario and its derived properties."""
        scenario = _scenario()
        assert scenario.dim == 16
        assert scenario.alpha_matrix.shape == (3, 3)
        assert scenario.snr_db == pytest.approx(10.0)

    def test_zero_direct_gain_rejected(self):
        """Test that a link without a direct path is rejected."""
        with pytest.raises(ValidationError):
            _scenario(K=2, alpha=((0.0, 0.5), (0.5, 1.0)))

    def test_negative_or_nan_alpha_rejected(self):
        """Test that alpha entries must be finite and nonnegative."""
        with pytest.raises(ValidationError):
            _scenario(K=2, alpha=((1.0, -0.5), (0.5, 1.0)))
        with pytest.raises(ValidationError):
            _scenario(K=2, alpha=((1.0, float("nan")), (0.5, 1.0)))

    def test_alpha_shape_must_match_K(self):
        """Test that a non-square or wrongly sized alpha is rejected."""
        with pytest.raises(ValidationError):
            _scenario(K=3, alpha=((1.0, 0.5), (0.5, 1.0)))

    def test_zero_cross_gain_allowed(self):
        """Test that zero interference paths are valid."""
        scenario = _scenario(K=2, alpha=((1.0, 0.0), (0.0, 1.0)))
        assert scenario.alpha_matrix[0, 1] == 0.0

    def test_nonpositive_power_rejected(self):
        """Test that power must be positive."""
        with pytest.raises(ValidationError):
            NetworkScenario(K=1, nt=2, nr=2, P=0.0, alpha=((1.0,),))

    def test_with_power_and_budget(self):
        """Test copies with a new power or budget."""
        scenario = _scenario()
        assert scenario.with_power(100.0).P == 100.0
        assert scenario.with_budget(9).B_total == 9
        assert scenario.B_total == 6


class TestStreamProfile:
    """Test stream profiles."""

    def test_symmetric(self):
        """Test the symmetric constructor."""
        streams = StreamProfile.symmetric(4, 2)
        assert streams.d == (2, 2, 2, 2)
        assert streams.K == 4

    def test_zero_streams_rejected(self):
        """Test that every link needs a stream."""
        with pytest.raises(ValidationError):
            StreamProfile(d=(1, 0))


class TestFeasibility:
    """Test mode feasibility."""

    @pytest.mark.parametrize(
        "K,nt,nr,expected",
        [(4, 8, 8, 3), (3, 4, 4, 2), (3, 2, 2, 1), (1, 4, 4, 4), (2, 3, 3, 2)],
    )
    def test_max_feasible_mode(self, K, nt, nr, expected):
        """Test the largest symmetric mode."""
        alpha = tuple(tuple(1.0 for _ in range(K)) for _ in range(K))
        scenario = NetworkScenario(K=K, nt=nt, nr=nr, P=1.0, alpha=alpha)
        assert max_feasible_mode(scenario) == expected

    def test_no_feasible_mode(self):
        """Test that too few antennas raise InfeasibleNetwork."""
        alpha = tuple(tuple(1.0 for _ in range(4)) for _ in range(4))
        scenario = NetworkScenario(K=4, nt=1, nr=1, P=1.0, alpha=alpha)
        with pytest.raises(InfeasibleNetwork):
            max_feasible_mode(scenario)

    def test_d_max_nondecreasing_in_antennas(self):
        """Test that adding antennas never lowers the feasible mode."""
        alpha = tuple(tuple(1.0 for _ in range(3)) for _ in range(3))
        previous = 0
        for n in range(2, 12):
            scenario = NetworkScenario(K=3, nt=n, nr=n, P=1.0, alpha=alpha)
            d_max = max_feasible_mode(scenario)
            assert d_max >= previous
            previous = d_max

    def test_is_feasible(self):
        """Test feasibility of symmetric and asymmetric profiles."""
        scenario = _scenario(K=3, nt=4, nr=4)
        assert is_feasible(StreamProfile.symmetric(3, 2), scenario)
        assert not is_feasible(StreamProfile.symmetric(3, 3), scenario)
        assert is_feasible(StreamProfile(d=(1, 2, 1)), scenario)
        assert not is_feasible(StreamProfile.symmetric(2, 1), scenario)

    def test_require_feasible_raises(self):
        """Test that an infeasible profile raises."""
        with pytest.raises(InfeasibleNetwork):
            require_feasible(StreamProfile.symmetric(3, 3), _scenario())


class TestValidateSplit:
    """Test feedback split validation."""

    def test_valid_split(self):
        """Test that a correct split passes."""
        split = FeedbackSplit.from_array([[2, 2, 2], [0, 6, 0], [1, 2, 3]])
        assert validate_split(split, _scenario(B_total=6)) is None

    def test_zero_budget(self):
        """Test the all-zero split with no budget."""
        assert validate_split(FeedbackSplit.zeros(3), _scenario(B_total=0)) is None

    def test_wrong_row_sum(self):
        """Test that the first bad row is reported."""
        split = FeedbackSplit.from_array([[2, 2, 2], [0, 6, 1], [1, 2, 3]])
        violation = validate_split(split, _scenario(B_total=6))
        assert violation is not None
        assert violation.row == 1

    def test_negative_entry(self):
        """Test that negative bits are rejected."""
        split = FeedbackSplit.from_array([[2, 2, 2], [0, 6, 0], [-1, 4, 3]])
        violation = validate_split(split, _scenario(B_total=6))
        assert violation is not None
        assert violation.row == 2

    def test_shape_mismatch(self):
        """Test that a wrongly sized split has no row index."""
        violation = validate_split(FeedbackSplit.zeros(2), _scenario(B_total=0))
        assert violation is not None
        assert violation.row is None

    def test_row_permutation_invariant(self):
        """Test that permuting entries within rows keeps a split valid."""
        arr = np.array([[1, 2, 3], [6, 0, 0], [2, 2, 2]])
        scenario = _scenario(B_total=6)
        permuted = arr[:, [2, 0, 1]]
        assert validate_split(FeedbackSplit.from_array(arr), scenario) is None
        assert validate_split(FeedbackSplit.from_array(permuted), scenario) is None

    def test_with_row(self):
        """Test replacing one row."""
        split = FeedbackSplit.zeros(3).with_row(1, [1, 2, 3])
        assert split.bits == ((0, 0, 0), (1, 2, 3), (0, 0, 0))
