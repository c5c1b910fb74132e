"""Tests of error metrics"""

import pytest

from lib.exceptions import DegenerateActual, LengthMismatch, ZeroActual
from results.metrics import mape, r_squared


class TestMape:
    def test_two_values(self):
        assert mape([7.74, 6.64], [7.44, 7.41]) == pytest.approx(7.736, abs=1e-3)

    def test_single_value(self):
        assert mape([100], [110]) == pytest.approx(10)

    def test_exact_predictions(self):
        assert mape([1.5, 2.5, 9.0], [1.5, 2.5, 9.0]) == 0

    def test_scale_invariant(self):
        actual = [3.0, 8.0, 13.0]
        predicted = [2.5, 9.0, 12.0]
        scaled = mape([a * 1000 for a in actual], [p * 1000 for p in predicted])
        assert scaled == pytest.approx(mape(actual, predicted))

    def test_over_and_under_prediction_count_the_same(self):
        assert mape([10], [12]) == pytest.approx(mape([10], [8]))

    def test_zero_actual(self):
        with pytest.raises(ZeroActual):
            mape([1.0, 0.0], [1.0, 1.0])

    @pytest.mark.parametrize("actual, predicted", [([], []), ([1.0], [1.0, 2.0])])
    def test_lengths(self, actual, predicted):
        with pytest.raises(LengthMismatch):
            mape(actual, predicted)


class TestRSquared:
    def test_perfect(self):
        assert r_squared([1.0, 2.0, 4.0], [1.0, 2.0, 4.0]) == 1

    def test_mean_predictor(self):
        actual = [1.0, 2.0, 4.0, 7.0]
        assert r_squared(actual, [3.5] * 4) == pytest.approx(0, abs=1e-12)

    def test_worse_than_mean(self):
        assert r_squared([1.0, 2.0, 3.0], [3.0, 2.0, 1.0]) == pytest.approx(-3)

    @pytest.mark.parametrize("actual", [[5.0], [2.0, 2.0, 2.0]])
    def test_degenerate(self, actual):
        with pytest.raises(DegenerateActual):
            r_squared(actual, actual)

    def test_lengths(self):
        with pytest.raises(LengthMismatch):
            r_squared([1.0, 2.0], [1.0])
