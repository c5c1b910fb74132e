"""Error metrics"""

import math
from typing import Sequence

from lib.exceptions import DegenerateActual, LengthMismatch, ZeroActual


def mape(actual: Sequence[float], predicted: Sequence[float]) -> float:
    "Mean absolute percentage error in percent"
    if len(actual) != len(predicted) or not actual:
        raise LengthMismatch(
            f"{len(actual)} actual and {len(predicted)} predicted values, equal non-zero counts expected"
        )
    if any(a == 0 for a in actual):
        raise ZeroActual("percentage error is undefined for a zero actual value")
    return math.fsum(abs((a - p) / a) for a, p in zip(actual, predicted)) / len(actual) * 100


def r_squared(actual: Sequence[float], predicted: Sequence[float]) -> float:
    "Coefficient of determination, negative for predictors worse than the mean"
    if len(actual) != len(predicted):
        raise LengthMismatch(f"{len(actual)} actual and {len(predicted)} predicted values")
    if len(actual) < 2:
        raise DegenerateActual("at least two actual values needed")
    mean = math.fsum(actual) / len(actual)
    total = math.fsum((a - mean) ** 2 for a in actual)
    if total == 0:
        raise DegenerateActual("all actual values are equal")
    residual = math.fsum((a - p) ** 2 for a, p in zip(actual, predicted))
    return 1 - residual / total
