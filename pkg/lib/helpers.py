"Common helper functions"

import math
from pathlib import Path
from typing import Iterable


def format_number(value: float | int | None) -> str:
    """
    Formats a number for CSV output so that reading it back gives the same float.
    Integral values are written without a fractional part, None as an empty cell
    """
    if value is None:
        return ""
    if isinstance(value, int):
        return str(value)
    if math.isfinite(value) and value.is_integer() and abs(value) < 1e15:
        return str(int(value))
    return repr(float(value))


def parse_number_list(text: str) -> list[float]:
    "Parses comma separated numbers, e.g. '100, 125, 150'"
    return [float(item) for item in text.replace(";", ",").split(",") if item.strip()]


def read_text(path: str | Path) -> str:
    "Reads UTF-8 text file"
    return Path(path).read_text(encoding="utf-8")


def fsum_mean(values: Iterable[float]) -> float:
    "Arithmetic mean with exactly rounded summation, 0 for an empty input"
    items = list(values)
    if not items:
        return 0.0
    return math.fsum(items) / len(items)

