"""Reports as CSV and aligned plain-text tables"""

import math
from pathlib import Path
from typing import Sequence

import pandas as pd

from lib.helpers import format_number
from results.resultrow import ResultRow

NOT_AVAILABLE = "NA"


def format_cell(value: object) -> str:
    "Text of one report cell, floats with 4 decimals and missing values as NA"
    match value:
        case None:
            return NOT_AVAILABLE
        case bool():
            return str(value).lower()
        case int():
            return str(value)
        case float() if not math.isfinite(value):
            return NOT_AVAILABLE
        case float():
            return f"{value:.4f}"
    return str(value)


def to_frame(rows: Sequence[ResultRow], header: tuple[str, ...] | None = None) -> pd.DataFrame:
    "Report rows as a frame of formatted text cells"
    columns = header if header is not None else (rows[0].header if rows else ())
    return pd.DataFrame(
        [{name: format_cell(v) for name, v in row.as_dict().items()} for row in rows],
        columns=list(columns),
        dtype=str,
    )


def to_csv(rows: Sequence[ResultRow], header: tuple[str, ...] | None = None) -> str:
    return to_frame(rows, header).to_csv(index=False, lineterminator="\n")


def to_text(rows: Sequence[ResultRow], header: tuple[str, ...] | None = None) -> str:
    "Aligned plain-text table"
    frame = to_frame(rows, header)
    if frame.empty:
        return "  ".join(frame.columns) + "\n"
    return frame.to_string(index=False) + "\n"


def to_sections(sections: Sequence[Sequence[ResultRow]]) -> str:
    "Several CSV tables separated by empty lines"
    return "\n".join(to_csv(rows) for rows in sections if rows)


def raw_csv(rows: Sequence[ResultRow]) -> str:
    "CSV keeping full float precision, used for data consumed by other tools"
    columns = rows[0].header if rows else ()
    frame = pd.DataFrame(
        [
            [
                format_number(v) if v is None or isinstance(v, (int, float)) else str(v)
                for v in row.as_list()
            ]
            for row in rows
        ],
        columns=list(columns),
        dtype=str,
    )
    return frame.to_csv(index=False, lineterminator="\n")


def write_text(text: str, path: str | Path) -> None:
    "Writes report text with Unix line ends"
    Path(path).write_text(text, encoding="utf-8", newline="\n")
