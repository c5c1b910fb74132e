"Workbook of reports"

import datetime
import logging
from typing import Sequence

from openpyxl import Workbook
from openpyxl.styles import Font
from openpyxl.worksheet.worksheet import Worksheet

from results import ResultSheet
from results.resultrow import ResultRow

# document dates are fixed, the zip container still carries write times
DOCUMENT_DATE = datetime.datetime(2000, 1, 1)


class ResultWorkBookSheet:
    "Single workbook sheet of a report table"

    def __init__(self, sheet: Worksheet, header: tuple[str, ...]) -> None:
        self.sheet = sheet
        self.sheet.append(list(header))
        for cell in self.sheet[1]:
            cell.font = Font(bold=True)

    def add_row(self, row: ResultRow):
        "Adds row to table"
        self.sheet.append(row.as_list())


class ResultWorkBook:
    """Report workbook with one sheet per report kind"""

    def __init__(self, filename: str) -> None:
        self.filename = filename
        logging.info("Initializing report workbook %s ...", self.filename)
        self.workbook = Workbook()
        self.workbook.remove(self.workbook.active)  # type: ignore[arg-type]
        self.workbook.properties.created = DOCUMENT_DATE
        self.workbook.properties.modified = DOCUMENT_DATE
        self.sheets: dict[ResultSheet, ResultWorkBookSheet] = {}

    def add_rows(self, sheet: ResultSheet, rows: Sequence[ResultRow]) -> None:
        "Appends rows to a sheet, the sheet is created with the header of the first row"
        if not rows:
            return
        if sheet not in self.sheets:
            self.sheets[sheet] = ResultWorkBookSheet(
                self.workbook.create_sheet(sheet.value), rows[0].header
            )
        for row in rows:
            self.sheets[sheet].add_row(row)

    def save(self) -> None:
        """Saves report workbook to disk"""
        logging.info("Saving report workbook...")
        self.workbook.save(filename=self.filename)

    def close(self) -> None:
        "Close the workbook"
        self.workbook.close()

    def __enter__(self) -> "ResultWorkBook":
        return self

    def __exit__(self, exc_type, exc_value, exc_traceback) -> None:
        self.close()
