"""Labeled design-variant datasets: CSV storage and the train/test split"""

import logging
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np
import pandas as pd

from lib.datatypes import Target
from lib.exceptions import BadValue, DuplicateKey, InsufficientData, SchemaMismatch
from lib.features import FREQUENCY_NAME, SCHEMA_VERSION, SLOT_NAMES, FeatureVector
from lib.helpers import format_number

KEY_COLUMNS = ("design", "variant", "device")
LABEL_COLUMNS = tuple(target.column for target in Target)
CSV_COLUMNS = KEY_COLUMNS + SLOT_NAMES + (FREQUENCY_NAME,) + LABEL_COLUMNS
MISSING_LABELS = ("", "NA")
CLASS_COLUMNS = ("design", "class")


@dataclass(frozen=True)
class Labels:
    "Post-route QoR of a variant, None where the value was not reported"
    cp_ns: float | None = None
    latency_cycles: int | None = None
    luts: int | None = None

    def get(self, target: Target) -> float | None:
        "Returns label of a target"
        value = getattr(self, target.column)
        return None if value is None else float(value)


@dataclass(frozen=True)
class DesignRecord:
    "One design variant: its features and labels"
    design: str
    variant: str
    device: str
    features: FeatureVector
    labels: Labels

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.design, self.variant, self.device)


@dataclass(frozen=True)
class Dataset:
    "Immutable list of records sharing one feature schema"
    records: tuple[DesignRecord, ...]
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self) -> None:
        seen = set()
        for record in self.records:
            if record.features.schema_version != self.schema_version:
                raise SchemaMismatch(
                    f"record {record.key} has schema version {record.features.schema_version}"
                )
            if record.key in seen:
                raise DuplicateKey(f"duplicate design/variant/device {record.key}")
            seen.add(record.key)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[DesignRecord]:
        return iter(self.records)

    def labeled(self, target: Target) -> list[DesignRecord]:
        "Records where the target label is present"
        return [r for r in self.records if r.labels.get(target) is not None]

    def designs(self) -> list[str]:
        "Distinct design names in first-seen order"
        return list(dict.fromkeys(r.design for r in self.records))

    def for_design(self, design: str) -> "Dataset":
        return self.subset(r for r in self.records if r.design == design)

    def subset(self, records) -> "Dataset":
        return Dataset(tuple(records), self.schema_version)


def _number(row: int, column: str, value: str) -> float:
    try:
        number = float(value)
    except ValueError:
        raise BadValue(row, column, value, "not a number") from None
    if not math.isfinite(number):
        raise BadValue(row, column, value, "not a finite number")
    return number


def _label(row: int, column: str, value: str, integral: bool) -> float | int | None:
    if value.strip() in MISSING_LABELS:
        return None
    number = _number(row, column, value)
    if number <= 0:
        raise BadValue(row, column, value, "label must be positive")
    if integral:
        if not number.is_integer():
            raise BadValue(row, column, value, "label must be an integer")
        return int(number)
    return number


def _record(row: int, cells: dict[str, str]) -> DesignRecord:
    "Converts one CSV row, `row` is its line number in the file"
    for column in KEY_COLUMNS:
        if not cells[column].strip():
            raise BadValue(row, column, cells[column], "identifier is empty")
    slots = tuple(_number(row, name, cells[name]) for name in SLOT_NAMES)
    frequency = _number(row, FREQUENCY_NAME, cells[FREQUENCY_NAME])
    if frequency <= 0:
        raise BadValue(row, FREQUENCY_NAME, cells[FREQUENCY_NAME], "frequency must be positive")
    labels = Labels(
        cp_ns=_label(row, Target.CP.column, cells[Target.CP.column], integral=False),
        latency_cycles=_label(
            row, Target.LATENCY.column, cells[Target.LATENCY.column], integral=True
        ),  # type: ignore[arg-type]
        luts=_label(row, Target.LUT.column, cells[Target.LUT.column], integral=True),  # type: ignore[arg-type]
    )
    if all(labels.get(target) is None for target in Target):
        raise BadValue(row, "labels", "", "row has no label at all")
    return DesignRecord(
        cells["design"].strip(),
        cells["variant"].strip(),
        cells["device"].strip(),
        FeatureVector(slots, frequency),
        labels,
    )


def load_csv(path: str | Path) -> Dataset:
    "Reads a dataset CSV, empty or 'NA' label cells mean the label is absent"
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError:
        raise SchemaMismatch(f"{path}: file is empty, header expected") from None
    if tuple(frame.columns) != CSV_COLUMNS:
        unexpected = [c for c in frame.columns if c not in CSV_COLUMNS]
        missing = [c for c in CSV_COLUMNS if c not in frame.columns]
        raise SchemaMismatch(
            f"{path}: header doesn't match the dataset schema"
            f" (missing: {missing}, unexpected: {unexpected})"
        )
    records = []
    seen: dict[tuple[str, str, str], int] = {}
    for index, cells in enumerate(frame.to_dict("records")):
        row = index + 2
        record = _record(row, cells)
        if record.key in seen:
            raise DuplicateKey(
                f"{path}: row {row} repeats design/variant/device {record.key}"
                f" of row {seen[record.key]}"
            )
        seen[record.key] = row
        records.append(record)
    logging.debug("%d records loaded from %s", len(records), path)
    return Dataset(tuple(records))


def to_frame(dataset: Dataset) -> pd.DataFrame:
    "Dataset as text cells in CSV column order"
    rows = []
    for record in dataset:
        rows.append(
            list(record.key)
            + [format_number(v) for v in record.features.inputs]
            + [
                format_number(record.labels.cp_ns),
                format_number(record.labels.latency_cycles),
                format_number(record.labels.luts),
            ]
        )
    return pd.DataFrame(rows, columns=list(CSV_COLUMNS), dtype=str)


def save_csv(dataset: Dataset, path: str | Path) -> None:
    "Writes a dataset CSV, absent labels become empty cells"
    to_frame(dataset).to_csv(path, index=False, lineterminator="\n")


def split(dataset: Dataset, train_count: int, seed: int) -> tuple[Dataset, Dataset]:
    """
    Shuffles records with `seed` and takes `train_count` of them for training.
    Records whose inputs occur more than once all go to training, so the
    training part may get bigger than asked
    """
    if train_count < 1 or train_count >= len(dataset):
        raise InsufficientData(
            f"can't take {train_count} training records out of {len(dataset)}"
        )
    order = np.random.default_rng(seed).permutation(len(dataset))
    shuffled = [dataset.records[i] for i in order]
    copies = Counter(record.features.inputs for record in shuffled)
    train = [r for r in shuffled if copies[r.features.inputs] > 1]
    test = []
    for record in shuffled:
        if copies[record.features.inputs] > 1:
            continue
        if len(train) < train_count:
            train.append(record)
        else:
            test.append(record)
    if not test:
        logging.warning(
            "all %d records went to training because of duplicates, test set is empty",
            len(dataset),
        )
    return dataset.subset(train), dataset.subset(test)


def features_frame(vectors: list[FeatureVector]) -> pd.DataFrame:
    "Feature rows: 69 slots and the target frequency"
    return pd.DataFrame(
        [[format_number(v) for v in vector.inputs] for vector in vectors],
        columns=list(SLOT_NAMES + (FREQUENCY_NAME,)),
        dtype=str,
    )


def load_features(path: str | Path) -> list[tuple[tuple[str, str, str], FeatureVector]]:
    """
    Reads feature rows from a feature CSV or a dataset CSV. Rows without
    design/variant/device columns are keyed by their row number
    """
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError:
        raise SchemaMismatch(f"{path}: file is empty, header expected") from None
    missing = [c for c in SLOT_NAMES + (FREQUENCY_NAME,) if c not in frame.columns]
    if missing:
        raise SchemaMismatch(f"{path}: feature columns missing: {missing}")
    result = []
    for index, cells in enumerate(frame.to_dict("records")):
        row = index + 2
        key = (
            cells.get("design", ""),
            cells.get("variant", f"row{row}"),
            cells.get("device", ""),
        )
        slots = tuple(_number(row, name, cells[name]) for name in SLOT_NAMES)
        frequency = _number(row, FREQUENCY_NAME, cells[FREQUENCY_NAME])
        if frequency <= 0:
            raise BadValue(row, FREQUENCY_NAME, cells[FREQUENCY_NAME], "frequency must be positive")
        result.append((key, FeatureVector(slots, frequency)))
    return result


def load_design_classes(path: str | Path) -> dict[str, str]:
    "Reads a design,class CSV mapping every design to its class of similar designs"
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError:
        raise SchemaMismatch(f"{path}: file is empty, header expected") from None
    if tuple(frame.columns) != CLASS_COLUMNS:
        raise SchemaMismatch(f"{path}: header must be {','.join(CLASS_COLUMNS)}")
    classes: dict[str, str] = {}
    for index, cells in enumerate(frame.to_dict("records")):
        row = index + 2
        design, design_class = cells["design"].strip(), cells["class"].strip()
        if not design or not design_class:
            raise BadValue(row, "class" if design else "design", "", "identifier is empty")
        if design in classes:
            raise DuplicateKey(f"{path}: row {row} repeats design '{design}'")
        classes[design] = design_class
    return classes
