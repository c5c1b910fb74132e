"""Evaluation protocols: held-out error, learning curves, model comparison, frequency sweep, Pareto front"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from lib.dataset import Dataset, DesignRecord, Labels, split
from lib.datatypes import ModelKind, SplitProtocol, Target
from lib.exceptions import (
    BadHyperparam,
    DegenerateActual,
    InsufficientData,
    MissingModel,
    SchemaMismatch,
)
from lib.features import FeatureVector
from regressors.model import TrainedModel, predict_many, train
from results.metrics import mape, r_squared
from results.reportrows import (
    TARGET_ORDER,
    ComparisonResultRow,
    CurveResultRow,
    EvaluationResultRow,
    ParetoResultRow,
    PerDesignResultRow,
    SweepResultRow,
)

MEAN_BASELINE = "Mean"
EXTERNAL_BASELINE = "HLS"
UNIFIED_GROUP = "all designs"
PARETO_TARGETS = (Target.LATENCY, Target.LUT)


@dataclass
class EvalReport:
    "Held-out errors of a model set, None where no labeled row was available"
    per_target: dict[Target, float | None] = field(default_factory=dict)
    per_design: dict[str, dict[Target, float | None]] = field(default_factory=dict)
    r_squared: dict[Target, float | None] = field(default_factory=dict)
    evaluated: dict[Target, int] = field(default_factory=dict)
    skipped: dict[Target, int] = field(default_factory=dict)
    test_size: int = 0

    def rows(self) -> list[EvaluationResultRow]:
        return [
            EvaluationResultRow(
                target,
                self.per_target[target],
                self.r_squared[target],
                self.evaluated[target],
                self.skipped[target],
            )
            for target in TARGET_ORDER
            if target in self.per_target
        ]

    def design_rows(self) -> list[PerDesignResultRow]:
        return [PerDesignResultRow(design, mapes) for design, mapes in self.per_design.items()]


def _actual_and_predicted(
    model: TrainedModel, records: list[DesignRecord]
) -> tuple[list[float], list[float]]:
    labeled = [r for r in records if r.labels.get(model.target) is not None]
    actual = [r.labels.get(model.target) for r in labeled]
    return actual, predict_many(model, [r.features for r in labeled])  # type: ignore[return-value]


def evaluate(models: Iterable[TrainedModel], dataset: Dataset) -> EvalReport:
    "Computes MAPE and R squared of every model over the rows having its label"
    report = EvalReport(test_size=len(dataset))
    for model in models:
        target = model.target
        actual, predicted = _actual_and_predicted(model, list(dataset))
        report.evaluated[target] = len(actual)
        report.skipped[target] = len(dataset) - len(actual)
        report.per_target[target] = mape(actual, predicted) if actual else None
        try:
            report.r_squared[target] = r_squared(actual, predicted)
        except DegenerateActual:
            report.r_squared[target] = None
        for design in dataset.designs():
            records = list(dataset.for_design(design))
            design_actual, design_predicted = _actual_and_predicted(model, records)
            report.per_design.setdefault(design, {})[target] = (
                mape(design_actual, design_predicted) if design_actual else None
            )
        if report.per_target[target] is None:
            logging.warning("no '%s' labels in the evaluation data, reported as NA", target.column)
    return report


def learning_curve(
    dataset: Dataset,
    kind: ModelKind,
    target: Target,
    fractions: list[float],
    seed: int,
    hyperparams: Mapping[str, Any] | None = None,
    holdout_fraction: float = 0.25,
) -> list[CurveResultRow]:
    """
    R squared on a fixed held-out part of the labeled rows for models trained on
    growing nested parts of the remaining rows
    """
    for fraction in fractions:
        if not 0.0 < fraction <= 1.0:
            raise BadHyperparam("fraction", fraction, "a number in (0, 1]")
    records = dataset.labeled(target)
    order = np.random.default_rng(seed).permutation(len(records))
    holdout_count = max(2, round(holdout_fraction * len(records)))
    if holdout_count >= len(records):
        raise InsufficientData(f"{len(records)} labeled rows are too few for a learning curve")
    holdout = dataset.subset(records[i] for i in order[:holdout_count])
    pool = [records[i] for i in order[holdout_count:]]
    points = []
    for fraction in fractions:
        count = max(1, round(fraction * len(pool)))
        model = train(kind, dataset.subset(pool[:count]), target, hyperparams, seed)
        actual, predicted = _actual_and_predicted(model, list(holdout))
        points.append(CurveResultRow(fraction, count, r_squared(actual, predicted)))
        logging.info("learning curve %s/%s: %d rows, fraction %s", kind, target, count, fraction)
    return points


def comparison_groups(
    dataset: Dataset,
    protocol: SplitProtocol,
    design_classes: Mapping[str, str] | None = None,
) -> dict[str, Dataset]:
    """
    Parts of the dataset that get their own models: every design, every class
    of designs (unlisted designs form a class of their own) or all records
    """
    match protocol:
        case SplitProtocol.UNIFIED:
            return {UNIFIED_GROUP: dataset}
        case SplitProtocol.CLUSTER:
            classes = design_classes or {}
            members: dict[str, list[DesignRecord]] = {}
            for record in dataset:
                members.setdefault(classes.get(record.design, record.design), []).append(record)
            return {name: dataset.subset(records) for name, records in members.items()}
    return {design: dataset.for_design(design) for design in dataset.designs()}


def model_comparison(
    dataset: Dataset,
    targets: Iterable[Target],
    seed: int,
    kinds: Iterable[ModelKind] = tuple(ModelKind),
    train_fraction: float | None = None,
    hyperparams: Mapping[ModelKind, Mapping[str, Any]] | None = None,
    baseline_estimates: Mapping[Target, float] | None = None,
    protocol: SplitProtocol = SplitProtocol.PER_DESIGN,
    design_classes: Mapping[str, str] | None = None,
) -> list[ComparisonResultRow]:
    """
    Trains every model kind on `train_fraction` of each group's variants and
    pools the test errors of all groups. Groups are designs, classes of
    designs or the whole dataset depending on `protocol`. Adds the
    predict-the-training-mean baseline and, when given, externally reported
    estimate errors
    """
    targets = list(targets)
    kinds = list(kinds)
    hyperparams = hyperparams or {}
    if train_fraction is None:
        train_fraction = protocol.default_train_fraction
    if not 0.0 < train_fraction < 1.0:
        raise BadHyperparam("train_fraction", train_fraction, "a number in (0, 1)")
    pooled: dict[tuple[str, Target], tuple[list[float], list[float]]] = {}

    def collect(name: str, target: Target, actual: list[float], predicted: list[float]) -> None:
        bucket = pooled.setdefault((name, target), ([], []))
        bucket[0].extend(actual)
        bucket[1].extend(predicted)

    for group, records in comparison_groups(dataset, protocol, design_classes).items():
        train_part, test_part = split(records, round(train_fraction * len(records)), seed)
        logging.debug(
            "%s group %s: %d training, %d test records",
            protocol, group, len(train_part), len(test_part),
        )
        for target in targets:
            train_labels = [r.labels.get(target) for r in train_part.labeled(target)]
            test_labeled = test_part.labeled(target)
            if not train_labels or not test_labeled:
                logging.warning("group %s has no '%s' labels, skipped", group, target.column)
                continue
            mean = math.fsum(train_labels) / len(train_labels)  # type: ignore[arg-type]
            actual = [r.labels.get(target) for r in test_labeled]
            collect(MEAN_BASELINE, target, actual, [mean] * len(actual))  # type: ignore[arg-type]
            for kind in kinds:
                model = train(kind, train_part, target, hyperparams.get(kind), seed)
                collect(kind.value, target, *_actual_and_predicted(model, test_labeled))

    def row(name: str) -> ComparisonResultRow:
        mapes: dict[Target, float | None] = {}
        for target in targets:
            actual, predicted = pooled.get((name, target), ([], []))
            mapes[target] = mape(actual, predicted) if actual else None
        return ComparisonResultRow(name, mapes)

    rows = [row(kind.value) for kind in kinds] + [row(MEAN_BASELINE)]
    if baseline_estimates:
        rows.append(ComparisonResultRow(EXTERNAL_BASELINE, dict(baseline_estimates)))
    return rows


def frequency_sweep(
    models: Mapping[Target, TrainedModel],
    base_features: FeatureVector,
    freqs_mhz: Iterable[float],
) -> list[SweepResultRow]:
    "Predictions at every frequency with all other inputs of `base_features` fixed"
    versions = {model.schema_version for model in models.values()}
    if len(versions) > 1:
        raise SchemaMismatch("models of the sweep were trained on different feature schemas")
    rows = []
    for freq in freqs_mhz:
        vector = base_features.with_frequency(freq)
        predictions: dict[Target, float | None] = {
            target: predict_many(model, [vector])[0] for target, model in models.items()
        }
        rows.append(SweepResultRow(float(freq), predictions))
    return rows


def pareto_indices(points: Sequence[tuple[float, float]]) -> list[int]:
    """
    Indices of the points no other point dominates when both coordinates are
    minimized, ordered by the first coordinate. Of equal points the first one
    is kept
    """
    order = sorted(range(len(points)), key=lambda i: (points[i][0], points[i][1], i))
    front = []
    lowest = math.inf
    for index in order:
        if points[index][1] < lowest:
            front.append(index)
            lowest = points[index][1]
    return front


@dataclass
class ParetoReport:
    "Predicted latency/LUT front and, for labeled variants, the actual one"
    rows: list[ParetoResultRow]
    actual_front: list[tuple[str, str, str]] | None = None

    def matched(self) -> int:
        "Variants of the actual front the predicted front also selects"
        return sum(1 for row in self.rows if row.on_actual_front)


def pareto_front(
    models: Mapping[Target, TrainedModel],
    candidates: Sequence[tuple[tuple[str, str, str], FeatureVector]],
    labels: Mapping[tuple[str, str, str], Labels] | None = None,
) -> ParetoReport:
    """
    Picks the variants with the best predicted latency/LUT trade-off. With
    `labels`, the front is also computed from the reported latencies and LUTs
    of the variants having both, and every selected variant is marked with
    whether it is on that front
    """
    missing = [t for t in PARETO_TARGETS if t not in models]
    if missing:
        raise MissingModel(
            "pareto front needs models of " + ", ".join(t.value for t in missing)
        )
    if models[Target.LATENCY].schema_version != models[Target.LUT].schema_version:
        raise SchemaMismatch("latency and LUT models were trained on different feature schemas")
    if not candidates:
        raise InsufficientData("no variants to choose from")
    vectors = [vector for _, vector in candidates]
    latency = predict_many(models[Target.LATENCY], vectors)
    luts = predict_many(models[Target.LUT], vectors)

    def reported(key: tuple[str, str, str]) -> Labels | None:
        label = labels.get(key) if labels is not None else None
        if label is None or label.latency_cycles is None or label.luts is None:
            return None
        return label

    actual_front = None
    if labels is not None:
        known = [(key, label) for key, _ in candidates if (label := reported(key))]
        points = [(float(lab.latency_cycles), float(lab.luts)) for _, lab in known]  # type: ignore[arg-type]
        actual_front = [known[i][0] for i in pareto_indices(points)]

    rows = []
    for index in pareto_indices(list(zip(latency, luts))):
        key, vector = candidates[index]
        on_actual = None
        if actual_front is not None and reported(key) is not None:
            on_actual = key in actual_front
        rows.append(
            ParetoResultRow(key, vector.target_freq_mhz, latency[index], luts[index], on_actual)
        )
    return ParetoReport(rows, actual_front)
