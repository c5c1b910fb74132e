"""Trained QoR models: training, prediction and the model file format"""

import json
import logging
import math
from dataclasses import dataclass
from typing import Any, Mapping

import numpy as np

from lib.dataset import Dataset
from lib.datatypes import ModelKind, Target
from lib.exceptions import (
    BadHyperparam,
    CorruptModel,
    InsufficientData,
    SchemaMismatch,
    VersionMismatch,
)
from lib.features import INPUT_NAMES, SCHEMA_VERSION, FeatureVector
from regressors.boosting import GradientBoosting
from regressors.forest import RandomForest
from regressors.perceptron import Perceptron
from regressors.tree import RegressionTree

FORMAT_NAME = "qorpredict-model"
FORMAT_VERSION = 1
MIN_TRAINING_ROWS = 10
# largest regression output whose expm1 is still finite
LOG_FLOAT_MAX = float(np.log(np.finfo(np.float64).max)) - 1e-6

DEFAULT_HYPERPARAMS: dict[ModelKind, dict[str, Any]] = {
    ModelKind.GBT: {
        "n_estimators": 200,
        "max_depth": 4,
        "learning_rate": 0.1,
        "min_samples_leaf": 2,
    },
    ModelKind.RF: {
        "n_estimators": 200,
        "max_depth": 12,
        "min_samples_leaf": 1,
        "max_features": "sqrt",
        "bootstrap": True,
        "n_jobs": 1,
    },
    ModelKind.MLP: {
        "hidden": "64,32",
        "epochs": 500,
        "learning_rate": 1e-3,
        "batch_size": 32,
    },
}

Estimator = GradientBoosting | RandomForest | Perceptron


def _positive_int(key: str, value: Any) -> int:
    try:
        number = int(value)
    except (TypeError, ValueError):
        raise BadHyperparam(key, value, "a positive integer") from None
    if number < 1 or (isinstance(value, float) and not value.is_integer()):
        raise BadHyperparam(key, value, "a positive integer")
    return number


def _coerce(kind: ModelKind, key: str, value: Any) -> Any:
    "Converts one hyperparameter given as text or number and checks its range"
    match key:
        case "n_estimators" | "min_samples_leaf" | "epochs" | "batch_size" | "n_jobs":
            return _positive_int(key, value)
        case "max_depth":
            # 0 grows forest trees without a depth limit
            if kind is ModelKind.RF and str(value).strip().lower() in ("0", "none"):
                return 0
            return _positive_int(key, value)
        case "learning_rate":
            try:
                rate = float(value)
            except (TypeError, ValueError):
                rate = math.nan
            upper = 1.0 if kind is ModelKind.GBT else math.inf
            if not 0.0 < rate <= upper:
                raise BadHyperparam(key, value, f"a number in (0, {upper}]")
            return rate
        case "max_features":
            text = str(value).strip().lower()
            if text in ("sqrt", "all"):
                return text
            return _positive_int(key, value)
        case "bootstrap":
            text = str(value).strip().lower()
            if text in ("true", "1", "yes"):
                return True
            if text in ("false", "0", "no"):
                return False
            raise BadHyperparam(key, value, "true or false")
        case "hidden":
            try:
                sizes = [int(part) for part in str(value).split(",") if part.strip()]
            except ValueError:
                sizes = []
            if not sizes or min(sizes) < 1:
                raise BadHyperparam(key, value, "comma separated positive layer sizes")
            return ",".join(str(size) for size in sizes)
    raise NotImplementedError(key)


def resolve_hyperparams(
    kind: ModelKind, overrides: Mapping[str, Any] | None = None
) -> dict[str, Any]:
    "Defaults of a model kind updated with validated `overrides`"
    result = dict(DEFAULT_HYPERPARAMS[kind])
    for key, value in (overrides or {}).items():
        if key not in result:
            raise BadHyperparam(key, value, "one of " + ", ".join(sorted(result)))
        result[key] = value
    return {key: _coerce(kind, key, value) for key, value in sorted(result.items())}


def _estimator(kind: ModelKind, hyperparams: Mapping[str, Any]) -> Estimator:
    match kind:
        case ModelKind.GBT:
            return GradientBoosting(
                n_estimators=hyperparams["n_estimators"],
                max_depth=hyperparams["max_depth"],
                learning_rate=hyperparams["learning_rate"],
                min_samples_leaf=hyperparams["min_samples_leaf"],
            )
        case ModelKind.RF:
            return RandomForest(
                n_estimators=hyperparams["n_estimators"],
                max_depth=hyperparams["max_depth"] or None,
                min_samples_leaf=hyperparams["min_samples_leaf"],
                max_features=hyperparams["max_features"],
                bootstrap=hyperparams["bootstrap"],
                n_jobs=hyperparams["n_jobs"],
            )
        case ModelKind.MLP:
            return Perceptron(
                hidden=tuple(int(s) for s in hyperparams["hidden"].split(",")),
                epochs=hyperparams["epochs"],
                learning_rate=hyperparams["learning_rate"],
                batch_size=hyperparams["batch_size"],
            )
    raise NotImplementedError(kind)


@dataclass
class TrainedModel:
    "Model of one QoR target"
    kind: ModelKind
    target: Target
    hyperparams: dict[str, Any]
    estimator: Estimator
    seed: int
    schema_version: int = SCHEMA_VERSION
    feature_names: tuple[str, ...] = INPUT_NAMES

    def raw_predict(self, x: np.ndarray) -> np.ndarray:
        "Regression output in training units, log1p for count targets"
        return self.estimator.predict(x)

    def predict_matrix(self, x: np.ndarray) -> np.ndarray:
        "Predictions in label units for rows of model inputs"
        raw = self.raw_predict(x)
        if self.target.log_scaled:
            raw = np.expm1(np.minimum(raw, LOG_FLOAT_MAX))
        return np.maximum(raw, self.target.floor)

    def feature_importances(self) -> list[float]:
        "Gain based importance of every input, only for tree ensembles"
        if isinstance(self.estimator, Perceptron):
            raise NotImplementedError
        return [float(v) for v in self.estimator.importances(len(self.feature_names))]


def design_matrix(vectors: list[FeatureVector]) -> np.ndarray:
    "Rows of model inputs"
    return np.array([v.inputs for v in vectors], dtype=np.float64).reshape(
        len(vectors), len(INPUT_NAMES)
    )


def train(
    kind: ModelKind,
    dataset: Dataset,
    target: Target,
    hyperparams: Mapping[str, Any] | None = None,
    seed: int = 42,
) -> TrainedModel:
    "Fits one model of a target on records that have its label"
    params = resolve_hyperparams(kind, hyperparams)
    records = dataset.labeled(target)
    skipped = len(dataset) - len(records)
    if len(records) < MIN_TRAINING_ROWS:
        raise InsufficientData(
            f"{len(records)} rows with a '{target.column}' label, at least"
            f" {MIN_TRAINING_ROWS} needed to train"
        )
    if skipped:
        logging.info("%d rows without '%s' skipped", skipped, target.column)
    x = design_matrix([r.features for r in records])
    y = np.array([r.labels.get(target) for r in records], dtype=np.float64)
    if target.log_scaled:
        y = np.log1p(y)
    estimator = _estimator(kind, params)
    match estimator:
        case GradientBoosting():
            estimator.fit(x, y)
        case RandomForest() | Perceptron():
            estimator.fit(x, y, seed)
    logging.debug("%s model of %s trained on %d rows", kind, target, len(records))
    return TrainedModel(kind, target, params, estimator, seed, dataset.schema_version)


def predict(model: TrainedModel, x: FeatureVector) -> float:
    "Prediction for one variant, clamped at the target's floor"
    return predict_many(model, [x])[0]


def predict_many(model: TrainedModel, vectors: list[FeatureVector]) -> list[float]:
    for vector in vectors:
        if vector.schema_version != model.schema_version:
            raise SchemaMismatch(
                f"features have schema version {vector.schema_version},"
                f" model expects {model.schema_version}"
            )
    if not vectors:
        return []
    return [float(v) for v in model.predict_matrix(design_matrix(vectors))]


def _hex(values: np.ndarray) -> list[str]:
    return [float(v).hex() for v in np.ravel(values)]


def _unhex(values: list[str]) -> np.ndarray:
    return np.array([float.fromhex(v) for v in values], dtype=np.float64)


def _tree_to_dict(tree: RegressionTree) -> dict[str, Any]:
    return {
        "feature": [int(v) for v in tree.feature],
        "threshold": _hex(tree.threshold),
        "left": [int(v) for v in tree.left],
        "right": [int(v) for v in tree.right],
        "value": _hex(tree.value),
        "gain": _hex(tree.gain),
    }


def _tree_from_dict(data: Mapping[str, Any], width: int) -> RegressionTree:
    tree = RegressionTree(
        feature=np.array(data["feature"], dtype=np.int64),
        threshold=_unhex(data["threshold"]),
        left=np.array(data["left"], dtype=np.int64),
        right=np.array(data["right"], dtype=np.int64),
        value=_unhex(data["value"]),
        gain=_unhex(data["gain"]),
    )
    count = tree.node_count
    arrays = (tree.threshold, tree.left, tree.right, tree.value, tree.gain)
    if count == 0 or any(len(a) != count for a in arrays):
        raise CorruptModel("tree arrays have different lengths")
    inner = tree.feature >= 0
    if (
        tree.feature.max() >= width
        or (tree.feature < -1).any()
        or (tree.left[inner] <= np.flatnonzero(inner)).any()
        or (tree.right[inner] >= count).any()
        or (tree.left[inner] >= count).any()
        or (tree.right[inner] <= np.flatnonzero(inner)).any()
    ):
        raise CorruptModel("tree node references are out of range")
    return tree


def _matrix(values: np.ndarray) -> dict[str, Any]:
    return {"shape": list(values.shape), "data": _hex(values)}


def _unmatrix(data: Mapping[str, Any]) -> np.ndarray:
    return _unhex(data["data"]).reshape(tuple(data["shape"]))


def _parameters(estimator: Estimator) -> dict[str, Any]:
    match estimator:
        case GradientBoosting():
            return {
                "base_score": float(estimator.base_score).hex(),
                "trees": [_tree_to_dict(t) for t in estimator.trees],
            }
        case RandomForest():
            return {"trees": [_tree_to_dict(t) for t in estimator.trees]}
        case Perceptron():
            return {
                "weights": [_matrix(w) for w in estimator.weights],
                "biases": [_matrix(b) for b in estimator.biases],
                "mean": _matrix(estimator.mean),
                "scale": _matrix(estimator.scale),
            }
    raise NotImplementedError


def serialize(model: TrainedModel) -> bytes:
    "Model as UTF-8 JSON, floats as exact hexadecimal strings"
    document = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "kind": model.kind.value,
        "target": model.target.value,
        "schema_version": model.schema_version,
        "feature_names": list(model.feature_names),
        "hyperparams": model.hyperparams,
        "seed": model.seed,
        "parameters": _parameters(model.estimator),
    }
    return (json.dumps(document, sort_keys=True, separators=(",", ":")) + "\n").encode("utf-8")


def deserialize(data: bytes) -> TrainedModel:
    "Reads a model written by `serialize`"
    try:
        document = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as error:
        raise CorruptModel(f"model file is not valid JSON: {error}") from None
    if not isinstance(document, dict) or document.get("format") != FORMAT_NAME:
        raise CorruptModel("not a model file")
    version = document.get("version")
    if version != FORMAT_VERSION:
        raise VersionMismatch(
            f"model file format version {version!r}, only {FORMAT_VERSION} is supported"
        )
    try:
        kind = ModelKind(document["kind"])
        target = Target(document["target"])
        names = tuple(document["feature_names"])
        if names != INPUT_NAMES or document["schema_version"] != SCHEMA_VERSION:
            raise SchemaMismatch("model was trained on another feature schema")
        hyperparams = resolve_hyperparams(kind, document["hyperparams"])
        estimator = _estimator(kind, hyperparams)
        parameters = document["parameters"]
        match estimator:
            case GradientBoosting():
                estimator.base_score = float.fromhex(parameters["base_score"])
                estimator.trees = [_tree_from_dict(t, len(names)) for t in parameters["trees"]]
            case RandomForest():
                estimator.trees = [_tree_from_dict(t, len(names)) for t in parameters["trees"]]
                if not estimator.trees:
                    raise CorruptModel("forest has no trees")
            case Perceptron():
                estimator.weights = [_unmatrix(w) for w in parameters["weights"]]
                estimator.biases = [_unmatrix(b) for b in parameters["biases"]]
                estimator.mean = _unmatrix(parameters["mean"])
                estimator.scale = _unmatrix(parameters["scale"])
                sizes = (len(names),) + estimator.hidden + (1,)
                layers = list(zip(sizes[:-1], sizes[1:]))
                if (
                    [w.shape for w in estimator.weights] != layers
                    or [b.shape for b in estimator.biases] != [(n,) for _, n in layers]
                    or estimator.mean.shape != (len(names),)
                    or estimator.scale.shape != (len(names),)
                ):
                    raise CorruptModel("perceptron parameters do not match its layer sizes")
        seed = int(document["seed"])
    except (KeyError, TypeError, ValueError, IndexError) as error:
        raise CorruptModel(f"model file is incomplete: {error!r}") from None
    return TrainedModel(kind, target, hyperparams, estimator, seed, document["schema_version"], names)
