"""Shared fixtures"""

from pathlib import Path
from typing import Callable

import pytest

from lib.dataset import Dataset, DesignRecord, Labels
from lib.datatypes import ModelKind
from lib.features import SLOT_NAMES, FeatureVector
from lib.synthetic import synthetic_generate

CORPUS = Path(__file__).resolve().parent.parent / "corpus"

# file stem -> top function
CORPUS_TOPS = {
    "average": "average",
    "matrix_mult": "matrix_mult",
    "sobel": "sobel",
    "sha": "sha_transform",
    "dfadd": "dfadd",
}

FAST_HYPERPARAMS = {
    ModelKind.GBT: {"n_estimators": 60},
    ModelKind.RF: {"n_estimators": 30},
    ModelKind.MLP: {"hidden": "16", "epochs": 60},
}


def vector(values: dict[str, float] | None = None, freq: float = 100.0) -> FeatureVector:
    "Feature vector with zero slots except `values`"
    values = values or {}
    return FeatureVector(tuple(float(values.get(name, 0.0)) for name in SLOT_NAMES), freq)


def record(
    variant: str,
    features: FeatureVector,
    cp: float | None = 5.0,
    latency: int | None = 100,
    luts: int | None = 1000,
    design: str = "d",
) -> DesignRecord:
    return DesignRecord(design, variant, "zynq7000", features, Labels(cp, latency, luts))


@pytest.fixture
def make_record() -> Callable[..., DesignRecord]:
    return record


@pytest.fixture
def make_vector() -> Callable[..., FeatureVector]:
    return vector


@pytest.fixture
def corpus_dir() -> Path:
    return CORPUS


@pytest.fixture
def fast_hyperparams() -> dict[ModelKind, dict[str, int | str]]:
    return FAST_HYPERPARAMS


@pytest.fixture
def linear_dataset() -> Dataset:
    "40 distinct records whose labels grow with max_unroll_factor"
    records = []
    for index in range(40):
        features = vector({"max_unroll_factor": index, "instr_total": index % 7}, 100.0 + index)
        records.append(record(f"v{index:02d}", features, 2.0 + 0.1 * index, 10 + 5 * index, 100 + 20 * index))
    return Dataset(tuple(records))


@pytest.fixture(scope="session")
def synthetic_dataset() -> Dataset:
    "400 variants with 5% label noise"
    return synthetic_generate(400, seed=7, noise_level=0.05)


@pytest.fixture(scope="session")
def noiseless_dataset() -> Dataset:
    return synthetic_generate(400, seed=11)
