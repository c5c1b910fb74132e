"""Model input vector: the four feature families plus the target frequency"""

import math
from dataclasses import dataclass, replace
from typing import TYPE_CHECKING

from lib.datatypes import FeatureSource
from lib.errormessage import ErrorMessageHandler
from lib.exceptions import NonFiniteFeature, SchemaMismatch, UnknownTop, UnsupportedModelKind
from lib.graphs import (
    CallGraph,
    CallGraphFeatures,
    Cdfg,
    CdfgFeatures,
    FunctionSummary,
    build_callgraph,
    build_cdfg,
    callgraph_features,
    cdfg_features,
    count_fcus,
)
from lib.irparser import IrFeatures, ir_features, parse_module
from lib.sourcescanner import SourceFeatures, scan_source

if TYPE_CHECKING:
    from regressors.model import TrainedModel

SCHEMA_VERSION = 1
FREQUENCY_NAME = "target_freq_mhz"

FAMILIES: tuple[tuple[FeatureSource, tuple[str, ...]], ...] = (
    (FeatureSource.HLS_CODE, SourceFeatures.names()),
    (FeatureSource.LLVM_IR, IrFeatures.names()),
    (FeatureSource.CDFG, CdfgFeatures.names()),
    (FeatureSource.CALLGRAPH, CallGraphFeatures.names()),
)
SLOT_NAMES: tuple[str, ...] = tuple(name for _, names in FAMILIES for name in names)
INPUT_NAMES: tuple[str, ...] = SLOT_NAMES + (FREQUENCY_NAME,)
INPUT_SOURCES: tuple[FeatureSource, ...] = tuple(
    source for source, names in FAMILIES for _ in names
) + (FeatureSource.GLOBAL,)


@dataclass(frozen=True)
class FeatureVector:
    "69 feature slots plus the target frequency, the 70th model input"
    slots: tuple[float, ...]
    target_freq_mhz: float
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self) -> None:
        if len(self.slots) != len(SLOT_NAMES):
            raise SchemaMismatch(
                f"feature vector has {len(self.slots)} slots, expected {len(SLOT_NAMES)}"
            )
        for name, value in zip(SLOT_NAMES, self.slots):
            if not math.isfinite(value):
                raise NonFiniteFeature(f"feature '{name}' is not finite: {value}")
        if not math.isfinite(self.target_freq_mhz) or self.target_freq_mhz <= 0:
            raise NonFiniteFeature(
                f"'{FREQUENCY_NAME}' must be a positive number, got {self.target_freq_mhz}"
            )

    @property
    def inputs(self) -> tuple[float, ...]:
        "All 70 model inputs in schema order"
        return self.slots + (self.target_freq_mhz,)

    def with_frequency(self, target_freq_mhz: float) -> "FeatureVector":
        "Same design at another target frequency"
        return replace(self, target_freq_mhz=float(target_freq_mhz))

    def as_dict(self) -> dict[str, float]:
        return dict(zip(INPUT_NAMES, self.inputs))


def assemble(
    src: SourceFeatures,
    ir: IrFeatures,
    cdfg: CdfgFeatures,
    cg: CallGraphFeatures,
    target_freq_mhz: float,
) -> FeatureVector:
    "Lays out the families in order [source | IR | CDFG | callgraph] and appends the frequency"
    slots = src.values() + ir.values() + cdfg.values() + cg.values()
    return FeatureVector(tuple(float(v) for v in slots), float(target_freq_mhz))


@dataclass(frozen=True)
class Extraction:
    "Everything the pipeline derived for one design variant"
    features: FeatureVector
    cdfg: Cdfg
    callgraph: CallGraph


def extract(
    source_text: str | None,
    ir_text: str,
    top: str,
    target_freq_mhz: float,
    filename: str = "<source>",
    reporter: ErrorMessageHandler | None = None,
    estimates: dict[str, FunctionSummary] | None = None,
) -> Extraction:
    """
    Runs the full extraction of one design: source scan, IR parse and both graphs.
    A design without behavioral source gets all-zero source features
    """
    src = (
        scan_source(source_text, filename, reporter)
        if source_text is not None
        else SourceFeatures.zero()
    )
    module = parse_module(ir_text)
    function = module.get(top)
    if function is None:
        raise UnknownTop(f"top function @{top} is not in the module")
    ir = ir_features(function)
    cdfg = build_cdfg(function)
    callgraph = build_callgraph(module, estimates)
    features = assemble(
        src,
        ir,
        cdfg_features(cdfg, count_fcus(function)),
        callgraph_features(callgraph, top),
        target_freq_mhz,
    )
    return Extraction(features, cdfg, callgraph)


def extract_features(
    source_text: str | None,
    ir_text: str,
    top: str,
    target_freq_mhz: float,
    filename: str = "<source>",
    reporter: ErrorMessageHandler | None = None,
) -> FeatureVector:
    "Returns the model input vector of one design variant"
    return extract(source_text, ir_text, top, target_freq_mhz, filename, reporter).features


@dataclass(frozen=True)
class ImportanceReport:
    "Normalized importances per input and per feature source"
    per_slot: tuple[tuple[str, float], ...]
    per_source: tuple[tuple[FeatureSource, float], ...]

    def source_total(self, source: FeatureSource) -> float:
        return dict(self.per_source)[source]

    def ranked(self) -> list[tuple[str, float]]:
        "Inputs from the most to the least important, ties in schema order"
        return sorted(self.per_slot, key=lambda item: -item[1])


def importance_report(model: "TrainedModel") -> ImportanceReport:
    "Rescales gain importances of a tree ensemble so that the largest one is 100"
    if not model.kind.is_tree:
        raise UnsupportedModelKind(f"feature importance is undefined for '{model.kind}' models")
    raw = model.feature_importances()
    largest = max(raw, default=0.0)
    scaled = [100.0 * value / largest if largest > 0 else 0.0 for value in raw]
    per_source = []
    for source in FeatureSource:
        members = [v for v, s in zip(scaled, INPUT_SOURCES) if s is source]
        per_source.append((source, math.fsum(members)))
    return ImportanceReport(tuple(zip(INPUT_NAMES, scaled)), tuple(per_source))
