"General data structures"

from enum import StrEnum


class PragmaKind(StrEnum):
    "HLS local synthesis directives understood by the source scanner"
    UNROLL = "unroll"
    PIPELINE = "pipeline"
    ARRAY_PARTITION = "array_partition"
    ARRAY_RESHAPE = "array_reshape"
    INLINE = "inline"
    FUNCTION_INSTANTIATE = "function_instantiate"


class PartitionStyle(StrEnum):
    "Style of array partitioning/reshaping, `complete` also marks a full unroll"
    BLOCK = "block"
    CYCLIC = "cyclic"
    COMPLETE = "complete"


class InstructionCategory(StrEnum):
    "Families of IR instructions"
    MATH = "math"
    SIGN_EXT = "sext"
    ZERO_EXT = "zext"
    LOGIC = "logic"
    MEMORY = "memory"
    VECTOR = "vector"
    CONTROL = "control"
    CAST = "cast"
    OTHER = "other"


# categories that get a (max, avg, total) triple in the IR features
COUNTED_CATEGORIES = (
    InstructionCategory.MATH,
    InstructionCategory.SIGN_EXT,
    InstructionCategory.ZERO_EXT,
    InstructionCategory.LOGIC,
    InstructionCategory.MEMORY,
    InstructionCategory.VECTOR,
    InstructionCategory.OTHER,
)


class FeatureSource(StrEnum):
    "Where a model input comes from"
    HLS_CODE = "HLS code"
    LLVM_IR = "LLVM IR"
    CDFG = "CDFG"
    CALLGRAPH = "Callgraph"
    GLOBAL = "Global directive"


class Target(StrEnum):
    "QoR metrics predicted by the models"
    CP = "cp"
    LATENCY = "latency"
    LUT = "lut"

    @property
    def column(self) -> str:
        "Name of the dataset CSV column holding this label"
        match self:
            case Target.CP:
                return "cp_ns"
            case Target.LATENCY:
                return "latency_cycles"
            case Target.LUT:
                return "luts"
        raise NotImplementedError

    @property
    def title(self) -> str:
        "Human readable column title"
        match self:
            case Target.CP:
                return "Clock Period (ns)"
            case Target.LATENCY:
                return "Latency (clock cycles)"
            case Target.LUT:
                return "# of LUTs"
        raise NotImplementedError

    @property
    def log_scaled(self) -> bool:
        "Count targets span orders of magnitude and are fitted on log1p labels"
        return self in (Target.LATENCY, Target.LUT)

    @property
    def floor(self) -> float:
        "Lowest value a prediction is clamped to"
        return 0.1 if self is Target.CP else 0.0


class ModelKind(StrEnum):
    "Regression model families"
    GBT = "gbt"
    RF = "rf"
    MLP = "mlp"

    @property
    def is_tree(self) -> bool:
        "Tree ensembles have gain-based feature importances"
        return self in (ModelKind.GBT, ModelKind.RF)


class SplitProtocol(StrEnum):
    "How the model comparison groups variants before splitting them"
    PER_DESIGN = "per-design"
    CLUSTER = "cluster"
    UNIFIED = "unified"

    @property
    def default_train_fraction(self) -> float:
        "Unified training pools every design and keeps 70% of it for training"
        return 0.7 if self is SplitProtocol.UNIFIED else 0.3
