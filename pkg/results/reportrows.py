"Rows of the report sheets"

from lib.datatypes import FeatureSource, Target
from results.resultrow import ResultRow

TARGET_ORDER = (Target.CP, Target.LATENCY, Target.LUT)


class EvaluationResultRow(ResultRow):
    "Error of one model on a dataset"
    header = ("target", "mape_percent", "r_squared", "rows_evaluated", "rows_skipped")

    def __init__(
        self,
        target: Target,
        mape: float | None,
        r_squared: float | None,
        evaluated: int,
        skipped: int,
    ) -> None:
        super().__init__()
        self.set_field(0, target.value)
        self.set_field(1, mape)
        self.set_field(2, r_squared)
        self.set_field(3, evaluated)
        self.set_field(4, skipped)


class PerDesignResultRow(ResultRow):
    "MAPE of every target on the variants of one design"
    header = ("design",) + tuple(f"{t.value}_mape_percent" for t in TARGET_ORDER)

    def __init__(self, design: str, mapes: dict[Target, float | None]) -> None:
        super().__init__()
        self.set_field(0, design)
        for ind, target in enumerate(TARGET_ORDER, start=1):
            self.set_field(ind, mapes.get(target))


class ComparisonResultRow(ResultRow):
    "MAPE of one model family for every target"
    header = ("model", "CLK", "Latency", "LUT")

    def __init__(self, model: str, mapes: dict[Target, float | None]) -> None:
        super().__init__()
        self.set_field(0, model)
        for ind, target in enumerate(TARGET_ORDER, start=1):
            self.set_field(ind, mapes.get(target))

    def mape(self, target: Target) -> float | None:
        return self.get_field(TARGET_ORDER.index(target) + 1)  # type: ignore[return-value]


class CurveResultRow(ResultRow):
    "Point of a learning curve"
    header = ("fraction", "train_rows", "r_squared")

    def __init__(self, fraction: float, train_rows: int, r_squared: float) -> None:
        super().__init__()
        self.set_field(0, fraction)
        self.set_field(1, train_rows)
        self.set_field(2, r_squared)

    @property
    def fraction(self) -> float:
        return self.get_field(0)  # type: ignore[return-value]

    @property
    def r_squared(self) -> float:
        return self.get_field(2)  # type: ignore[return-value]


class SweepResultRow(ResultRow):
    "Predicted QoR at one target frequency"
    header = ("Frequency (MHz)",) + tuple(t.title for t in TARGET_ORDER)

    def __init__(self, freq_mhz: float, predictions: dict[Target, float | None]) -> None:
        super().__init__()
        self.set_field(0, freq_mhz)
        for ind, target in enumerate(TARGET_ORDER, start=1):
            self.set_field(ind, predictions.get(target))

    @property
    def freq_mhz(self) -> float:
        return self.get_field(0)  # type: ignore[return-value]

    def prediction(self, target: Target) -> float | None:
        return self.get_field(TARGET_ORDER.index(target) + 1)  # type: ignore[return-value]


class ImportanceResultRow(ResultRow):
    "Normalized importance of one model input"
    header = ("feature", "source", "importance")

    def __init__(self, feature: str, source: FeatureSource, importance: float) -> None:
        super().__init__()
        self.set_field(0, feature)
        self.set_field(1, source.value)
        self.set_field(2, importance)


class SourceImportanceResultRow(ResultRow):
    "Sum of normalized importances of one feature source"
    header = ("source", "importance")

    def __init__(self, source: FeatureSource, importance: float) -> None:
        super().__init__()
        self.set_field(0, source.value)
        self.set_field(1, importance)


class PredictionResultRow(ResultRow):
    "Prediction for one variant"
    header = ("design", "variant", "device", "target_freq_mhz", "target", "prediction")

    def __init__(
        self, key: tuple[str, str, str], freq_mhz: float, target: Target, prediction: float
    ) -> None:
        super().__init__()
        for ind, part in enumerate(key):
            self.set_field(ind, part)
        self.set_field(3, freq_mhz)
        self.set_field(4, target.value)
        self.set_field(5, prediction)


class ParetoResultRow(ResultRow):
    "Variant on the predicted latency/LUT front"
    header = (
        "design", "variant", "device", "target_freq_mhz",
        Target.LATENCY.title, Target.LUT.title, "on_actual_front",
    )

    def __init__(
        self,
        key: tuple[str, str, str],
        freq_mhz: float,
        latency: float,
        luts: float,
        on_actual_front: bool | None,
    ) -> None:
        super().__init__()
        for ind, part in enumerate(key):
            self.set_field(ind, part)
        self.set_field(3, freq_mhz)
        self.set_field(4, latency)
        self.set_field(5, luts)
        self.set_field(6, on_actual_front)

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.get_field(0), self.get_field(1), self.get_field(2))  # type: ignore[return-value]

    @property
    def on_actual_front(self) -> bool | None:
        return self.get_field(6)  # type: ignore[return-value]
