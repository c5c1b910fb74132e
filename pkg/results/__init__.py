"Evaluation protocols and report writers"

from enum import StrEnum


class ResultSheet(StrEnum):
    "Names of sheets in the report workbook"
    EVALUATION = "Evaluation"
    PER_DESIGN = "Per design"
    COMPARISON = "Model comparison"
    LEARNING_CURVE = "Learning curve"
    SWEEP = "Frequency sweep"
    IMPORTANCE = "Feature importance"
    SOURCE_IMPORTANCE = "Importance by source"
    PREDICTIONS = "Predictions"
    PARETO = "Pareto front"
