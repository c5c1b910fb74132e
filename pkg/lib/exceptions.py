"""Custom exceptions"""


class QorError(Exception):
    """
    Base class for all data errors of the toolkit,
    command line maps it to exit code 2
    """


class MalformedPragma(QorError):
    """
    Raised when a recognized HLS pragma has arguments that can't be parsed
    """

    def __init__(self, line: int, text: str, reason: str) -> None:
        super().__init__(f"line {line}: malformed pragma '{text}': {reason}")
        self.line = line


class ParseError(QorError):
    """
    Raised when textual IR does not follow the supported grammar subset
    """

    def __init__(self, line: int, column: int, token: str, reason: str) -> None:
        super().__init__(f"{line}:{column}: {reason} near '{token}'")
        self.line = line
        self.column = column
        self.token = token


class UnresolvedLabel(QorError):
    """
    Raised when a branch refers to a block label not defined in the function
    """

    def __init__(self, function: str, labels: list[str]) -> None:
        super().__init__(
            f"function @{function}: unresolved branch target(s) "
            + ", ".join(f"%{label}" for label in labels)
        )
        self.function = function
        self.labels = labels


class UnknownOpcode(QorError):
    """
    Raised when an opcode is outside the supported IR subset
    """


class EmptyFunction(QorError):
    """
    Raised when a function has no basic blocks (declaration only)
    """


class UnknownTop(QorError):
    """
    Raised when the requested top function is not found in the module
    """


class NonFiniteFeature(QorError):
    """
    Raised when a feature slot holds NaN or infinity
    """


class UnsupportedModelKind(QorError):
    """
    Raised when an operation is undefined for the given model kind
    """


class SchemaMismatch(QorError):
    """
    Raised when a file header or a feature schema doesn't match the expected one
    """


class DuplicateKey(QorError):
    """
    Raised when (design, variant, device) occurs more than once in a dataset
    """


class BadValue(QorError):
    """
    Raised when a dataset cell can't be understood
    """

    def __init__(self, row: int, column: str, value: str, reason: str) -> None:
        super().__init__(f"row {row}, column '{column}': {reason}: '{value}'")
        self.row = row
        self.column = column


class InsufficientData(QorError):
    """
    Raised when there are too few labeled rows to split or train
    """


class BadHyperparam(QorError):
    """
    Raised when a hyperparameter is unknown or out of its allowed range
    """

    def __init__(self, key: str, value: object, allowed: str) -> None:
        super().__init__(f"hyperparameter '{key}'={value!r} not allowed, expected {allowed}")
        self.key = key
        self.allowed = allowed


class VersionMismatch(QorError):
    """
    Raised when a model file was written by an unsupported format version
    """


class CorruptModel(QorError):
    """
    Raised when a model file is truncated or structurally broken
    """


class ZeroActual(QorError):
    """
    Raised when MAPE is asked for with a zero actual value
    """


class LengthMismatch(QorError):
    """
    Raised when actual and predicted series differ in length or are empty
    """


class DegenerateActual(QorError):
    """
    Raised when R squared is undefined: too few or all-equal actual values
    """


class MissingModel(QorError):
    """
    Raised when a report needs a model of a target that was not given
    """
