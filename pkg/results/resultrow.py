"Single row of a report"

from typing import Any


class ResultRow:
    "Base class for all report rows, subclasses name their columns in `header`"
    header: tuple[str, ...] = ()

    def __init__(self) -> None:
        for ind in range(len(self.header)):
            setattr(self, f"f{ind:02d}", None)

    def set_field(self, ind: int, value: str | int | float | None = None):
        "Field setter by field number"
        if not 0 <= ind < len(self.header):
            raise IndexError(f"{type(self).__name__} has no field {ind}")
        setattr(self, f"f{ind:02d}", value)

    def get_field(self, ind: int) -> str | int | float | None:
        "Field getter by field number"
        return getattr(self, f"f{ind:02d}")

    def as_list(self) -> list[Any]:
        "Returns list of all fields"
        return [getattr(self, f"f{ind:02d}") for ind in range(len(self.header))]

    def as_dict(self) -> dict[str, Any]:
        return dict(zip(self.header, self.as_list()))
