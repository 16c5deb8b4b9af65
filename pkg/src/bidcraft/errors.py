"""Exception hierarchy.

Every error carries an ``exit_code`` used by the command line: 2 for
usage/data problems, 3 for runtime failures.
"""


class BidcraftError(Exception):
    exit_code = 3


class DataError(BidcraftError, ValueError):
    exit_code = 2


class MappingError(DataError):
    """A column named in the mapping is absent from the file."""


class RowError(DataError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class ConflictError(DataError):
    def __init__(self, slot, prices):
        super().__init__(f"conflicting prices for {slot.date.isoformat()} block {slot.block}: {sorted(prices)}")
        self.slot = slot


class EmptyInput(DataError):
    pass


class DegenerateInput(DataError):
    pass


class DegenerateSeries(DegenerateInput):
    pass


class WindowGapError(DataError):
    def __init__(self, date, message: str = ""):
        super().__init__(message or f"gap inside input window for target day {date.isoformat()}")
        self.date = date


class HistoryError(DataError):
    pass


class SplitError(DataError):
    pass


class ShapeError(DataError):
    pass


class DomainError(DataError):
    pass


class SpecError(DataError):
    pass


class FoldError(DataError):
    pass


class ConvergenceError(BidcraftError):
    def __init__(self, message: str, violation: float):
        super().__init__(f"{message} (residual violation {violation:.3g})")
        self.violation = violation


class SearchError(BidcraftError):
    pass


class LeakageError(BidcraftError):
    pass


class RunError(BidcraftError):
    def __init__(self, message: str, records=None):
        super().__init__(message)
        self.records = records
