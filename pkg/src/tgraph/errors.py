"""Exception types shared across the package."""


class TgraphError(Exception):
    """Base class for all package-specific errors."""


class DimensionMismatch(TgraphError):
    """Operands have incompatible shapes."""


class ConstantColumn(TgraphError):
    """A time-series column has zero variance."""

    def __init__(self, column: int, detail: str = ""):
        self.column = column
        msg = f"column {column} has zero variance"
        if detail:
            msg = f"{detail}: {msg}"
        super().__init__(msg)


class TooFewTimepoints(TgraphError):
    """Fewer than three time points in a series."""


class EmptyTargets(TgraphError):
    """An entrywise solve was requested with no data targets."""


class NonFinite(TgraphError):
    """A NaN or infinity appeared where a finite value is required."""


class StaleCache(TgraphError):
    """A forward cache does not match the parameters it is used with."""


class IndexOutOfRange(TgraphError):
    """A node index is outside the graph or appears twice."""


class TooLarge(TgraphError):
    """Problem size exceeds the limit of an exhaustive routine."""


class InvalidSpec(TgraphError):
    """A generator or hyper-parameter specification is inconsistent."""


class GroupTooSmall(TgraphError):
    """A group has too few subjects to be split."""


class SingleClassSlice(TgraphError):
    """An evaluation slice contains only one class, so AUC is undefined."""


class DataFormatError(TgraphError):
    """A file on disk does not match the expected format."""
