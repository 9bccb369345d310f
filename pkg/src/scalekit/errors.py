"""Exception hierarchy shared by every scalekit module.

The CLI maps :class:`InputError` to exit code 2 and :class:`InfeasibleError`
to exit code 3.
"""


class ScalekitError(Exception):
    """Base class for all scalekit errors."""


class InputError(ScalekitError, ValueError):
    """The caller supplied an invalid value."""


class InfeasibleError(ScalekitError):
    """The query is well-formed but has no answer."""


# accounting / scaling


class TooFewPoints(InputError):
    pass


class DegenerateData(InputError):
    pass


class ZeroTokens(InputError):
    pass


# planner


class Unsatisfiable(InfeasibleError):
    pass


class BudgetTooSmall(InfeasibleError):
    pass


class MissingLoss(InputError):
    pass


# parameterization


class ZeroLayers(InputError):
    pass


class OutOfRange(InputError):
    pass


class ZeroBatch(InputError):
    pass


# stability


class EmptyInput(InputError):
    pass


# records / plots


class LocatedError(InputError):
    """An input error tied to a position in a text file."""

    def __init__(self, message: str, line: int, column: int | None = None):
        self.line = line
        self.column = column
        where = f"line {line}" if column is None else f"line {line}, column {column}"
        super().__init__(f"{where}: {message}")


class SchemaMismatch(LocatedError):
    pass


class DuplicateLabel(LocatedError):
    pass


class MalformedNumber(LocatedError):
    pass


class NonFiniteCoordinate(InputError):
    pass
