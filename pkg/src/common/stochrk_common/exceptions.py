"""Error types shared across the toolkit.

Every error raised on purpose derives from :class:`StochRKError`. The three
families map to command-line exit codes: user input (1), numerical failure
(2) and I/O (3).
"""

from typing import Optional


class StochRKError(Exception):
    """Base class for toolkit errors."""

    exit_code: int = 1


class UserInputError(StochRKError, ValueError):
    """Invalid arguments, files or configuration."""

    exit_code = 1


class GridError(UserInputError):
    """Time grid with no steps or a non-positive step size."""


class ShapeError(UserInputError):
    """Array dimensions disagree with the system or accumulator."""


class TableError(UserInputError):
    """Coefficient table could not be parsed or used."""


class MalformedFractionError(TableError):
    """A coefficient entry is not a rational literal."""


class MissingKeyError(TableError):
    """A mandatory coefficient-file key is absent."""


class ShapeMismatchError(TableError):
    """A coefficient block does not match the declared stage count."""


class NotExplicitError(TableError):
    """A stage-coupling block has entries on or above the diagonal."""


class TableKindError(TableError):
    """Table kind does not fit the requested operation."""


class DialectError(UserInputError):
    """Requested emission dialect is not registered."""


class BundleError(UserInputError):
    """Code-generation bundle request is inconsistent."""


class UnknownNameError(UserInputError):
    """Unknown table, problem, method or functional name."""


class NumericalError(StochRKError, ArithmeticError):
    """Numerical failure while integrating or estimating."""

    exit_code = 2


class NonFiniteStateError(NumericalError):
    """Integration produced a NaN or infinite state."""

    def __init__(self, step: int, message: Optional[str] = None) -> None:
        self.step = step
        super().__init__(message or f"non-finite state after step {step}")

    def __reduce__(self):  # type: ignore[no-untyped-def]
        return (type(self), (self.step, str(self)))


class NoAcceptedTrajectoriesError(NumericalError):
    """Every trajectory of an ensemble was rejected."""


class WorkerError(StochRKError, RuntimeError):
    """A Monte Carlo worker failed."""

    exit_code = 2

    def __init__(self, worker_index: int, message: str) -> None:
        self.worker_index = worker_index
        self.message = message
        super().__init__(f"worker {worker_index} failed: {message}")

    def __reduce__(self):  # type: ignore[no-untyped-def]
        return (type(self), (self.worker_index, self.message))


class OutputError(StochRKError, OSError):
    """Reading or writing a file failed."""

    exit_code = 3

    def __init__(self, path: object, message: str) -> None:
        self.path = str(path)
        self.message = message
        super().__init__(f"{self.path}: {message}")

    def __str__(self) -> str:
        return f"{self.path}: {self.message}"

    def __reduce__(self):  # type: ignore[no-untyped-def]
        return (type(self), (self.path, self.message))
