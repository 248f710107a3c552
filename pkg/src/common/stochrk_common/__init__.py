"""Shared configuration, logging and error types for stochrk."""

from .config import Settings, settings
from .exceptions import (
    BundleError,
    DialectError,
    GridError,
    MalformedFractionError,
    MissingKeyError,
    NoAcceptedTrajectoriesError,
    NonFiniteStateError,
    NotExplicitError,
    NumericalError,
    OutputError,
    ShapeError,
    ShapeMismatchError,
    StochRKError,
    TableError,
    TableKindError,
    UnknownNameError,
    UserInputError,
    WorkerError,
)
from .logging import configure_logging, get_logger

__all__ = [
    # Config
    "Settings",
    "settings",
    # Logging
    "configure_logging",
    "get_logger",
    # Errors
    "StochRKError",
    "UserInputError",
    "GridError",
    "ShapeError",
    "TableError",
    "MalformedFractionError",
    "MissingKeyError",
    "ShapeMismatchError",
    "NotExplicitError",
    "TableKindError",
    "DialectError",
    "BundleError",
    "UnknownNameError",
    "NumericalError",
    "NonFiniteStateError",
    "NoAcceptedTrajectoriesError",
    "WorkerError",
    "OutputError",
]
