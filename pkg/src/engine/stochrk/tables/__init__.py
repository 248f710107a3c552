"""Stochastic Butcher tables: models, coefficient files, checks and rendering."""

from .loaders import (
    BUNDLED_NAMES,
    bundled_table_names,
    bundled_tables,
    dump_table,
    infer_kind,
    load_bundled,
    load_table_file,
    parse_table,
    resolve_table,
    to_document,
)
from .render import render_table_math, tableau_groups
from .schemas import (
    KIND_BLOCKS,
    CoefficientTable,
    FloatTable,
    Rational,
    TableKind,
    to_float,
)
from .validation import CheckResult, ValidationReport, validate

__all__ = [
    # Schemas
    "Rational",
    "TableKind",
    "KIND_BLOCKS",
    "CoefficientTable",
    "FloatTable",
    "to_float",
    # Loaders
    "BUNDLED_NAMES",
    "parse_table",
    "infer_kind",
    "load_table_file",
    "load_bundled",
    "bundled_table_names",
    "bundled_tables",
    "resolve_table",
    "to_document",
    "dump_table",
    # Validation
    "CheckResult",
    "ValidationReport",
    "validate",
    # Rendering
    "render_table_math",
    "tableau_groups",
]
