"""Shared helpers."""

from .files import compute_file_hash, ensure_dir, write_text
from .templating import template_environment
from .formatting import (
    float_literal,
    format_order,
    format_rational,
    format_slope,
    latex_rational,
)

__all__ = [
    "compute_file_hash",
    "ensure_dir",
    "write_text",
    "template_environment",
    "float_literal",
    "format_order",
    "format_rational",
    "format_slope",
    "latex_rational",
]
