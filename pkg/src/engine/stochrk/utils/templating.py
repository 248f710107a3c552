"""Jinja2 environment for every emitted text artifact."""

from functools import lru_cache
from pathlib import Path

from jinja2 import Environment, FileSystemLoader, StrictUndefined


def _templates_dir() -> Path:
    """Walk: utils/templating.py -> utils -> stochrk -> stochrk/templates"""
    return Path(__file__).resolve().parent.parent / "templates"


@lru_cache(maxsize=1)
def template_environment() -> Environment:
    """Shared environment; undefined names fail loudly instead of rendering empty."""
    return Environment(
        loader=FileSystemLoader(str(_templates_dir())),
        undefined=StrictUndefined,
        keep_trailing_newline=True,
        trim_blocks=True,
        lstrip_blocks=True,
        autoescape=False,
    )
