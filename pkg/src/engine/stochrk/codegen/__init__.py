"""Offline generation of specialized step functions from coefficient tables."""

from .bundle import Manifest, ManifestEntry, generate_bundle, load_manifest
from .emit import (
    PYTHON,
    Dialect,
    available_dialects,
    emit_math,
    emit_stepper_source,
    function_name,
    get_dialect,
    register_dialect,
)
from .expansion import (
    XN,
    EvalPoint,
    Evaluation,
    RandomFactor,
    StageDef,
    StageSymbol,
    StepExpansion,
    Term,
    expand,
)

__all__ = [
    # Expansion
    "StageSymbol",
    "EvalPoint",
    "RandomFactor",
    "Term",
    "StageDef",
    "Evaluation",
    "StepExpansion",
    "XN",
    "expand",
    # Emission
    "Dialect",
    "PYTHON",
    "register_dialect",
    "available_dialects",
    "get_dialect",
    "function_name",
    "emit_stepper_source",
    "emit_math",
    # Bundles
    "Manifest",
    "ManifestEntry",
    "generate_bundle",
    "load_manifest",
]
