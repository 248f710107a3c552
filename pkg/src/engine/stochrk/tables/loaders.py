"""Read and write coefficient tables in the JSON coefficient-file format.

File layout (rationals are JSON strings such as "1/2", "-5", "0")::

    {"name": ..., "description": ..., "stage": s,
     "det_order": "2.0", "stoch_order": "1.5",
     "A0": [[...]], "B0": [[...]], "A1": [[...]], "B1": [[...]],
     "c0": [...], "c1": [...], "a": [...], "b1": [...], "b2": [...],
     optional "b3", "b4", "A2", "B2", "c2", "kind", "comment", "transpose_double"}

The kind is inferred from the optional keys: any of A2/B2/c2 means a weak
vector method, otherwise b3/b4 mean a scalar method, otherwise a strong
vector method.
"""

import json
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional

from stochrk_common.config import settings
from stochrk_common.exceptions import (
    MalformedFractionError,
    MissingKeyError,
    NotExplicitError,
    OutputError,
    ShapeMismatchError,
    TableError,
    TableKindError,
    UnknownNameError,
)
from stochrk_common.logging import get_logger

from ..utils.formatting import format_order, format_rational
from .schemas import KIND_BLOCKS, MATRIX_KEYS, VECTOR_KEYS, CoefficientTable, TableKind

logger = get_logger(__name__)

REQUIRED_KEYS: List[str] = [
    "name", "stage", "det_order", "stoch_order",
    "A0", "B0", "A1", "B1", "c0", "c1", "a", "b1", "b2",
]

# Key order used when writing documents back out
DOCUMENT_ORDER: List[str] = [
    "A0", "B0", "A1", "B1", "A2", "B2",
    "c0", "c1", "c2", "a", "b1", "b2", "b3", "b4",
]

BUNDLED_NAMES: List[str] = ["SRK1W1", "SRK2W1", "K1P1", "SRK1Wm", "SRK2Wm", "WeakSRK2Wm"]


def _data_dir() -> Path:
    """Bundled coefficient files, resolved relative to this file.

    Walk: tables/loaders.py -> tables -> tables/data
    """
    return Path(__file__).resolve().parent / "data"


def _parse_rational(value: Any, where: str) -> Fraction:
    if isinstance(value, bool):
        raise MalformedFractionError(f"{where}: {value!r} is not a rational number")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            raise MalformedFractionError(f"{where}: {value!r} is not a rational number") from None
    raise MalformedFractionError(
        f"{where}: {value!r} must be a quoted rational such as \"1/2\" or an integer"
    )


def _parse_order(value: Any, key: str) -> Fraction:
    if isinstance(value, float):
        value = repr(value)
    return _parse_rational(value, key)


def _parse_vector(document: Mapping[str, Any], key: str, s: int) -> tuple:
    raw = document[key]
    if not isinstance(raw, list) or len(raw) != s:
        size = len(raw) if isinstance(raw, list) else type(raw).__name__
        raise ShapeMismatchError(f"{key}: expected {s} entries for stage {s}, got {size}")
    return tuple(_parse_rational(v, f"{key}[{i + 1}]") for i, v in enumerate(raw))


def _parse_matrix(document: Mapping[str, Any], key: str, s: int) -> tuple:
    raw = document[key]
    if not isinstance(raw, list) or len(raw) != s:
        size = len(raw) if isinstance(raw, list) else type(raw).__name__
        raise ShapeMismatchError(f"{key}: expected {s} rows for stage {s}, got {size}")
    rows = []
    for i, row in enumerate(raw):
        if not isinstance(row, list) or len(row) != s:
            size = len(row) if isinstance(row, list) else type(row).__name__
            raise ShapeMismatchError(f"{key} row {i + 1}: expected {s} entries, got {size}")
        parsed = tuple(_parse_rational(v, f"{key}[{i + 1}][{j + 1}]") for j, v in enumerate(row))
        for j in range(i, s):
            if parsed[j] != 0:
                raise NotExplicitError(
                    f"{key}[{i + 1}][{j + 1}] = {parsed[j]}: coupling blocks must be "
                    f"strictly lower triangular"
                )
        rows.append(parsed)
    return tuple(rows)


def infer_kind(document: Mapping[str, Any]) -> TableKind:
    """Kind from an explicit "kind" key, else from which optional keys are present."""
    if "kind" in document:
        try:
            return TableKind(document["kind"])
        except ValueError:
            options = ", ".join(k.value for k in TableKind)
            raise TableKindError(f"kind {document['kind']!r} is not one of {options}") from None
    if any(key in document for key in ("A2", "B2", "c2")):
        return TableKind.VECTOR_WEAK
    if any(key in document for key in ("b3", "b4")):
        return TableKind.SCALAR_STRONG
    return TableKind.VECTOR_STRONG


def parse_table(document: Mapping[str, Any] | str) -> CoefficientTable:
    """Build a :class:`CoefficientTable` from a decoded or raw JSON document.

    Raises:
        MissingKeyError: a mandatory key (or one the kind needs) is absent.
        MalformedFractionError: an entry is not a rational literal.
        ShapeMismatchError: a block does not match ``stage``.
        NotExplicitError: an A or B block has a nonzero entry on or above the diagonal.
        TableKindError: unknown kind, or blocks the kind does not use.
    """
    if isinstance(document, str):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise TableError(f"coefficient document is not valid JSON: {exc}") from exc
    if not isinstance(document, Mapping):
        raise TableError("coefficient document must be a JSON object")

    missing = [key for key in REQUIRED_KEYS if key not in document]
    if missing:
        raise MissingKeyError(f"coefficient document is missing key(s): {', '.join(missing)}")

    name = document["name"]
    if not isinstance(name, str) or not name or any(ch.isspace() for ch in name):
        raise TableError(f"name must be a single word without spaces, got {name!r}")

    s = document["stage"]
    if isinstance(s, bool) or not isinstance(s, int) or s < 1:
        raise ShapeMismatchError(f"{name}: stage must be a positive integer, got {s!r}")

    kind = infer_kind(document)
    needed = KIND_BLOCKS[kind]
    missing = [key for key in needed if key not in document]
    if missing:
        raise MissingKeyError(f"{name}: {kind.value} table needs key(s): {', '.join(missing)}")
    extra = [key for key in MATRIX_KEYS + VECTOR_KEYS if key in document and key not in needed]
    if extra:
        raise TableKindError(f"{name}: key(s) {', '.join(extra)} do not belong to a {kind.value} table")

    blocks: Dict[str, Any] = {}
    for key in needed:
        if key in MATRIX_KEYS:
            blocks[key] = _parse_matrix(document, key, s)
        else:
            blocks[key] = _parse_vector(document, key, s)

    table = CoefficientTable(
        name=name,
        description=str(document.get("description", "")),
        kind=kind,
        s=s,
        det_order=_parse_order(document["det_order"], "det_order"),
        stoch_order=_parse_order(document["stoch_order"], "stoch_order"),
        comment=str(document.get("comment", "")),
        transpose_double=bool(document.get("transpose_double", False)),
        **blocks,
    )
    logger.debug("table_parsed", table=name, kind=kind.value, stages=s)
    return table


def load_table_file(path: Path | str) -> CoefficientTable:
    """Read and parse one coefficient file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise OutputError(path, f"cannot read coefficient file: {exc.strerror or exc}") from exc
    try:
        return parse_table(text)
    except TableError as exc:
        raise type(exc)(f"{path.name}: {exc}") from exc


def bundled_table_names() -> List[str]:
    return list(BUNDLED_NAMES)


def load_bundled(name: str) -> CoefficientTable:
    """Load a bundled table by name (case-sensitive)."""
    if name not in BUNDLED_NAMES:
        raise UnknownNameError(
            f"No bundled table named {name!r}; available: {', '.join(BUNDLED_NAMES)}"
        )
    return load_table_file(_data_dir() / f"{name}.json")


def bundled_tables() -> List[CoefficientTable]:
    return [load_bundled(name) for name in BUNDLED_NAMES]


def resolve_table(spec: str, search_dir: Optional[Path] = None) -> CoefficientTable:
    """Resolve a table by bundled name, by name in the extra tables directory, or by path."""
    if spec in BUNDLED_NAMES:
        return load_bundled(spec)
    extra = search_dir or settings.extra_tables_dir
    if extra is not None and (Path(extra) / f"{spec}.json").is_file():
        return load_table_file(Path(extra) / f"{spec}.json")
    path = Path(spec)
    if path.suffix == ".json" or path.exists():
        if not path.is_file():
            raise OutputError(path, "coefficient file not found")
        return load_table_file(path)
    raise UnknownNameError(
        f"{spec!r} is neither a bundled table ({', '.join(BUNDLED_NAMES)}) nor a file"
    )


def to_document(table: CoefficientTable) -> Dict[str, Any]:
    """Render a table back into the coefficient-file layout."""
    document: Dict[str, Any] = {
        "name": table.name,
        "description": table.description,
        "stage": table.s,
        "det_order": format_order(table.det_order),
        "stoch_order": format_order(table.stoch_order),
    }
    for key in DOCUMENT_ORDER:
        block = table.block(key)
        if block is None:
            continue
        if key in MATRIX_KEYS:
            document[key] = [[format_rational(v) for v in row] for row in block]
        else:
            document[key] = [format_rational(v) for v in block]
    if table.comment:
        document["comment"] = table.comment
    if table.transpose_double:
        document["transpose_double"] = True
    return document


def dump_table(table: CoefficientTable) -> str:
    """JSON text of :func:`to_document`, two-space indented."""
    return json.dumps(to_document(table), indent=2) + "\n"
