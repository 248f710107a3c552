"""Write a directory of generated step functions plus its manifest."""

import json
from pathlib import Path
from typing import Iterable, List, Optional, Sequence

from pydantic import BaseModel

from stochrk_common.config import settings
from stochrk_common.exceptions import BundleError
from stochrk_common.logging import get_logger

from ..tables.schemas import CoefficientTable, TableKind
from ..utils.files import compute_file_hash, ensure_dir, write_text
from .emit import emit_math, emit_stepper_source, function_name, get_dialect
from .expansion import expand

logger = get_logger(__name__)

MANIFEST_NAME = "manifest.json"


class ManifestEntry(BaseModel):
    function: str
    table: str
    kind: TableKind
    m: int
    dialect: str
    path: str
    sha256: str
    math_path: Optional[str] = None


class Manifest(BaseModel):
    dialect: str
    entries: List[ManifestEntry] = []

    def functions(self) -> List[str]:
        return [entry.function for entry in self.entries]

    def write(self, out_dir: Path) -> Path:
        path = out_dir / MANIFEST_NAME
        write_text(path, json.dumps(self.model_dump(mode="json"), indent=2) + "\n")
        return path


def default_m_range() -> range:
    return range(1, settings.max_noise_dim + 1)


def generate_bundle(
    tables: Sequence[CoefficientTable],
    out_dir: Path,
    m_range: Optional[Iterable[int]] = None,
    dialect: str = "python",
    with_math: bool = False,
) -> Manifest:
    """One source file per (table, m) and a ``manifest.json`` mapping names to files.

    Scalar-noise tables are generated for m = 1 only.

    Raises:
        BundleError: duplicate table names, or m outside 1..max_noise_dim.
        DialectError: unknown dialect.
        OutputError: a file could not be written.
    """
    chosen = get_dialect(dialect)
    ms = sorted(set(default_m_range() if m_range is None else m_range))
    bad = [m for m in ms if m < 1 or m > settings.max_noise_dim]
    if bad:
        raise BundleError(f"Noise dimensions {bad} outside 1..{settings.max_noise_dim}")
    names = [table.name for table in tables]
    duplicates = sorted({name for name in names if names.count(name) > 1})
    if duplicates:
        raise BundleError(f"Duplicate table name(s): {', '.join(duplicates)}")

    out_dir = ensure_dir(Path(out_dir))
    manifest = Manifest(dialect=chosen.name)
    for table in tables:
        table_ms = [1] if table.kind == TableKind.SCALAR_STRONG else ms
        for m in table_ms:
            exp = expand(table, m)
            function = function_name(table.name, table.kind, m)
            path = out_dir / f"{function}{chosen.extension}"
            write_text(path, emit_stepper_source(exp, chosen.name))
            math_path = None
            if with_math:
                math_path = f"{function}.tex"
                write_text(out_dir / math_path, emit_math(exp))
            manifest.entries.append(
                ManifestEntry(
                    function=function,
                    table=table.name,
                    kind=table.kind,
                    m=m,
                    dialect=chosen.name,
                    path=path.name,
                    sha256=compute_file_hash(path),
                    math_path=math_path,
                )
            )
    manifest.write(out_dir)
    logger.info("bundle_generated", out_dir=str(out_dir), entries=len(manifest.entries), dialect=chosen.name)
    return manifest


def load_manifest(out_dir: Path) -> Manifest:
    return Manifest.model_validate_json((Path(out_dir) / MANIFEST_NAME).read_text(encoding="utf-8"))
