"""File helpers: content hashing and output directories."""

import hashlib
from pathlib import Path

from stochrk_common.exceptions import OutputError


def compute_file_hash(file_path: Path) -> str:
    """Compute the SHA-256 hash of a file.

    Args:
        file_path: Path to the file

    Returns:
        64-character hex string of the SHA-256 digest
    """
    sha = hashlib.sha256()
    try:
        with open(file_path, "rb") as f:
            for chunk in iter(lambda: f.read(8192), b""):
                sha.update(chunk)
    except OSError as exc:
        raise OutputError(file_path, f"cannot hash file: {exc.strerror or exc}") from exc
    return sha.hexdigest()


def ensure_dir(path: Path) -> Path:
    """Create ``path`` (and parents) if needed and return it."""
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError(path, f"cannot create directory: {exc.strerror or exc}") from exc
    return path


def write_text(path: Path, text: str) -> None:
    """Write UTF-8 text with Unix newlines, wrapping failures with the path."""
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
    except OSError as exc:
        raise OutputError(path, f"cannot write file: {exc.strerror or exc}") from exc
