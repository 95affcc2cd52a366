"""Plot-ready CSV tables and atomic file output."""

import csv
import io
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

from nondetlab.errors import DataError
from nondetlab.log import get_logger
from nondetlab.trace import format_float

logger = get_logger(__name__)


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return format_float(value)
    # numpy scalars
    if hasattr(value, "item"):
        return _cell(value.item())
    return str(value)


def render_table(fieldnames: Sequence[str], rows: Iterable[Sequence], header: str | None = None) -> str:
    """CSV text: optional ``# ...`` header row, column names, then rows.

    Floats are written with 17 significant digits and ``None`` as an empty cell.
    """
    buf = io.StringIO()
    if header is not None:
        buf.write(header.rstrip("\n") + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(fieldnames)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def atomic_write(path: str | Path, data: bytes | str) -> Path:
    """Write ``data`` to ``path`` through a temporary sibling file.

    The target only appears once the data is complete; a failed write
    leaves any previous file untouched.

    Args:
        path: Destination file
        data: Bytes, or text encoded as UTF-8

    Returns:
        The destination path
    """
    path = Path(path)
    if isinstance(data, str):
        data = data.encode("utf-8")
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    logger.debug("wrote %s (%d bytes)", path, len(data))
    return path


class TableSet:
    """Tables collected during one command and committed together.

    Nothing touches the file system until :meth:`commit`, so a command
    that fails half-way leaves no partial outputs behind.
    """

    def __init__(self, header: str | None = None):
        self.header = header
        self._tables: dict[Path, str] = {}

    def add(self, path: str | Path, fieldnames: Sequence[str], rows: Iterable[Sequence]) -> None:
        self._tables[Path(path)] = render_table(fieldnames, rows, self.header)

    def commit(self) -> list[Path]:
        """Write every collected table; returns the paths written."""
        return [atomic_write(path, text) for path, text in self._tables.items()]


def read_table(path: str | Path) -> list[dict[str, str]]:
    """Rows of a CSV table written by :func:`render_table`, ``#`` rows skipped."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise DataError(f"cannot read {path}: {e}") from None
    lines = [line for line in text.splitlines() if not line.startswith("#")]
    return list(csv.DictReader(lines))
