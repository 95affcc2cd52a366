"""Logging setup: a timestamped debug log file plus stderr warnings."""

import logging
import sys
from pathlib import Path

ROOT_LOGGER = "nondetlab"
DEBUG_LOG_FILE = "nondetlab-debug.log"


class _MillisecondFormatter(logging.Formatter):
    """Formats records as ``[YYYY-MM-DD HH:MM:SS.mmm] message``."""

    def formatTime(self, record, datefmt=None):  # noqa: N802 - logging API
        base = super().formatTime(record, "%Y-%m-%d %H:%M:%S")
        return f"{base}.{int(record.msecs):03d}"


def get_logger(name: str) -> logging.Logger:
    """Get a logger below the package root logger.

    Args:
        name: Usually ``__name__`` of the calling module

    Returns:
        Logger whose records propagate to the nondetlab handlers
    """
    if name == ROOT_LOGGER or name.startswith(ROOT_LOGGER + "."):
        return logging.getLogger(name)
    return logging.getLogger(f"{ROOT_LOGGER}.{name}")


def configure_console() -> None:
    """Send warnings and errors to stderr as ``Warning: ...`` lines."""
    root = logging.getLogger(ROOT_LOGGER)
    if any(getattr(h, "_nondetlab_console", False) for h in root.handlers):
        return
    handler = logging.StreamHandler(sys.stderr)
    handler.setLevel(logging.WARNING)
    handler.setFormatter(logging.Formatter("%(levelname_title)s: %(message)s"))
    handler.addFilter(_title_level)
    handler._nondetlab_console = True  # type: ignore[attr-defined]
    root.addHandler(handler)
    if root.level == logging.NOTSET or root.level > logging.WARNING:
        root.setLevel(logging.WARNING)


def _title_level(record: logging.LogRecord) -> bool:
    record.levelname_title = record.levelname.title()
    return True


def enable_debug_log(path: str | Path = DEBUG_LOG_FILE) -> Path:
    """Truncate the debug log and route DEBUG records into it.

    Args:
        path: Log file location (default ``nondetlab-debug.log`` in the cwd)

    Returns:
        The resolved log file path
    """
    path = Path(path)
    with open(path, "w") as f:
        f.write("=== nondetlab Debug Log ===\n")

    handler = logging.FileHandler(path, mode="a")
    handler.setLevel(logging.DEBUG)
    handler.setFormatter(_MillisecondFormatter("[%(asctime)s] %(message)s"))
    root = logging.getLogger(ROOT_LOGGER)
    root.addHandler(handler)
    root.setLevel(logging.DEBUG)
    return path


def debug_log(msg: str) -> None:
    """Log a debug message (written only when the debug log is enabled)."""
    logging.getLogger(ROOT_LOGGER).debug(msg)
