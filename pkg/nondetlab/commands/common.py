"""Helpers shared by the subcommands."""

import sys
from pathlib import Path

from nondetlab.config import RunConfig
from nondetlab.errors import UsageError
from nondetlab.log import debug_log
from nondetlab.recorder import atomic_write
from nondetlab.trace import AlignedEnsembleSet, align_to_divergence, group_by_prompt, load_traces
from nondetlab.workers import run_parallel


def require(value: str | None, flag: str) -> str:
    if not value:
        raise UsageError(f"{flag} is required")
    return value


def load_aligned(path: str, config: RunConfig) -> list[AlignedEnsembleSet]:
    """Load a trace file and align every prompt's runs to their first divergence.

    The trace format comes from the file suffix (``.csv``, else JSON Lines).
    """
    result = load_traces(path, strict=config.strict)
    groups = group_by_prompt(result.traces)
    debug_log(f"loaded {len(result.traces)} traces over {len(groups)} prompts from {path}")
    return run_parallel(align_to_divergence, list(groups.values()), config.workers)


def emit(path: str | None, data: bytes) -> None:
    """Write ``data`` atomically to ``path``, or to stdout when no path is given."""
    if path:
        atomic_write(Path(path), data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
