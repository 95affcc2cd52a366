"""Trace ingestion from JSON Lines and flat CSV."""

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import BinaryIO, Iterable

from nondetlab.errors import DataError, TraceParseError, TraceSchemaIssue, UsageError
from nondetlab.log import get_logger
from nondetlab.trace.trace import StepRecord, TokenTrace, TopKEntry, TraceMeta

logger = get_logger(__name__)

CSV_COLUMNS = ("prompt_id", "run_id", "step", "rank", "token_id", "prob", "logit", "selected")
CSV_META_COLUMNS = ("model", "gpu", "batch_size", "precision", "temperature", "seed")


@dataclass
class ParseResult:
    """Validated traces plus the records that were skipped."""

    traces: list[TokenTrace] = field(default_factory=list)
    issues: list[TraceSchemaIssue] = field(default_factory=list)

    def __iter__(self):
        return iter(self.traces)

    def __len__(self) -> int:
        return len(self.traces)


def _read_text(source: bytes | str | BinaryIO) -> str:
    if isinstance(source, bytes):
        data = source
    elif isinstance(source, str):
        return source
    else:
        data = source.read()
        if isinstance(data, str):
            return data
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as e:
        raise DataError(f"input is not valid UTF-8: {e}") from None


def _meta_from_json(raw: dict) -> TraceMeta:
    return TraceMeta(
        model=str(raw.get("model", "")),
        gpu=str(raw.get("gpu", "")),
        batch_size=int(raw.get("batch_size", 1)),
        precision=str(raw.get("precision", "")),
        temperature=float(raw.get("temperature", 1.0)),
        seed=int(raw.get("seed", 0)),
    )


def _steps_from_json(raw_steps: list) -> list[StepRecord]:
    if not isinstance(raw_steps, list):
        raise DataError("'steps' must be a list")
    steps = []
    for raw in raw_steps:
        topk = tuple(
            TopKEntry(int(e["t"]), float(e["p"]), None if e.get("z") is None else float(e["z"]))
            for e in raw["topk"]
        )
        steps.append(StepRecord(int(raw["i"]), int(raw["sel"]), topk))
    return steps


def _finish(chunks: dict, order: list, issues: list[TraceSchemaIssue]) -> list[TokenTrace]:
    """Validate merged traces; invalid ones become issues."""
    traces = []
    for key in order:
        line, meta, steps = chunks[key]
        trace = TokenTrace(run_id=key[1], prompt_id=key[0], steps=tuple(steps), meta=meta)
        try:
            trace.validate()
        except DataError as e:
            issues.append(TraceSchemaIssue(line, str(e), f"prompt {key[0]} run {key[1]}"))
            continue
        traces.append(trace)
    return traces


def _parse_jsonl(text: str, issues: list[TraceSchemaIssue]) -> list[TokenTrace]:
    chunks: dict[tuple[str, str], tuple[int, TraceMeta, list[StepRecord]]] = {}
    order: list[tuple[str, str]] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        try:
            raw = json.loads(stripped)
            if not isinstance(raw, dict):
                raise DataError("record must be a JSON object")
            key = (str(raw["prompt_id"]), str(raw["run_id"]))
            meta = _meta_from_json(raw.get("meta") or {})
            steps = _steps_from_json(raw["steps"])
        except json.JSONDecodeError as e:
            issues.append(TraceSchemaIssue(lineno, f"invalid JSON: {e.msg}"))
            continue
        except KeyError as e:
            issues.append(TraceSchemaIssue(lineno, f"missing field {e}"))
            continue
        except (TypeError, ValueError) as e:
            issues.append(TraceSchemaIssue(lineno, f"bad value: {e}"))
            continue

        if key in chunks:
            # continuation chunk of an earlier line
            first_line, first_meta, first_steps = chunks[key]
            if meta != first_meta:
                issues.append(TraceSchemaIssue(lineno, "meta differs from earlier chunk", f"prompt {key[0]} run {key[1]}"))
                continue
            first_steps.extend(steps)
        else:
            chunks[key] = (lineno, meta, steps)
            order.append(key)
    return _finish(chunks, order, issues)


def _parse_csv(text: str, issues: list[TraceSchemaIssue]) -> list[TokenTrace]:
    lines = text.splitlines()
    skipped = 0
    while skipped < len(lines) and (not lines[skipped].strip() or lines[skipped].lstrip().startswith("#")):
        skipped += 1
    body = lines[skipped:]
    if not body:
        return []

    reader = csv.DictReader(io.StringIO("\n".join(body)))
    missing = [c for c in CSV_COLUMNS if c not in (reader.fieldnames or [])]
    if missing:
        issues.append(TraceSchemaIssue(skipped + 1, f"missing column(s): {', '.join(missing)}"))
        return []

    chunks: dict[tuple[str, str], tuple[int, TraceMeta, list[StepRecord]]] = {}
    order: list[tuple[str, str]] = []
    rows: dict[tuple[str, str], dict[int, list[tuple[int, TopKEntry, bool]]]] = {}
    bad: set[tuple[str, str]] = set()

    for row in reader:
        lineno = skipped + reader.line_num
        key = (row["prompt_id"], row["run_id"])
        try:
            meta = TraceMeta(
                model=row.get("model") or "",
                gpu=row.get("gpu") or "",
                batch_size=int(row.get("batch_size") or 1),
                precision=row.get("precision") or "",
                temperature=float(row.get("temperature") or 1.0),
                seed=int(row.get("seed") or 0),
            )
            if key not in chunks:
                chunks[key] = (lineno, meta, [])
                order.append(key)
                rows[key] = {}
            elif chunks[key][1] != meta:
                raise ValueError("meta differs between rows of the same run")
            if row["step"] in ("", None):
                continue
            step = int(row["step"])
            entry = TopKEntry(
                int(row["token_id"]),
                float(row["prob"]),
                None if row["logit"] in ("", None) else float(row["logit"]),
            )
            selected = row["selected"].strip()
            if selected not in ("0", "1"):
                raise ValueError(f"selected must be 0 or 1, got '{selected}'")
            rows[key].setdefault(step, []).append((int(row["rank"]), entry, selected == "1"))
        except (TypeError, ValueError) as e:
            issues.append(TraceSchemaIssue(lineno, f"bad value: {e}", f"prompt {key[0]} run {key[1]}"))
            bad.add(key)

    for key in order:
        if key in bad:
            continue
        line, meta, steps = chunks[key]
        for step_index in sorted(rows[key]):
            entries = sorted(rows[key][step_index], key=lambda r: r[0])
            flagged = [e.token_id for _, e, sel in entries if sel]
            selected = flagged[0] if len(flagged) == 1 else -1
            steps.append(StepRecord(step_index, selected, tuple(e for _, e, _ in entries)))
    return _finish(chunks, [k for k in order if k not in bad], issues)


def parse_traces(
    source: bytes | str | BinaryIO,
    format: str = "jsonl",
    strict: bool = False,
) -> ParseResult:
    """Parse and validate traces.

    Lines starting with ``#`` are header comments and are skipped.

    Args:
        source: Raw bytes, decoded text, or a file object
        format: ``"jsonl"`` or ``"csv"``
        strict: Raise on the first batch of schema violations instead of
            skipping the offending records

    Returns:
        ParseResult with the valid traces and the per-record issues

    Raises:
        TraceParseError: In strict mode, when any record is invalid
    """
    text = _read_text(source)
    issues: list[TraceSchemaIssue] = []
    if format == "jsonl":
        traces = _parse_jsonl(text, issues)
    elif format == "csv":
        traces = _parse_csv(text, issues)
    else:
        raise UsageError(f"unknown trace format '{format}'")

    if issues:
        if strict:
            raise TraceParseError(issues)
        for issue in issues:
            logger.warning("skipped trace record at %s", issue)
    return ParseResult(traces, issues)


def infer_format(path: str | Path) -> str:
    """Trace format from a file suffix (``.csv`` or JSON Lines otherwise)."""
    return "csv" if Path(path).suffix.lower() == ".csv" else "jsonl"


def load_traces(path: str | Path, format: str | None = None, strict: bool = False) -> ParseResult:
    """Load traces from a file.

    Args:
        path: Trace file
        format: Trace format; inferred from the suffix when None
        strict: See :func:`parse_traces`
    """
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as e:
        raise DataError(f"cannot read {path}: {e}") from None
    return parse_traces(data, format or infer_format(path), strict)


def group_by_prompt(traces: Iterable[TokenTrace]) -> dict[str, list[TokenTrace]]:
    """Traces keyed by prompt id, prompts in sorted order."""
    groups: dict[str, list[TokenTrace]] = {}
    for trace in traces:
        groups.setdefault(trace.prompt_id, []).append(trace)
    return {pid: groups[pid] for pid in sorted(groups)}
