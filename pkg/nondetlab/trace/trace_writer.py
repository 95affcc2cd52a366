"""Canonical trace serialization.

Field order is fixed and floats carry 17 significant digits, so equal
traces always serialize to identical bytes.
"""

import csv
import io
import json
from typing import Iterable

from nondetlab.errors import UsageError
from nondetlab.trace.trace import TokenTrace
from nondetlab.trace.trace_loader import CSV_COLUMNS, CSV_META_COLUMNS


def format_float(x: float) -> str:
    """17-significant-digit rendering used in every output file."""
    return format(float(x), ".17g")


def _json_str(s: str) -> str:
    return json.dumps(s, ensure_ascii=False)


def _trace_to_jsonl(trace: TokenTrace) -> str:
    m = trace.meta
    meta = (
        f'{{"model":{_json_str(m.model)},"gpu":{_json_str(m.gpu)},'
        f'"batch_size":{int(m.batch_size)},"precision":{_json_str(m.precision)},'
        f'"temperature":{format_float(m.temperature)},"seed":{int(m.seed)}}}'
    )
    steps = []
    for step in trace.steps:
        topk = ",".join(
            f'{{"t":{e.token_id},"p":{format_float(e.prob)},'
            f'"z":{"null" if e.logit is None else format_float(e.logit)}}}'
            for e in step.topk
        )
        steps.append(f'{{"i":{step.step_index},"sel":{step.selected_token_id},"topk":[{topk}]}}')
    return (
        f'{{"prompt_id":{_json_str(trace.prompt_id)},"run_id":{_json_str(trace.run_id)},'
        f'"meta":{meta},"steps":[{",".join(steps)}]}}'
    )


def _traces_to_csv(traces: Iterable[TokenTrace]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS + CSV_META_COLUMNS)
    for trace in traces:
        m = trace.meta
        meta = [m.model, m.gpu, m.batch_size, m.precision, format_float(m.temperature), m.seed]
        if not trace.steps:
            writer.writerow([trace.prompt_id, trace.run_id, "", "", "", "", "", ""] + meta)
            continue
        for step in trace.steps:
            for rank, e in enumerate(step.topk):
                writer.writerow([
                    trace.prompt_id,
                    trace.run_id,
                    step.step_index,
                    rank,
                    e.token_id,
                    format_float(e.prob),
                    "" if e.logit is None else format_float(e.logit),
                    1 if e.token_id == step.selected_token_id else 0,
                ] + meta)
    return buf.getvalue()


def write_traces(traces: Iterable[TokenTrace], format: str = "jsonl", header: str | None = None) -> bytes:
    """Serialize traces to UTF-8 bytes.

    Args:
        traces: Traces to write, in output order
        format: ``"jsonl"`` or ``"csv"``
        header: Optional ``# ...`` comment row written first

    Returns:
        Newline-delimited UTF-8 bytes
    """
    if format == "jsonl":
        body = "".join(_trace_to_jsonl(t) + "\n" for t in traces)
    elif format == "csv":
        body = _traces_to_csv(traces)
    else:
        raise UsageError(f"unknown trace format '{format}'")
    if header is not None:
        if not header.startswith("#"):
            header = "# " + header
        body = header.rstrip("\n") + "\n" + body
    return body.encode("utf-8")
