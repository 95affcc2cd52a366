"""Run traces: data model, serialization, and divergence alignment."""

from nondetlab.trace.align import AlignedEnsembleSet, align_to_divergence, common_prefix_len
from nondetlab.trace.trace import StepRecord, TokenTrace, TopKEntry, TraceMeta
from nondetlab.trace.trace_loader import ParseResult, group_by_prompt, infer_format, load_traces, parse_traces
from nondetlab.trace.trace_writer import format_float, write_traces

__all__ = [
    "AlignedEnsembleSet",
    "ParseResult",
    "StepRecord",
    "TokenTrace",
    "TopKEntry",
    "TraceMeta",
    "align_to_divergence",
    "common_prefix_len",
    "format_float",
    "group_by_prompt",
    "infer_format",
    "load_traces",
    "parse_traces",
    "write_traces",
]
