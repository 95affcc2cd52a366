"""Align runs of one prompt up to their first divergence.

Runs are compared only while every run has produced the same greedy
tokens, so every compared step was generated from the same preceding
context.
"""

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from nondetlab.errors import DataError
from nondetlab.log import get_logger
from nondetlab.metrics.ensemble import RunEnsemble
from nondetlab.trace.trace import TokenTrace, TraceMeta

logger = get_logger(__name__)


@dataclass(frozen=True, eq=False)
class AlignedEnsembleSet:
    """Per-step ensembles of one prompt, truncated at the first divergence."""

    prompt_id: str
    common_prefix_len: int
    ensembles: tuple[RunEnsemble, ...]
    n_runs: int
    run_ids: tuple[str, ...] = ()
    meta: TraceMeta = field(default_factory=TraceMeta)
    trace_len: int = 0

    @property
    def diverged(self) -> bool:
        """True when runs disagreed before the end of the shortest trace."""
        return self.common_prefix_len < self.trace_len


def common_prefix_len(traces: Sequence[TokenTrace]) -> int:
    """First step where any two runs selected different tokens (or the shortest length)."""
    shortest = min(len(t) for t in traces)
    for i in range(shortest):
        first = traces[0].steps[i].selected_token_id
        if any(t.steps[i].selected_token_id != first for t in traces[1:]):
            return i
    return shortest


def _step_ensemble(traces: Sequence[TokenTrace], step: int) -> RunEnsemble:
    records = [t.steps[step] for t in traces]
    token_ids = sorted({e.token_id for r in records for e in r.topk})
    column = {tid: j for j, tid in enumerate(token_ids)}
    n, v = len(records), len(token_ids)

    probs = np.zeros((n, v))
    logits = np.full((n, v), np.nan)
    present = np.zeros((n, v), dtype=bool)
    any_logit = False
    for i, record in enumerate(records):
        for e in record.topk:
            j = column[e.token_id]
            probs[i, j] = e.prob
            present[i, j] = True
            if e.logit is not None:
                logits[i, j] = e.logit
                any_logit = True

    # a token missing from a run's top-k is imputed as probability 0
    imputed = ~present.all(axis=0)
    return RunEnsemble(
        probs=probs,
        token_ids=token_ids,
        step_index=step,
        logits=logits if any_logit else None,
        imputed=imputed,
        prompt_id=traces[0].prompt_id,
        run_ids=tuple(t.run_id for t in traces),
    )


def align_to_divergence(traces: Sequence[TokenTrace]) -> AlignedEnsembleSet:
    """Build per-step ensembles for the steps before the first divergence.

    Rows are ordered by run id, columns by token id, so the result does
    not depend on the order of ``traces``.

    Args:
        traces: At least 2 traces of the same prompt with equal top-k width

    Returns:
        AlignedEnsembleSet; empty (with a warning) when runs differ at step 0
        or some run has no steps
    """
    traces = list(traces)
    if len(traces) < 2:
        raise DataError("alignment needs at least 2 traces of the same prompt")
    prompt_ids = {t.prompt_id for t in traces}
    if len(prompt_ids) > 1:
        raise DataError(f"traces belong to different prompts: {sorted(prompt_ids)}")
    run_ids = [t.run_id for t in traces]
    if len(set(run_ids)) != len(run_ids):
        raise DataError("duplicate run ids in one prompt")
    widths = {len(s.topk) for t in traces for s in t.steps}
    if len(widths) > 1:
        raise DataError(f"mismatched top-k widths: {sorted(widths)}")

    traces.sort(key=lambda t: t.run_id)
    prompt_id = traces[0].prompt_id
    prefix = common_prefix_len(traces)
    shortest = min(len(t) for t in traces)
    if shortest == 0:
        logger.warning("prompt %s: a run has no steps, no aligned steps", prompt_id)
    elif prefix == 0:
        logger.warning("prompt %s: runs diverge at step 0, no aligned steps", prompt_id)

    ensembles = tuple(_step_ensemble(traces, i) for i in range(prefix))
    return AlignedEnsembleSet(
        prompt_id=prompt_id,
        common_prefix_len=prefix,
        ensembles=ensembles,
        n_runs=len(traces),
        run_ids=tuple(t.run_id for t in traces),
        meta=traces[0].meta,
        trace_len=shortest,
    )
