"""Trace data model: one record per (prompt, run) generation."""

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike

from nondetlab.errors import DataError

PROB_SUM_SLACK = 1e-6


@dataclass(frozen=True)
class TraceMeta:
    """Run metadata: the factors a nondeterminism experiment varies."""

    model: str = ""
    gpu: str = ""
    batch_size: int = 1
    precision: str = ""
    temperature: float = 1.0
    seed: int = 0

    @property
    def group_key(self) -> tuple[str, str, int, str, float]:
        """Configuration key used to pool results (seed excluded)."""
        return (self.model, self.gpu, self.batch_size, self.precision, self.temperature)


@dataclass(frozen=True)
class TopKEntry:
    """One recorded token at one step."""

    token_id: int
    prob: float
    logit: float | None = None


@dataclass(frozen=True)
class StepRecord:
    """Top-k tokens of one run at one step, highest probability first."""

    step_index: int
    selected_token_id: int
    topk: tuple[TopKEntry, ...]

    def validate(self) -> None:
        """Check the record's invariants.

        Raises:
            DataError: Describing the first violated invariant
        """
        if not self.topk:
            raise DataError(f"step {self.step_index}: empty top-k list")
        for entry in self.topk:
            if not (math.isfinite(entry.prob) and 0.0 <= entry.prob <= 1.0):
                raise DataError(f"step {self.step_index}: probability out of range ({entry.prob})")
            if entry.logit is not None and not math.isfinite(entry.logit):
                raise DataError(f"step {self.step_index}: logit must be finite")
        probs = [e.prob for e in self.topk]
        if any(a < b for a, b in zip(probs, probs[1:])):
            raise DataError(f"step {self.step_index}: top-k not sorted by descending probability")
        if math.fsum(probs) > 1.0 + PROB_SUM_SLACK:
            raise DataError(f"step {self.step_index}: top-k probabilities sum above 1")
        ids = [e.token_id for e in self.topk]
        if len(set(ids)) != len(ids):
            raise DataError(f"step {self.step_index}: duplicate token id in top-k")
        if self.selected_token_id != self.topk[0].token_id:
            raise DataError(f"step {self.step_index}: selected token is not the top-1 token")

    @property
    def token_ids(self) -> list[int]:
        return [e.token_id for e in self.topk]

    @classmethod
    def from_distribution(
        cls,
        step_index: int,
        probs: ArrayLike,
        k: int,
        logits: ArrayLike | None = None,
        token_ids: ArrayLike | None = None,
    ) -> "StepRecord":
        """Build a record from a full distribution, keeping its top ``k``.

        Equal probabilities are ordered by token id; the greedy selection is
        the first entry. Saturated (non-finite) logits are left unrecorded.
        """
        probs = np.asarray(probs, dtype=np.float64)
        ids = np.arange(probs.size) if token_ids is None else np.asarray(token_ids, dtype=np.int64)
        top = np.lexsort((ids, -probs))[:k]
        z = None if logits is None else np.asarray(logits, dtype=np.float64)
        entries = tuple(
            TopKEntry(int(ids[i]), float(probs[i]), None if z is None or not math.isfinite(z[i]) else float(z[i]))
            for i in top
        )
        return cls(step_index, entries[0].token_id, entries)


@dataclass(frozen=True)
class TokenTrace:
    """The full record of one run on one prompt."""

    run_id: str
    prompt_id: str
    steps: tuple[StepRecord, ...] = field(default=())
    meta: TraceMeta = field(default_factory=TraceMeta)

    def __post_init__(self):
        object.__setattr__(self, "run_id", str(self.run_id))
        object.__setattr__(self, "prompt_id", str(self.prompt_id))
        object.__setattr__(self, "steps", tuple(self.steps))

    def __len__(self) -> int:
        return len(self.steps)

    def validate(self) -> None:
        """Check contiguity of steps and every step's invariants."""
        for expected, step in enumerate(self.steps):
            if step.step_index != expected:
                raise DataError(
                    f"non-contiguous steps: expected step {expected}, found {step.step_index}"
                )
            step.validate()

    @property
    def selected_tokens(self) -> list[int]:
        return [s.selected_token_id for s in self.steps]

    @property
    def topk_width(self) -> int | None:
        """Common top-k width, or None for a trace without steps."""
        widths = {len(s.topk) for s in self.steps}
        if not widths:
            return None
        if len(widths) > 1:
            raise DataError(f"run {self.run_id}: top-k width varies between steps")
        return widths.pop()
