"""Synthetic final-projection model used as the source of logits."""

from dataclasses import dataclass

import numpy as np

from nondetlab.errors import UsageError

# Seed-sequence stream tags; every random draw is keyed on the master seed
# plus one of these and its coordinates, never on execution order.
WEIGHT_STREAM = 0
CONTEXT_STREAM = 1
ORDER_POOL_STREAM = 2
ORDER_PICK_STREAM = 3
NOISE_STREAM = 4

DEFAULT_SCALE = 0.25


def keyed_rng(master_seed: int, *key: int) -> np.random.Generator:
    """Generator for the stream identified by ``(master_seed, *key)``."""
    return np.random.default_rng(np.random.SeedSequence([int(master_seed), *(int(k) for k in key)]))


@dataclass(frozen=True, eq=False)
class SyntheticModel:
    """A V x D projection plus per-(prompt, step) hidden vectors.

    Logits of step ``s`` of prompt ``p`` are ``weights @ contexts[p, s]``.
    """

    weights: np.ndarray
    contexts: np.ndarray
    master_seed: int
    scale: float

    @property
    def vocab_size(self) -> int:
        return self.weights.shape[0]

    @property
    def hidden_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def n_prompts(self) -> int:
        return self.contexts.shape[0]

    @property
    def n_steps(self) -> int:
        return self.contexts.shape[1]

    def context(self, step: int, prompt: int = 0) -> np.ndarray:
        """Hidden vector of one step."""
        if not 0 <= prompt < self.n_prompts:
            raise UsageError(f"prompt {prompt} outside 0..{self.n_prompts - 1}")
        if not 0 <= step < self.n_steps:
            raise UsageError(f"step {step} outside 0..{self.n_steps - 1}")
        return self.contexts[prompt, step]


@dataclass(frozen=True)
class OrderEntropy:
    """How many distinct accumulation orders runs draw from.

    Each run picks its order uniformly from a pool of ``distinct_orders_per_run``
    permutations; ``label`` is the nominal batch size the pool stands for.
    """

    distinct_orders_per_run: int
    label: int

    def __post_init__(self):
        if self.distinct_orders_per_run < 1:
            raise UsageError("order entropy needs at least one order")

    @classmethod
    def from_batch_size(cls, batch_size: int) -> "OrderEntropy":
        """Pool size equal to the batch size (a modeling choice, not a measured law)."""
        return cls(distinct_orders_per_run=batch_size, label=batch_size)


def gen_model(
    V: int,
    D: int,
    seed: int,
    scale: float = DEFAULT_SCALE,
    steps: int = 100,
    prompts: int = 1,
) -> SyntheticModel:
    """Draw a synthetic model from seeded Gaussian streams.

    Weights and contexts are i.i.d. N(0, scale^2). With D = 4096 and the
    default scale the logit standard deviation is ``D**0.5 * scale**2 = 4``,
    which puts top-1 probabilities across most of (0, 1).

    Args:
        V: Vocabulary size (>= 2)
        D: Hidden dimension (>= 2)
        seed: Master seed
        scale: Standard deviation of weights and contexts
        steps: Generation steps per prompt
        prompts: Number of prompts

    Returns:
        A reproducible SyntheticModel
    """
    if V < 2 or D < 2:
        raise UsageError(f"model needs V >= 2 and D >= 2, got V={V}, D={D}")
    if steps < 1 or prompts < 1:
        raise UsageError("model needs at least one step and one prompt")
    if scale < 0:
        raise UsageError("scale must be non-negative")

    weights = keyed_rng(seed, WEIGHT_STREAM).normal(0.0, 1.0, size=(V, D)) * scale
    contexts = np.stack([
        keyed_rng(seed, CONTEXT_STREAM, p).normal(0.0, 1.0, size=(steps, D)) * scale
        for p in range(prompts)
    ])
    weights.setflags(write=False)
    contexts.setflags(write=False)
    return SyntheticModel(weights=weights, contexts=contexts, master_seed=int(seed), scale=float(scale))
