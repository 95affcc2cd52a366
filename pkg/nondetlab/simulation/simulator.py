"""Multi-run simulation of a model's final projection.

Runs differ only in the accumulation order of their dot products
(mechanistic mode) or in Gaussian noise added to exact logits
(phenomenological mode). Every draw comes from a stream keyed on the
master seed and the draw's coordinates, so results never depend on
scheduling or worker count.
"""

from dataclasses import dataclass

import numpy as np

from nondetlab.errors import UsageError
from nondetlab.fpemu import EXACT, AccumulationOrder, AccumulationPolicy, FloatFormat, matvec_ordered
from nondetlab.log import get_logger
from nondetlab.metrics import RunEnsemble
from nondetlab.simulation.model import (
    NOISE_STREAM,
    ORDER_PICK_STREAM,
    ORDER_POOL_STREAM,
    OrderEntropy,
    SyntheticModel,
    keyed_rng,
)
from nondetlab.softmax import LogitVector, softmax_rows
from nondetlab.trace import StepRecord, TokenTrace, TraceMeta
from nondetlab.workers import run_parallel

logger = get_logger(__name__)

MECHANISTIC = "mechanistic"
PHENOMENOLOGICAL = "phenomenological"


def run_label(run: int) -> str:
    return f"run{run:03d}"


def prompt_label(prompt: int) -> str:
    return f"p{prompt:03d}"


def resolve_accumulation(fmt: FloatFormat, acc_fmt: FloatFormat | None) -> FloatFormat:
    """Arithmetic format actually used for ``fmt`` storage.

    EXACT storage selects the exact oracle path whatever ``acc_fmt`` says.
    """
    if fmt.is_exact:
        return EXACT
    return acc_fmt or fmt


def _format_label(fmt: FloatFormat) -> str:
    if fmt.flush_subnormals and not fmt.is_exact:
        return f"{fmt.name}+FTZ"
    return fmt.name


def precision_label(fmt: FloatFormat, acc_fmt: FloatFormat | None = None) -> str:
    """``BF16`` for plain formats, ``BF16/FP32`` for mixed precision.

    Formats that flush subnormals carry a ``+FTZ`` suffix.
    """
    storage, arithmetic = _format_label(fmt), _format_label(resolve_accumulation(fmt, acc_fmt))
    if storage == arithmetic:
        return storage
    return f"{storage}/{arithmetic}"


def order_pool(
    model: SyntheticModel,
    step: int,
    entropy: OrderEntropy,
    prompt: int = 0,
    policy: AccumulationPolicy = AccumulationPolicy.RANDOM_PERMUTATION,
) -> list[AccumulationOrder]:
    """Orders available to runs at one (prompt, step).

    The pool is shared by every run and every vocabulary row of that step.
    Under the sequential policy every slot holds the natural order.
    """
    policy = AccumulationPolicy(policy)
    n = model.hidden_dim
    if policy is AccumulationPolicy.SEQUENTIAL:
        return [AccumulationOrder.identity(n)] * entropy.distinct_orders_per_run
    rng = keyed_rng(model.master_seed, ORDER_POOL_STREAM, prompt, step)
    return [AccumulationOrder.random(n, rng, policy) for _ in range(entropy.distinct_orders_per_run)]


def order_slot(model: SyntheticModel, step: int, run_id: int, entropy: OrderEntropy, prompt: int = 0) -> int:
    """Pool slot a run uses at one (prompt, step)."""
    rng = keyed_rng(model.master_seed, ORDER_PICK_STREAM, prompt, step, run_id)
    return int(rng.integers(entropy.distinct_orders_per_run))


def simulate_run(
    model: SyntheticModel,
    step: int,
    run_id: int,
    fmt: FloatFormat,
    entropy: OrderEntropy,
    *,
    prompt: int = 0,
    acc_fmt: FloatFormat | None = None,
    fused: bool = False,
    policy: AccumulationPolicy = AccumulationPolicy.RANDOM_PERMUTATION,
) -> LogitVector:
    """Logits of one run at one step under emulated arithmetic.

    Every vocabulary row is reduced in the order the run drew from the
    step's pool. The same arguments always give bitwise identical logits.

    Args:
        model: Synthetic model
        step: Generation step
        run_id: Integer run index
        fmt: Storage format of weights and context
        entropy: Order pool size
        prompt: Prompt index
        acc_fmt: Arithmetic format (None means ``fmt``)
        fused: Use fused multiply-add
        policy: Reduction policy

    Returns:
        LogitVector with the overflow flag set if any logit saturated
    """
    context = model.context(step, prompt)
    pool = order_pool(model, step, entropy, prompt, policy)
    slot = order_slot(model, step, run_id, entropy, prompt)
    acc = resolve_accumulation(fmt, acc_fmt)
    z, overflow = matvec_ordered(model.weights, context, [pool[slot]], fmt, fused, acc)
    return LogitVector(z[0], step_index=step, run_id=run_id, overflow=overflow)


def _step_logits(
    model: SyntheticModel,
    step: int,
    prompt: int,
    n_runs: int,
    fmt: FloatFormat,
    entropy: OrderEntropy,
    acc_fmt: FloatFormat | None,
    fused: bool,
    policy: AccumulationPolicy,
) -> tuple[np.ndarray, bool]:
    """(N, V) logits of every run at one step; row r equals ``simulate_run(..., r)``."""
    context = model.context(step, prompt)
    pool = order_pool(model, step, entropy, prompt, policy)
    slots = np.array([order_slot(model, step, r, entropy, prompt) for r in range(n_runs)])
    used = np.unique(slots)
    acc = resolve_accumulation(fmt, acc_fmt)
    z, overflow = matvec_ordered(model.weights, context, [pool[s] for s in used], fmt, fused, acc)
    return z[np.searchsorted(used, slots)], overflow


def inject_gaussian_noise(
    logits: LogitVector,
    s: float,
    seed: int | np.random.Generator,
) -> LogitVector:
    """Add i.i.d. N(0, s^2) noise to every logit.

    Args:
        logits: Clean logits
        s: Noise standard deviation (>= 0); 0 returns the logits unchanged
        seed: Seed or Generator of the noise stream

    Returns:
        A new LogitVector
    """
    if s < 0:
        raise UsageError(f"noise scale must be non-negative, got {s}")
    z = logits.z
    if s > 0:
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        z = z + rng.normal(0.0, s, size=z.size)
    return LogitVector(z, step_index=logits.step_index, run_id=logits.run_id, overflow=logits.overflow)


def _noisy_step_logits(
    model: SyntheticModel,
    step: int,
    prompt: int,
    n_runs: int,
    noise_scale: float,
) -> tuple[np.ndarray, bool]:
    context = model.context(step, prompt)
    clean, overflow = matvec_ordered(
        model.weights, context, [AccumulationOrder.identity(model.hidden_dim)], EXACT
    )
    base = LogitVector(clean[0], step_index=step, overflow=overflow)
    rows = [
        inject_gaussian_noise(base, noise_scale, keyed_rng(model.master_seed, NOISE_STREAM, prompt, step, r)).z
        for r in range(n_runs)
    ]
    return np.stack(rows), overflow


def _saturating_softmax(z: np.ndarray, T: float) -> np.ndarray:
    """Row-wise softmax that tolerates logits saturated to infinity.

    A row with +inf logits takes the limiting distribution (uniform over
    its +inf entries); NaN entries get probability 0. A row without any
    finite or +inf logit is uniform.
    """
    z = np.where(np.isnan(z), -np.inf, z)
    top = np.isposinf(z)
    top[~np.isfinite(z).any(axis=1) & ~top.any(axis=1)] = True
    probs = np.zeros_like(z)
    saturated = top.any(axis=1)
    if saturated.any():
        probs[saturated] = top[saturated] / top[saturated].sum(axis=1, keepdims=True)
    if not saturated.all():
        probs[~saturated] = softmax_rows(z[~saturated], T)
    return probs


@dataclass(frozen=True, eq=False)
class SimulationResult:
    """Ensembles (one per prompt and step) plus one trace per prompt and run.

    ``overflow`` lists the (prompt, step) units where some logit saturated.
    """

    ensembles: tuple[RunEnsemble, ...]
    traces: tuple[TokenTrace, ...]
    overflow: tuple[tuple[int, int], ...] = ()


def simulate_ensemble(
    model: SyntheticModel,
    steps: int,
    n_runs: int,
    fmt: FloatFormat,
    entropy: OrderEntropy,
    T: float = 1.0,
    *,
    prompts: int | None = None,
    mode: str = MECHANISTIC,
    noise_scale: float | None = None,
    acc_fmt: FloatFormat | None = None,
    fused: bool = False,
    policy: AccumulationPolicy = AccumulationPolicy.RANDOM_PERMUTATION,
    top_k: int = 10,
    workers: int = 1,
    model_label: str = "synthetic",
    gpu_label: str = "emulated",
) -> SimulationResult:
    """Simulate ``n_runs`` runs over the first ``steps`` steps of each prompt.

    Every run sees the same fixed context at each step, so every step has
    an ensemble even after the runs' greedy tokens diverge; the traces record
    each run's own top-``k`` slice for the alignment pipeline.

    Args:
        model: Synthetic model
        steps: Steps per prompt (<= model.n_steps)
        n_runs: Runs per prompt (>= 2)
        fmt: Storage format
        entropy: Order pool size; its label is recorded as the batch size
        T: Softmax temperature
        prompts: Prompts to simulate (None means all of the model's)
        mode: ``mechanistic`` or ``phenomenological``
        noise_scale: Logit noise for phenomenological mode
        acc_fmt: Arithmetic format (None means ``fmt``)
        fused: Use fused multiply-add
        policy: Reduction policy
        top_k: Tokens recorded per step in the traces
        workers: Threads used across (prompt, step) units
        model_label: Model name written into trace meta
        gpu_label: Hardware name written into trace meta

    Returns:
        SimulationResult ordered by prompt, then step (ensembles) or run (traces)
    """
    if n_runs < 2:
        raise UsageError("an ensemble needs at least 2 runs")
    if not 1 <= steps <= model.n_steps:
        raise UsageError(f"steps must be between 1 and {model.n_steps}")
    n_prompts = model.n_prompts if prompts is None else prompts
    if not 1 <= n_prompts <= model.n_prompts:
        raise UsageError(f"prompts must be between 1 and {model.n_prompts}")
    if not 1 <= top_k <= model.vocab_size:
        raise UsageError("top_k must be between 1 and the vocabulary size")
    if not T > 0:
        raise UsageError(f"temperature must be positive, got {T}")
    if mode == PHENOMENOLOGICAL:
        if noise_scale is None or noise_scale < 0:
            raise UsageError("phenomenological mode needs a non-negative noise scale")
        precision = f"gauss:{noise_scale:g}"
    elif mode == MECHANISTIC:
        precision = precision_label(fmt, acc_fmt)
    else:
        raise UsageError(f"unknown simulation mode '{mode}'")
    policy = AccumulationPolicy(policy)

    units = [(p, t) for p in range(n_prompts) for t in range(steps)]

    def simulate_unit(unit: tuple[int, int]) -> tuple[np.ndarray, bool]:
        p, t = unit
        logger.debug("simulating prompt %d step %d (%s)", p, t, precision)
        if mode == PHENOMENOLOGICAL:
            return _noisy_step_logits(model, t, p, n_runs, noise_scale)
        return _step_logits(model, t, p, n_runs, fmt, entropy, acc_fmt, fused, policy)

    results = run_parallel(simulate_unit, units, workers)

    meta = TraceMeta(
        model=model_label,
        gpu=gpu_label,
        batch_size=entropy.label,
        precision=precision,
        temperature=float(T),
        seed=model.master_seed,
    )
    run_ids = tuple(run_label(r) for r in range(n_runs))
    token_ids = np.arange(model.vocab_size)
    ensembles = []
    saturated = []
    records: dict[tuple[int, int], list[StepRecord]] = {}
    for (p, t), (z, overflow) in zip(units, results):
        if overflow:
            logger.warning("logits saturated at prompt %d step %d under %s", p, t, precision)
            saturated.append((p, t))
        probs = _saturating_softmax(z, T)
        ensembles.append(RunEnsemble(
            probs=probs,
            token_ids=token_ids,
            step_index=t,
            logits=z,
            prompt_id=prompt_label(p),
            run_ids=run_ids,
        ))
        for r in range(n_runs):
            records.setdefault((p, r), []).append(
                StepRecord.from_distribution(t, probs[r], top_k, logits=z[r])
            )

    traces = tuple(
        TokenTrace(run_id=run_ids[r], prompt_id=prompt_label(p), steps=tuple(records[(p, r)]), meta=meta)
        for p in range(n_prompts)
        for r in range(n_runs)
    )
    return SimulationResult(ensembles=tuple(ensembles), traces=traces, overflow=tuple(saturated))
