"""simulate: write multi-run traces from the synthetic model."""

from nondetlab.commands.common import emit
from nondetlab.config import RunConfig
from nondetlab.fpemu import get_format
from nondetlab.log import debug_log
from nondetlab.simulation import OrderEntropy, gen_model, simulate_ensemble
from nondetlab.trace import write_traces


def run(config: RunConfig) -> int:
    """Simulate, then write traces to ``--output`` (stdout when absent)."""
    fmt = get_format(config.fmt).with_flush(config.flush_subnormals)
    acc_fmt = get_format(config.acc_fmt).with_flush(config.flush_subnormals) if config.acc_fmt else None
    model = gen_model(
        config.vocab_size,
        config.hidden_dim,
        config.seed,
        scale=config.scale,
        steps=config.steps,
        prompts=config.prompts,
    )
    debug_log(
        f"model V={model.vocab_size} D={model.hidden_dim} prompts={model.n_prompts} "
        f"steps={model.n_steps} mode={config.mode}"
    )
    result = simulate_ensemble(
        model,
        config.steps,
        config.n_runs,
        fmt,
        OrderEntropy.from_batch_size(config.batch_size),
        config.temperature,
        mode=config.mode,
        noise_scale=config.noise_scale,
        acc_fmt=acc_fmt,
        fused=config.fused,
        policy=config.policy,
        top_k=config.top_k,
        workers=config.workers,
        model_label=config.model_label,
        gpu_label=config.gpu_label,
    )
    emit(config.output, write_traces(result.traces, config.format, header=config.echo("simulate")))
    if config.output:
        print(f"Wrote {len(result.traces)} traces ({config.prompts} prompts x {config.n_runs} runs) to {config.output}")
    return 0
