"""estimate: predict per-token variation from a single run."""

from nondetlab.commands.common import emit, load_aligned, require
from nondetlab.config import RunConfig
from nondetlab.errors import DataError, UsageError
from nondetlab.estimator import NoiseScale, Prediction, calibrate_noise, predict_tokens
from nondetlab.log import debug_log
from nondetlab.recorder import render_table
from nondetlab.softmax import ProbabilityVector
from nondetlab.trace import TokenTrace, group_by_prompt, load_traces

PREDICTION_COLUMNS = [
    "prompt_id",
    "run_id",
    "step",
    "token_id",
    "prob",
    "sigma",
    "range",
    "regime",
    "n_runs",
    "noise_scale",
    "noise_source",
]


def resolve_noise(config: RunConfig) -> NoiseScale:
    """Noise scale from ``--noise-scale``, else calibrated from ``--calibration``."""
    if config.noise_scale is not None:
        return NoiseScale(config.noise_scale)
    if config.calibration:
        ensembles = [e for a in load_aligned(config.calibration, config) for e in a.ensembles]
        return calibrate_noise(ensembles, config.include_imputed)
    raise UsageError("no noise scale: pass --noise-scale or a --calibration ensemble with logits")


def select_run(traces: list[TokenTrace], run_id: str | None) -> TokenTrace:
    """The trace of ``run_id``, or the first run by id."""
    if run_id is None:
        return min(traces, key=lambda t: t.run_id)
    for trace in traces:
        if trace.run_id == run_id:
            return trace
    raise DataError(f"run '{run_id}' not found for prompt '{traces[0].prompt_id}'")


def predict_trace(trace: TokenTrace, noise: NoiseScale, config: RunConfig) -> list[Prediction]:
    """Predictions for every step of one run's top-k slices."""
    predictions = []
    for step in trace.steps:
        probs = ProbabilityVector([e.prob for e in step.topk], temperature=trace.meta.temperature)
        predictions.append(predict_tokens(
            probs,
            noise,
            config.n_runs,
            token_ids=step.token_ids,
            thresholds=config.thresholds,
            step_index=step.step_index,
            prompt_id=trace.prompt_id,
        ))
    return predictions


def prediction_rows(run_id: str, predictions: list[Prediction]):
    for pred in predictions:
        for j, token in enumerate(pred.token_ids):
            yield [
                pred.prompt_id,
                run_id,
                pred.step_index,
                int(token),
                float(pred.prob[j]),
                float(pred.sigma[j]),
                float(pred.range[j]),
                pred.regime[j],
                pred.n_runs,
                pred.noise.s,
                pred.noise.source.value,
            ]


def run(config: RunConfig) -> int:
    """Write predictions for the selected run of every prompt."""
    path = require(config.input, "--input")
    noise = resolve_noise(config)
    debug_log(f"noise scale s={noise.s:.6g} ({noise.source.value})")

    result = load_traces(path, strict=config.strict)
    rows = []
    for traces in group_by_prompt(result.traces).values():
        trace = select_run(traces, config.run_id)
        rows.extend(prediction_rows(trace.run_id, predict_trace(trace, noise, config)))

    table = render_table(PREDICTION_COLUMNS, rows, config.echo("estimate"))
    emit(config.output, table.encode("utf-8"))
    if config.output:
        print(f"Noise scale s={noise.s:.6g} ({noise.source.value}); wrote {len(rows)} predictions to {config.output}")
    return 0
