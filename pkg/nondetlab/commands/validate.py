"""validate: compare predictions with an observed ensemble and gate on a budget."""

import sys

import numpy as np

from nondetlab.commands.common import load_aligned, require
from nondetlab.config import RunConfig
from nondetlab.errors import DataError
from nondetlab.estimator import ErrorReport, NoiseScale, NoiseSource, Prediction, validate_estimate
from nondetlab.metrics import ensemble_stats
from nondetlab.recorder import TableSet, read_table

REPORT_COLUMNS = ["regime", "count", "sigma_median", "sigma_p90", "range_median", "range_p90"]
_REQUIRED = {"prompt_id", "step", "token_id", "prob", "sigma", "range", "regime", "n_runs", "noise_scale"}


def load_predictions(path: str) -> list[Prediction]:
    """Predictions from a table written by ``estimate``, one per (prompt, step)."""
    rows = read_table(path)
    if rows and not _REQUIRED <= set(rows[0]):
        missing = ", ".join(sorted(_REQUIRED - set(rows[0])))
        raise DataError(f"{path}: prediction table lacks columns {missing}")

    grouped: dict[tuple[str, int], list[dict]] = {}
    try:
        for row in rows:
            grouped.setdefault((row["prompt_id"], int(row["step"])), []).append(row)
        predictions = []
        for (prompt_id, step), group in grouped.items():
            first = group[0]
            source = first.get("noise_source") or NoiseSource.USER_SUPPLIED.value
            predictions.append(Prediction(
                token_ids=np.array([int(r["token_id"]) for r in group]),
                prob=np.array([float(r["prob"]) for r in group]),
                sigma=np.array([float(r["sigma"]) for r in group]),
                range=np.array([float(r["range"]) for r in group]),
                regime=np.array([r["regime"] for r in group], dtype=object),
                n_runs=int(first["n_runs"]),
                noise=NoiseScale(float(first["noise_scale"]), source),
                step_index=step,
                prompt_id=prompt_id,
            ))
    except (TypeError, ValueError) as e:
        raise DataError(f"{path}: malformed prediction row: {e}") from None
    return predictions


def report_rows(report: ErrorReport):
    for name, r in report.regimes.items():
        yield [name, r.count, r.sigma_median, r.sigma_p90, r.range_median, r.range_p90]


def run(config: RunConfig) -> int:
    """Print the error report; exit 2 when the budget is exceeded."""
    predictions = load_predictions(require(config.predictions, "--predictions"))
    observed = [
        ensemble_stats(e, config.include_imputed)
        for a in load_aligned(require(config.input, "--input"), config)
        for e in a.ensembles
    ]
    report = validate_estimate(predictions, observed)

    print("\t".join(REPORT_COLUMNS))
    for row in report_rows(report):
        print("\t".join(str(v) if not isinstance(v, float) else f"{v:.6g}" for v in row))
    if config.output:
        tables = TableSet(config.echo("validate"))
        tables.add(config.output, REPORT_COLUMNS, report_rows(report))
        tables.commit()

    gate = report.gate()
    if not report.within_budget(config.budget):
        print(
            f"Error: {gate.regime} median relative error (sigma {gate.sigma_median:.3g}, "
            f"range {gate.range_median:.3g}) exceeds budget {config.budget:g}",
            file=sys.stderr,
        )
        return 2
    return 0
