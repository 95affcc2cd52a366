"""analyze: variation metrics, histograms and binned profiles from traces."""

from pathlib import Path

import numpy as np

from nondetlab.commands.common import load_aligned, require
from nondetlab.config import RunConfig
from nondetlab.log import debug_log
from nondetlab.metrics import (
    DEFAULT_TAIL_THRESHOLDS,
    VariationStats,
    bin_by_probability,
    distribution_histogram,
    ensemble_stats,
    probability_edges,
    rank_flip_rate,
    tail_fractions,
)
from nondetlab.recorder import TableSet

STATS_FILE = "stats.csv"
STEPS_FILE = "steps.csv"
HISTOGRAM_FILE = "histograms.csv"
PROFILE_FILE = "profiles.csv"
TAILS_FILE = "tails.csv"

GROUP_COLUMNS = ["model", "gpu", "batch_size", "precision", "temperature"]

# Decade bins for range and sigma; a zero value lands in the first bin.
VARIATION_EDGES = np.array([0.0] + [10.0 ** k for k in range(-8, 1)])


def _stats_rows(stats: list[VariationStats]):
    for s in stats:
        for j, token in enumerate(s.token_ids):
            yield [
                s.prompt_id,
                s.step_index,
                int(token),
                s.n_runs,
                float(s.mean_prob[j]),
                float(s.sigma[j]),
                float(s.range[j]),
                None if s.logit_sigma is None else float(s.logit_sigma[j]),
                None if s.logit_range is None else float(s.logit_range[j]),
            ]


def _histogram_rows(group: list, stats: list[VariationStats], bin_width: float):
    series = {
        "range": (np.concatenate([s.range for s in stats]) if stats else np.empty(0), VARIATION_EDGES),
        "sigma": (np.concatenate([s.sigma for s in stats]) if stats else np.empty(0), VARIATION_EDGES),
        "mean_prob": (
            np.concatenate([s.mean_prob for s in stats]) if stats else np.empty(0),
            probability_edges(bin_width),
        ),
    }
    for quantity, (values, edges) in series.items():
        hist = distribution_histogram(values, edges)
        for b, count in enumerate(hist.counts):
            yield group + [quantity, float(edges[b]), float(edges[b + 1]), int(count), float(hist.fractions[b])]


def _profile_rows(group: list, stats: list[VariationStats], bin_width: float):
    quantities = ["prob"] + (["logit"] if any(s.has_logits for s in stats) else [])
    for quantity in quantities:
        profile = bin_by_probability(stats, bin_width, quantity)
        for b in range(profile.n_bins):
            yield group + [
                quantity,
                float(profile.bin_edges[b]),
                float(profile.bin_edges[b + 1]),
                int(profile.count[b]),
                float(profile.mean_range[b]),
                float(profile.mean_sigma[b]),
            ]


def run(config: RunConfig) -> int:
    """Analyze a trace file and write the metric tables into ``--output`` (a directory)."""
    aligned = load_aligned(require(config.input, "--input"), config)
    out_dir = Path(config.output or ".")

    stats_by_group: dict[tuple, list[VariationStats]] = {}
    step_rows = []
    all_stats: list[VariationStats] = []
    for a in aligned:
        print(f"{a.prompt_id}\tcommon_prefix_len={a.common_prefix_len}\truns={a.n_runs}")
        group = stats_by_group.setdefault(a.meta.group_key, [])
        for e in a.ensembles:
            s = ensemble_stats(e, config.include_imputed)
            group.append(s)
            all_stats.append(s)
            step_rows.append([a.prompt_id, e.step_index, len(s), rank_flip_rate(e, config.include_imputed)])
    debug_log(f"analyzed {len(all_stats)} steps in {len(stats_by_group)} configuration groups")

    tables = TableSet(config.echo("analyze"))
    tables.add(
        out_dir / STATS_FILE,
        ["prompt_id", "step", "token_id", "n_runs", "mean_prob", "sigma", "range", "logit_sigma", "logit_range"],
        _stats_rows(all_stats),
    )
    tables.add(out_dir / STEPS_FILE, ["prompt_id", "step", "n_tokens", "rank_flip_rate"], step_rows)

    histogram_rows, profile_rows, tail_rows = [], [], []
    for key in sorted(stats_by_group):
        group, stats = list(key), stats_by_group[key]
        histogram_rows.extend(_histogram_rows(group, stats, config.bin_width))
        profile_rows.extend(_profile_rows(group, stats, config.bin_width))
        ranges = np.concatenate([s.range for s in stats]) if stats else np.empty(0)
        for threshold, fraction in tail_fractions(ranges, DEFAULT_TAIL_THRESHOLDS).items():
            tail_rows.append(group + [threshold, int(ranges.size), fraction])

    tables.add(
        out_dir / HISTOGRAM_FILE,
        GROUP_COLUMNS + ["quantity", "bin_lo", "bin_hi", "count", "fraction"],
        histogram_rows,
    )
    tables.add(
        out_dir / PROFILE_FILE,
        GROUP_COLUMNS + ["quantity", "bin_lo", "bin_hi", "count", "mean_range", "mean_sigma"],
        profile_rows,
    )
    tables.add(out_dir / TAILS_FILE, GROUP_COLUMNS + ["threshold", "observations", "fraction_below"], tail_rows)
    for path in tables.commit():
        debug_log(f"wrote {path}")
    return 0
