"""End-to-end tests of the nondetlab command line."""

import pytest

from nondetlab import __version__
from nondetlab.app import EXIT_DATA, EXIT_OK, EXIT_USAGE, main
from nondetlab.commands.analyze import HISTOGRAM_FILE, PROFILE_FILE, STATS_FILE, STEPS_FILE, TAILS_FILE
from nondetlab.commands.estimate import PREDICTION_COLUMNS
from nondetlab.recorder import read_table
from nondetlab.trace import load_traces

SMALL = [
    "--vocab-size", "40", "--hidden-dim", "16", "--steps", "4", "--n-runs", "5",
    "--top-k", "5", "--prompts", "2", "--scale", "0.6",
]


def simulate(path, *extra):
    assert main(["simulate", *SMALL, "--output", str(path), *extra]) == EXIT_OK
    return path


@pytest.fixture
def exact_traces(tmp_path):
    return simulate(tmp_path / "exact.jsonl", "--fmt", "exact")


class TestSimulate:
    def test_writes_traces_with_header(self, tmp_path, capsys):
        path = simulate(tmp_path / "runs.jsonl")
        assert "Wrote 10 traces" in capsys.readouterr().out
        header = path.read_text().splitlines()[0]
        assert header.startswith(f"# nondetlab {__version__} simulate ")
        assert "precision" not in header and "fmt=BF16" in header and "acc_fmt=FP32" in header
        traces = load_traces(path, strict=True).traces
        assert len(traces) == 10
        assert traces[0].meta.precision == "BF16/FP32"

    def test_stdout_when_no_output(self, capsysbinary):
        assert main(["simulate", *SMALL]) == EXIT_OK
        out = capsysbinary.readouterr().out
        assert out.startswith(b"# nondetlab")
        assert out.count(b"\n") == 11

    def test_byte_identical_across_runs_and_workers(self, tmp_path):
        a = simulate(tmp_path / "a.jsonl").read_bytes()
        b = simulate(tmp_path / "b.jsonl").read_bytes()
        c = simulate(tmp_path / "c.jsonl", "--workers", "3").read_bytes()
        assert a == b == c

    def test_seed_changes_output(self, tmp_path):
        a = simulate(tmp_path / "a.jsonl", "--seed", "1").read_bytes()
        b = simulate(tmp_path / "b.jsonl", "--seed", "2").read_bytes()
        assert a != b

    def test_csv_format(self, tmp_path):
        path = simulate(tmp_path / "runs.csv", "--format", "csv")
        assert len(load_traces(path, strict=True)) == 10

    def test_phenomenological_mode(self, tmp_path):
        path = simulate(tmp_path / "noise.jsonl", "--mode", "phenomenological", "--noise-scale", "0.05")
        assert load_traces(path).traces[0].meta.precision == "gauss:0.05"

    def test_running_sum_in_storage_format(self, tmp_path):
        default = simulate(tmp_path / "mixed.jsonl")
        plain = simulate(tmp_path / "plain.jsonl", "--acc-fmt", "none")
        assert "acc_fmt=none" in plain.read_text().splitlines()[0]
        assert load_traces(plain).traces[0].meta.precision == "BF16"
        assert plain.read_bytes() != default.read_bytes()

    def test_flush_subnormals_flag(self, tmp_path):
        path = simulate(tmp_path / "ftz.jsonl", "--flush-subnormals")
        assert "flush_subnormals=true" in path.read_text().splitlines()[0]
        assert load_traces(path).traces[0].meta.precision == "BF16+FTZ/FP32+FTZ"

    def test_config_file_and_flag_precedence(self, tmp_path):
        config = tmp_path / "lab.conf"
        config.write_text("# lab defaults\nn_runs = 3\nseed = 5\n")
        path = tmp_path / "runs.jsonl"
        assert main(["simulate", *SMALL, "--config", str(config), "--seed", "7", "--output", str(path)]) == EXIT_OK
        header = path.read_text().splitlines()[0]
        assert "seed=7" in header
        assert "n_runs=5" in header

        i = SMALL.index("--n-runs")
        bare = SMALL[:i] + SMALL[i + 2:]
        assert main(["simulate", *bare, "--config", str(config), "--output", str(path)]) == EXIT_OK
        header = path.read_text().splitlines()[0]
        assert "n_runs=3" in header and "seed=5" in header

    def test_debug_log(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        simulate(tmp_path / "runs.jsonl", "--debug")
        log = (tmp_path / "nondetlab-debug.log").read_text()
        assert log.startswith("=== nondetlab Debug Log ===")
        assert "simulate" in log


class TestAnalyze:
    def test_writes_all_tables(self, tmp_path, capsys):
        runs = simulate(tmp_path / "runs.jsonl")
        out = tmp_path / "out"
        assert main(["analyze", "--input", str(runs), "--output", str(out)]) == EXIT_OK
        assert "p000\tcommon_prefix_len=" in capsys.readouterr().out
        for name in (STATS_FILE, STEPS_FILE, HISTOGRAM_FILE, PROFILE_FILE, TAILS_FILE):
            text = (out / name).read_text()
            assert text.startswith(f"# nondetlab {__version__} analyze")
        quantities = {row["quantity"] for row in read_table(out / PROFILE_FILE)}
        assert quantities == {"prob", "logit"}

    def test_exact_mode_has_no_variation(self, tmp_path, exact_traces, capsys):
        out = tmp_path / "out"
        assert main(["analyze", "--input", str(exact_traces), "--output", str(out)]) == EXIT_OK
        assert "p001\tcommon_prefix_len=4\truns=5" in capsys.readouterr().out
        rows = read_table(out / STATS_FILE)
        assert len(rows) == 2 * 4 * 5
        assert all(float(r["sigma"]) == 0.0 and float(r["range"]) == 0.0 for r in rows)
        assert all(float(r["rank_flip_rate"]) == 0.0 for r in read_table(out / STEPS_FILE))

    def test_outputs_independent_of_workers(self, tmp_path):
        runs = simulate(tmp_path / "runs.jsonl", "--batch-size", "8")
        for workers in ("1", "2"):
            assert main(["analyze", "--input", str(runs), "--output", str(tmp_path / workers), "--workers", workers]) == 0
        for name in (STATS_FILE, HISTOGRAM_FILE, PROFILE_FILE):
            assert (tmp_path / "1" / name).read_bytes() == (tmp_path / "2" / name).read_bytes()

    def test_invalid_input_leaves_no_files(self, tmp_path, capsys):
        bad = tmp_path / "bad.jsonl"
        bad.write_text('{"prompt_id": "p", "run_id": "r", "steps": [{"i": 0, "sel": 3, "topk": []}]}\n')
        out = tmp_path / "out"
        assert main(["analyze", "--input", str(bad), "--output", str(out), "--strict"]) == EXIT_DATA
        assert "Error: line 1" in capsys.readouterr().err
        assert not out.exists()

    def test_missing_input_file(self, tmp_path):
        assert main(["analyze", "--input", str(tmp_path / "none.jsonl")]) == EXIT_DATA


class TestEstimateAndValidate:
    def test_prediction_table(self, tmp_path, exact_traces):
        preds = tmp_path / "pred.csv"
        args = ["estimate", "--input", str(exact_traces), "--noise-scale", "0.1", "--output", str(preds)]
        assert main(args) == EXIT_OK
        rows = read_table(preds)
        assert list(rows[0]) == PREDICTION_COLUMNS
        assert len(rows) == 2 * 4 * 5
        assert {r["run_id"] for r in rows} == {"run000"}
        assert all(r["noise_source"] == "user_supplied" for r in rows)

    def test_calibrated_noise(self, tmp_path, exact_traces):
        preds = tmp_path / "pred.csv"
        args = ["estimate", "--input", str(exact_traces), "--calibration", str(exact_traces), "--output", str(preds)]
        assert main(args) == EXIT_OK
        rows = read_table(preds)
        assert all(r["noise_source"] == "calibrated_from_ensemble" for r in rows)
        assert all(float(r["sigma"]) == 0.0 for r in rows)

    def test_run_selection(self, tmp_path, exact_traces):
        preds = tmp_path / "pred.csv"
        base = ["estimate", "--input", str(exact_traces), "--noise-scale", "0.1", "--output", str(preds)]
        assert main(base + ["--run-id", "run003"]) == EXIT_OK
        assert {r["run_id"] for r in read_table(preds)} == {"run003"}
        assert main(base + ["--run-id", "run999"]) == EXIT_DATA

    def test_compliant_data_passes(self, tmp_path, exact_traces, capsys):
        preds = tmp_path / "pred.csv"
        report = tmp_path / "report.csv"
        assert main(["estimate", "--input", str(exact_traces), "--noise-scale", "0", "--output", str(preds)]) == 0
        capsys.readouterr()
        args = ["validate", "--input", str(exact_traces), "--predictions", str(preds), "--output", str(report)]
        assert main(args + ["--budget", "0.3"]) == EXIT_OK
        assert capsys.readouterr().out.startswith("regime\tcount\t")
        regimes = {r["regime"]: r for r in read_table(report)}
        assert float(regimes["all"]["sigma_median"]) == 0.0
        assert int(regimes["all"]["count"]) == 2 * 4 * 5

    def test_budget_exceeded(self, tmp_path, exact_traces, capsys):
        preds = tmp_path / "pred.csv"
        assert main(["estimate", "--input", str(exact_traces), "--noise-scale", "0.1", "--output", str(preds)]) == 0
        args = ["validate", "--input", str(exact_traces), "--predictions", str(preds), "--budget", "0"]
        assert main(args) == EXIT_DATA
        assert "exceeds budget" in capsys.readouterr().err

    def test_malformed_predictions(self, tmp_path, exact_traces):
        preds = tmp_path / "pred.csv"
        preds.write_text("prompt_id,step\np000,0\n")
        assert main(["validate", "--input", str(exact_traces), "--predictions", str(preds)]) == EXIT_DATA


class TestUsageErrors:
    @pytest.mark.parametrize(
        "argv",
        [
            ["simulate", "--n-runs", "1"],
            ["simulate", "--mode", "phenomenological"],
            ["simulate", "--top-k", "0"],
            ["simulate", "--acc-fmt", "FP8"],
            ["analyze"],
            ["estimate", "--input", "runs.jsonl"],
            ["validate", "--input", "runs.jsonl"],
            ["estimate", "--input", "x.jsonl", "--low-threshold", "0.9", "--high-threshold", "0.1"],
        ],
    )
    def test_invalid_parameters(self, argv, capsys):
        assert main(argv) == EXIT_USAGE
        assert capsys.readouterr().err.startswith("Error: ")

    @pytest.mark.parametrize(
        "argv",
        [
            [],
            ["bogus"],
            ["simulate", "--fmt", "FP8"],
            ["simulate", "--unknown"],
            ["simulate", "--n-runs", "x"],
            ["validate", "--low-threshold", "0.2"],
            ["analyze", "--high-threshold", "0.8"],
        ],
    )
    def test_argument_errors_exit_with_usage_code(self, argv):
        with pytest.raises(SystemExit) as info:
            main(argv)
        assert info.value.code == EXIT_USAGE

    def test_unknown_config_key(self, tmp_path):
        config = tmp_path / "lab.conf"
        config.write_text("colour = blue\n")
        assert main(["simulate", "--config", str(config)]) == EXIT_USAGE

    def test_version(self, capsys):
        with pytest.raises(SystemExit) as info:
            main(["--version"])
        assert info.value.code == 0
        assert __version__ in capsys.readouterr().out


def pooled_mean_range(rows, lo, hi, overlapping):
    total = weighted = 0.0
    for r in rows:
        a, b, count = float(r["bin_lo"]), float(r["bin_hi"]), int(r["count"])
        inside = (a < hi and b > lo) if overlapping else (a >= lo and b <= hi)
        if inside and count:
            total += count
            weighted += count * float(r["mean_range"])
    return weighted / total


class TestPipelineTrends:
    def test_default_arithmetic_peaks_mid_range(self, tmp_path):
        runs = tmp_path / "runs.jsonl"
        assert main([
            "simulate", "--vocab-size", "200", "--hidden-dim", "512", "--scale", "0.42", "--steps", "50",
            "--prompts", "4", "--n-runs", "10", "--top-k", "40", "--output", str(runs),
        ]) == EXIT_OK
        out = tmp_path / "out"
        assert main(["analyze", "--input", str(runs), "--output", str(out)]) == EXIT_OK
        prob = [r for r in read_table(out / PROFILE_FILE) if r["quantity"] == "prob"]
        assert {r["precision"] for r in prob} == {"BF16/FP32"}
        mid = pooled_mean_range(prob, 0.45, 0.55, overlapping=True)
        low = pooled_mean_range(prob, 0.0, 0.05, overlapping=False)
        assert mid >= 10 * low

    def test_calibrated_estimate_within_budget(self, tmp_path):
        runs = tmp_path / "noise.jsonl"
        assert main([
            "simulate", "--vocab-size", "100", "--hidden-dim", "64", "--scale", "0.7", "--steps", "12",
            "--prompts", "16", "--n-runs", "50", "--mode", "phenomenological", "--noise-scale", "0.05",
            "--output", str(runs),
        ]) == EXIT_OK
        preds = tmp_path / "pred.csv"
        args = ["estimate", "--input", str(runs), "--calibration", str(runs), "--output", str(preds)]
        assert main(args) == EXIT_OK
        rows = read_table(preds)
        assert {r["noise_source"] for r in rows} == {"calibrated_from_ensemble"}
        assert float(rows[0]["noise_scale"]) == pytest.approx(0.05, rel=0.1)

        report = tmp_path / "report.csv"
        args = ["validate", "--input", str(runs), "--predictions", str(preds), "--output", str(report)]
        assert main(args + ["--budget", "0.3"]) == EXIT_OK
        regimes = {r["regime"]: r for r in read_table(report)}
        gate = regimes["amplified_mid"] if int(regimes["amplified_mid"]["count"]) else regimes["all"]
        assert float(gate["sigma_median"]) <= 0.3
        assert float(gate["range_median"]) <= 0.3
