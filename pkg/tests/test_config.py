"""Tests for layered configuration."""

import pytest

from nondetlab import __version__
from nondetlab.config import RunConfig, build_config, load_config_file
from nondetlab.errors import UsageError


def test_defaults():
    config = build_config({})
    assert config.n_runs == 50 and config.fmt == "BF16" and config.acc_fmt == "FP32"
    assert config.thresholds == (0.1, 0.9)


def test_file_values_are_coerced(tmp_path):
    path = tmp_path / "lab.conf"
    path.write_text("# comment\n\nn-runs = 8\nfused = yes\ntemperature = 0.7\nacc_fmt = none\nfmt = fp16\n")
    config = build_config({}, str(path))
    assert config.n_runs == 8
    assert config.fused is True
    assert config.temperature == 0.7
    assert config.acc_fmt is None
    assert config.fmt == "FP16"


def test_flags_override_file(tmp_path):
    path = tmp_path / "lab.conf"
    path.write_text("seed = 3\nsteps = 9\n")
    config = build_config({"seed": 4, "steps": None}, str(path))
    assert (config.seed, config.steps) == (4, 9)


@pytest.mark.parametrize(
    "text",
    ["n_runs = many\n", "just a line\n", "unknown_key = 1\n", "fused = maybe\n"],
)
def test_bad_file_contents(tmp_path, text):
    path = tmp_path / "lab.conf"
    path.write_text(text)
    with pytest.raises(UsageError):
        build_config({}, str(path))


def test_missing_file(tmp_path):
    with pytest.raises(UsageError):
        load_config_file(tmp_path / "absent.conf")


@pytest.mark.parametrize(
    "values",
    [
        {"n_runs": 1},
        {"batch_size": 0},
        {"temperature": 0.0},
        {"bin_width": 0.0},
        {"noise_scale": -1.0},
        {"mode": "phenomenological"},
        {"workers": 0},
        {"policy": "shuffle"},
    ],
)
def test_validation(values):
    with pytest.raises(UsageError):
        RunConfig().update(values).validate()


def test_echo_excludes_execution_details():
    config = build_config({"workers": 8, "output": "out.jsonl", "seed": 12})
    echo = config.echo("simulate")
    assert echo.startswith(f"# nondetlab {__version__} simulate ")
    assert "seed=12" in echo and "temperature=1" in echo and "noise_scale=none" in echo
    assert "workers" not in echo and "out.jsonl" not in echo
    assert build_config({"workers": 2}).echo("x") == build_config({}).echo("x")
