"""Configuration management for nondetlab.

Every subcommand reads a :class:`RunConfig`. Values come from the field
defaults, then an optional ``key = value`` config file, then command-line
flags (highest precedence).
"""

import types
import typing
from dataclasses import dataclass, fields
from pathlib import Path

from nondetlab import __version__
from nondetlab.errors import UsageError

FORMAT_NAMES = ("BF16", "FP16", "FP32", "EXACT")
MODES = ("mechanistic", "phenomenological")
POLICIES = ("sequential", "random_permutation", "pairwise_tree")
TRACE_FORMATS = ("jsonl", "csv")

# Execution details: they never change results, so they stay out of headers.
_NOT_ECHOED = {"workers", "input", "output", "calibration", "predictions", "config", "debug"}


@dataclass
class RunConfig:
    """Effective configuration for one subcommand invocation."""

    # Synthetic model
    vocab_size: int = 1000
    hidden_dim: int = 4096
    scale: float = 0.25
    steps: int = 100
    prompts: int = 1
    n_runs: int = 50
    seed: int = 0

    # Arithmetic
    fmt: str = "BF16"
    acc_fmt: str | None = "FP32"
    flush_subnormals: bool = False
    fused: bool = False
    policy: str = "random_permutation"
    batch_size: int = 4

    # Nondeterminism mode
    mode: str = "mechanistic"
    noise_scale: float | None = None

    # Softmax and analysis
    temperature: float = 1.0
    top_k: int = 10
    bin_width: float = 0.05
    low_threshold: float = 0.1
    high_threshold: float = 0.9
    include_imputed: bool = False
    strict: bool = False
    budget: float = 0.30
    run_id: str | None = None

    # Labels written into trace meta
    model_label: str = "synthetic"
    gpu_label: str = "emulated"

    # I/O
    format: str = "jsonl"
    input: str | None = None
    output: str | None = None
    calibration: str | None = None
    predictions: str | None = None
    config: str | None = None
    workers: int = 1
    debug: bool = False

    def update(self, values: dict) -> "RunConfig":
        """Apply ``values`` (already typed or raw strings) on top of this config.

        Args:
            values: Mapping of field name to value; ``None`` values are skipped

        Returns:
            self, for chaining
        """
        known = {f.name: f for f in fields(self)}
        for key, value in values.items():
            name = key.replace("-", "_")
            if name not in known:
                raise UsageError(f"unknown configuration key '{key}'")
            if value is None:
                continue
            setattr(self, name, _coerce(value, known[name].type, name))
        return self

    def validate(self) -> "RunConfig":
        """Check parameter ranges and combinations.

        Raises:
            UsageError: On the first invalid value found
        """
        self.fmt = self.fmt.upper()
        if self.acc_fmt is not None:
            self.acc_fmt = self.acc_fmt.upper()
        if self.fmt not in FORMAT_NAMES:
            raise UsageError(f"fmt must be one of {', '.join(FORMAT_NAMES)}, got '{self.fmt}'")
        if self.acc_fmt is not None and self.acc_fmt not in FORMAT_NAMES:
            raise UsageError(f"acc_fmt must be one of {', '.join(FORMAT_NAMES)}, got '{self.acc_fmt}'")
        if self.mode not in MODES:
            raise UsageError(f"mode must be one of {', '.join(MODES)}")
        if self.policy not in POLICIES:
            raise UsageError(f"policy must be one of {', '.join(POLICIES)}")
        if self.format not in TRACE_FORMATS:
            raise UsageError(f"format must be one of {', '.join(TRACE_FORMATS)}")
        if self.vocab_size < 2 or self.hidden_dim < 2:
            raise UsageError("vocab_size and hidden_dim must both be at least 2")
        if self.n_runs < 2:
            raise UsageError("n_runs must be at least 2")
        if self.steps < 1 or self.prompts < 1:
            raise UsageError("steps and prompts must be at least 1")
        if self.batch_size < 1:
            raise UsageError("batch_size must be at least 1")
        if self.temperature <= 0:
            raise UsageError("temperature must be positive")
        if self.scale < 0:
            raise UsageError("scale must be non-negative")
        if self.noise_scale is not None and self.noise_scale < 0:
            raise UsageError("noise_scale must be non-negative")
        if self.mode == "phenomenological" and self.noise_scale is None:
            raise UsageError("phenomenological mode needs --noise-scale")
        if not 1 <= self.top_k <= self.vocab_size:
            raise UsageError("top_k must be between 1 and vocab_size")
        if not 0 < self.bin_width <= 1:
            raise UsageError("bin_width must be in (0, 1]")
        if not 0 <= self.low_threshold <= self.high_threshold <= 1:
            raise UsageError("thresholds must satisfy 0 <= low <= high <= 1")
        if self.budget < 0:
            raise UsageError("budget must be non-negative")
        if self.workers < 1:
            raise UsageError("workers must be at least 1")
        return self

    @property
    def thresholds(self) -> tuple[float, float]:
        """(low, high) sensitivity-regime thresholds."""
        return self.low_threshold, self.high_threshold

    def echo(self, command: str) -> str:
        """Render the header row echoed at the top of every output file.

        Args:
            command: Subcommand name

        Returns:
            ``# nondetlab <version> <command> key=value ...`` (no newline)
        """
        parts = [f"# nondetlab {__version__} {command}"]
        for f in fields(self):
            if f.name in _NOT_ECHOED:
                continue
            parts.append(f"{f.name}={_render(getattr(self, f.name))}")
        return " ".join(parts)


def _render(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _coerce(value, annotation, name: str):
    """Convert a raw config value to the field's declared type."""
    optional = False
    if isinstance(annotation, types.UnionType) or typing.get_origin(annotation) is typing.Union:
        args = [a for a in typing.get_args(annotation) if a is not type(None)]
        optional = len(args) < len(typing.get_args(annotation))
        annotation = args[0]
    if not isinstance(value, str):
        if annotation is float and isinstance(value, int) and not isinstance(value, bool):
            return float(value)
        return value

    text = value.strip()
    if optional and text.lower() in ("", "none", "null"):
        return None
    try:
        if annotation is bool:
            lowered = text.lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if annotation is int:
            return int(text)
        if annotation is float:
            return float(text)
    except ValueError:
        raise UsageError(f"invalid value for {name}: '{value}'") from None
    return text


def load_config_file(path: str | Path) -> dict[str, str]:
    """Load ``key = value`` pairs from a text config file.

    Blank lines and lines starting with ``#`` are ignored.

    Args:
        path: Config file location

    Returns:
        Raw (string) values keyed by field name
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise UsageError(f"cannot read config file {path}: {e}") from None

    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def build_config(flags: dict, config_path: str | None = None) -> RunConfig:
    """Combine defaults, an optional config file, and command-line flags.

    Args:
        flags: Flag values from argparse (``None`` means "not given")
        config_path: Optional ``key = value`` file

    Returns:
        A validated RunConfig
    """
    config = RunConfig()
    if config_path:
        config.update(load_config_file(config_path))
        config.config = config_path
    config.update({k: v for k, v in flags.items() if v is not None})
    return config.validate()
