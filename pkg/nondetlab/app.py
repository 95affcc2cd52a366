"""Main command-line entry point."""

import argparse
import sys

from nondetlab import __version__
from nondetlab.commands import COMMANDS
from nondetlab.config import FORMAT_NAMES, MODES, POLICIES, TRACE_FORMATS, build_config
from nondetlab.errors import DataError, UsageError
from nondetlab.log import DEBUG_LOG_FILE, configure_console, debug_log, enable_debug_log

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class ArgumentParser(argparse.ArgumentParser):
    """argparse parser whose usage errors exit with code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# flag name -> add_argument keyword arguments; defaults live in RunConfig
FLAGS = {
    "vocab_size": dict(type=int, help="vocabulary size V (default: 1000)"),
    "hidden_dim": dict(type=int, help="hidden dimension D (default: 4096)"),
    "scale": dict(type=float, help="std of synthetic weights and contexts (default: 0.25)"),
    "steps": dict(type=int, help="generation steps per prompt (default: 100)"),
    "prompts": dict(type=int, help="number of prompts (default: 1)"),
    "n_runs": dict(type=int, help="runs per prompt N (default: 50)"),
    "seed": dict(type=int, help="master seed (default: 0)"),
    "fmt": dict(type=str.upper, choices=FORMAT_NAMES, help="storage format (default: BF16)"),
    "acc_fmt": dict(type=str, help="accumulation format, or 'none' to use --fmt (default: FP32)"),
    "flush_subnormals": dict(action="store_const", const=True, help="flush subnormal values to zero in every format"),
    "fused": dict(action="store_const", const=True, help="use fused multiply-add"),
    "policy": dict(choices=POLICIES, help="reduction policy (default: random_permutation)"),
    "batch_size": dict(type=int, help="batch size B; runs draw from B accumulation orders (default: 4)"),
    "mode": dict(choices=MODES, help="nondeterminism source (default: mechanistic)"),
    "noise_scale": dict(type=float, help="logit noise std s"),
    "temperature": dict(type=float, help="softmax temperature T (default: 1.0)"),
    "top_k": dict(type=int, help="tokens recorded per step (default: 10)"),
    "bin_width": dict(type=float, help="probability bin width (default: 0.05)"),
    "low_threshold": dict(type=float, help="upper edge of the suppressed-low regime (default: 0.1)"),
    "high_threshold": dict(type=float, help="lower edge of the suppressed-high regime (default: 0.9)"),
    "include_imputed": dict(action="store_const", const=True, help="keep partly imputed token columns"),
    "strict": dict(action="store_const", const=True, help="fail on the first invalid trace record"),
    "budget": dict(type=float, help="allowed median relative error (default: 0.30)"),
    "run_id": dict(type=str, help="run to estimate from (default: first run id)"),
    "model_label": dict(type=str, help="model name recorded in trace meta"),
    "gpu_label": dict(type=str, help="hardware name recorded in trace meta"),
    "format": dict(choices=TRACE_FORMATS, help="trace output format (default: jsonl)"),
    "input": dict(type=str, help="trace file to read"),
    "output": dict(type=str, help="output file (directory for analyze)"),
    "calibration": dict(type=str, help="multi-run trace file to calibrate the noise scale from"),
    "predictions": dict(type=str, help="prediction table written by estimate"),
    "workers": dict(type=int, help="worker threads (default: 1)"),
}

COMMAND_FLAGS = {
    "simulate": (
        "vocab_size", "hidden_dim", "scale", "steps", "prompts", "n_runs", "seed", "fmt", "acc_fmt",
        "flush_subnormals", "fused", "policy", "batch_size", "mode", "noise_scale", "temperature", "top_k",
        "model_label", "gpu_label", "format", "output", "workers",
    ),
    "analyze": (
        "input", "output", "bin_width", "include_imputed", "strict", "workers",
    ),
    "estimate": (
        "input", "output", "run_id", "noise_scale", "calibration", "n_runs", "low_threshold",
        "high_threshold", "include_imputed", "strict", "workers",
    ),
    "validate": (
        "input", "predictions", "output", "budget", "include_imputed", "strict", "workers",
    ),
}

COMMAND_HELP = {
    "simulate": "simulate multi-run traces from a synthetic model",
    "analyze": "compute variation metrics, histograms and binned profiles",
    "estimate": "predict per-token variation from a single run",
    "validate": "compare predictions with an observed ensemble",
}


def build_parser() -> ArgumentParser:
    """Parser with one subcommand per entry of COMMANDS."""
    parser = ArgumentParser(prog="nondetlab", description="nondetlab - token-probability nondeterminism lab")
    parser.add_argument("--version", action="version", version=f"nondetlab {__version__}")
    common = ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value config file (flags take precedence)")
    common.add_argument("--debug", action="store_true", help=f"enable debug logging to {DEBUG_LOG_FILE}")

    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=ArgumentParser)
    sub.required = True
    for name, flags in COMMAND_FLAGS.items():
        cmd = sub.add_parser(name, parents=[common], help=COMMAND_HELP[name], description=COMMAND_HELP[name])
        for flag in flags:
            cmd.add_argument(f"--{flag.replace('_', '-')}", dest=flag, default=None, **FLAGS[flag])
    return parser


def main(argv: list[str] | None = None) -> int:
    """Run the command line and return its exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config", "debug")}

    configure_console()
    if args.debug:
        enable_debug_log()
        debug_log(f"nondetlab {__version__} {args.command} {' '.join(argv if argv is not None else sys.argv[1:])}")

    try:
        config = build_config(flags, args.config)
        config.debug = args.debug
        return COMMANDS[args.command](config)
    except UsageError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
