"""Subcommands; each exposes ``run(config) -> exit code``."""

from nondetlab.commands import analyze, estimate, simulate, validate

COMMANDS = {
    "simulate": simulate.run,
    "analyze": analyze.run,
    "estimate": estimate.run,
    "validate": validate.run,
}

__all__ = ["COMMANDS"]
