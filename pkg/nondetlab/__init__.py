"""nondetlab - simulate, measure and predict nondeterministic token-probability variation."""

__version__ = "0.1.0"
