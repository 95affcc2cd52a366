"""Synthetic multi-run simulation."""

from nondetlab.simulation.model import OrderEntropy, SyntheticModel, gen_model, keyed_rng
from nondetlab.simulation.simulator import (
    MECHANISTIC,
    PHENOMENOLOGICAL,
    SimulationResult,
    inject_gaussian_noise,
    order_pool,
    order_slot,
    precision_label,
    prompt_label,
    resolve_accumulation,
    run_label,
    simulate_ensemble,
    simulate_run,
)

__all__ = [
    "MECHANISTIC",
    "PHENOMENOLOGICAL",
    "OrderEntropy",
    "SimulationResult",
    "SyntheticModel",
    "gen_model",
    "inject_gaussian_noise",
    "keyed_rng",
    "order_pool",
    "order_slot",
    "precision_label",
    "prompt_label",
    "resolve_accumulation",
    "run_label",
    "simulate_ensemble",
    "simulate_run",
]
