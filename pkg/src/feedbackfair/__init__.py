"""Simulation-based sensitivity analysis of long-term fairness in feedback loops."""

__version__ = "0.1.0"

from .metrics import GroupStats, LongTermMetric, avg_inc, max_inc  # noqa: E402
from .rng import RngStream, derive_stream  # noqa: E402
from .simulation import MonteCarloLimits, run_campaign, run_monte_carlo, simulate_trace  # noqa: E402
from .space import ConfigSpace, ParameterDef, enumerate_configs, sample_covering_array, verify_coverage  # noqa: E402

__all__ = [
    "ConfigSpace", "GroupStats", "LongTermMetric", "MonteCarloLimits", "ParameterDef",
    "RngStream", "avg_inc", "derive_stream", "enumerate_configs", "max_inc", "run_campaign",
    "run_monte_carlo", "sample_covering_array", "simulate_trace", "verify_coverage",
]
