"""Fixed-confidence best-arm identification with a hard round budget.

The main entry points are :func:`run_strategy` (one run against a sampler)
and :func:`execute_run` (one seeded run against a :class:`BanditModel`).
"""
from __future__ import annotations

from .model import BanditModel, Bernoulli, Gaussian, GapProfile, compute_gaps, partition_index, preset_model
from .records import Recommendation, RoundRecord, RunAborted, RunTrace
from .sim import Sampler, execute_run
from .strategies import STRATEGY_NAMES, run_strategy

__version__ = "0.1.0"

__all__ = [
    "BanditModel", "Bernoulli", "Gaussian", "GapProfile", "compute_gaps", "partition_index",
    "preset_model", "Recommendation", "RoundRecord", "RunAborted", "RunTrace", "Sampler",
    "execute_run", "STRATEGY_NAMES", "run_strategy",
]
