"""Seeded reward generation and single-run execution.

Every arm owns an independent Philox (counter-based) stream keyed by
``(run seed, arm index)``, so an arm's rewards do not depend on the
order in which a strategy visits arms, and different strategies run
with the same seed see the same per-arm randomness.

Rewards are reduced to sums as they are drawn:

* Bernoulli(p): the sum of ``count`` pulls is one Binomial(count, p) draw.
* Gaussian(m, s): the sum is ``count*m + s*sqrt(count)*Z`` with ``Z``
  from Box-Muller on two uniforms of the arm's stream.

Per-sample draws (used by the sequential baseline) are ``U < p`` for
Bernoulli and Box-Muller pairs for Gaussian, again from uniforms.
"""
from __future__ import annotations

import math
import traceback

import numpy as np
from numpy.random import Generator, Philox, SeedSequence

from .model import BanditModel, Bernoulli, Gaussian
from .records import RunAborted, RunTrace
from .strategies import RECONSTRUCTED, run_strategy

SEED_MASK = (1 << 64) - 1


def arm_stream(seed: int, arm: int) -> Generator:
    if not 0 <= seed <= SEED_MASK:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return Generator(Philox(SeedSequence([int(seed), int(arm)])))


def _box_muller(stream: Generator, size):
    u1, u2 = stream.random((2,) + tuple(np.atleast_1d(size)))
    return np.sqrt(-2.0 * np.log1p(-u1)) * np.cos(2.0 * math.pi * u2)


def sample_rewards(model: BanditModel, arm: int, count: int, stream: Generator):
    """Draw ``count`` rewards of ``arm`` and return ``(sum, count)``."""
    if count < 0:
        raise ValueError("count must be nonnegative")
    dist = model.arms[arm]
    if count == 0:
        return 0.0, 0
    if isinstance(dist, Bernoulli):
        return float(stream.binomial(count, dist.p)), count
    if isinstance(dist, Gaussian):
        z = float(_box_muller(stream, 1)[0])
        return count * dist.mean + dist.stddev * math.sqrt(count) * z, count
    raise TypeError(f"unsupported arm distribution {dist!r}")


def sample_array(model: BanditModel, arm: int, count: int, stream: Generator) -> np.ndarray:
    dist = model.arms[arm]
    if isinstance(dist, Bernoulli):
        return (stream.random(count) < dist.p).astype(float)
    if isinstance(dist, Gaussian):
        return dist.mean + dist.stddev * _box_muller(stream, count)
    raise TypeError(f"unsupported arm distribution {dist!r}")


class Sampler:
    """Model-facing sampler handed to strategies."""

    def __init__(self, model: BanditModel, seed: int):
        self.model = model
        self.seed = int(seed)
        self._streams = {}

    def stream(self, arm: int) -> Generator:
        if arm not in self._streams:
            self._streams[arm] = arm_stream(self.seed, arm)
        return self._streams[arm]

    def pull(self, arm: int, count: int) -> float:
        return sample_rewards(self.model, arm, count, self.stream(arm))[0]

    def pull_samples(self, arm: int, count: int) -> np.ndarray:
        return sample_array(self.model, arm, count, self.stream(arm))


def is_eps_optimal(means, arm: int, epsilon: float) -> bool:
    return means[arm] > max(means) - epsilon


def execute_run(strategy: str, params: dict, model: BanditModel, seed: int) -> RunTrace:
    """Run one strategy on ``model`` with per-arm streams from ``seed``.

    ``params`` needs ``epsilon``, ``delta`` and ``deadline``; ``sigma``
    defaults to the model's and ``pull_cap`` is optional. Sampler
    failures come back as a trace with ``error`` set and
    ``success=False`` rather than an exception.
    """
    sigma = params.get("sigma") or model.sigma
    sampler = Sampler(model, seed)
    try:
        _, trace = run_strategy(
            strategy, sampler, model.n,
            epsilon=params["epsilon"], delta=params["delta"], deadline=params["deadline"],
            sigma=sigma, pull_cap=params.get("pull_cap"),
        )
    except RunAborted as exc:
        trace = exc.trace
        trace.error = trace.error or str(exc)
        trace.error += "\n" + traceback.format_exc(limit=3)
        trace.total_cost = trace.rounds[-1].cumulative_cost if trace.rounds else 0
        trace.success = False
        trace.seed = int(seed)
        return trace
    trace.seed = int(seed)
    trace.params.setdefault("sigma", sigma)
    trace.params.setdefault("deadline", params["deadline"])
    if strategy in RECONSTRUCTED:
        trace.params["reconstructed"] = True
    trace.success = is_eps_optimal(model.means, trace.recommendation.arm, params["epsilon"])
    return trace
