"""Per-arm sufficient statistics and confidence intervals."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# 4 + 2 log 2
RHO = 4.0 + 2.0 * math.log(2.0)


class UndefinedMeanError(ValueError):
    pass


@dataclass
class ArmStats:
    """Running pull count and reward sum for one arm.

    The reward sum is accumulated with Neumaier compensation so long
    runs give the same mean regardless of how pulls were batched into
    floating-point additions.
    """

    pulls: int = 0
    sum_rewards: float = 0.0
    round_pulls: list = field(default_factory=list)
    _carry: float = field(default=0.0, repr=False)

    def add(self, count: int, reward_sum: float):
        if count < 0:
            raise ValueError("pull count must be nonnegative")
        self.pulls += int(count)
        self.round_pulls.append(int(count))
        s = self.sum_rewards + reward_sum
        if abs(self.sum_rewards) >= abs(reward_sum):
            self._carry += (self.sum_rewards - s) + reward_sum
        else:
            self._carry += (reward_sum - s) + self.sum_rewards
        self.sum_rewards = s

    @property
    def total(self) -> float:
        return self.sum_rewards + self._carry

    @property
    def mean(self) -> float:
        if self.pulls == 0:
            raise UndefinedMeanError("empirical mean undefined for an arm with no pulls")
        return self.total / self.pulls


@dataclass(frozen=True)
class ConfidenceState:
    lower: float
    upper: float
    deviation: float


def deviation(tau, n: int, deadline: int, delta: float, sigma: float):
    """Half-width ``sigma * sqrt((4 + 2 log 2) log(nT/delta) / tau)``.

    ``tau`` may be an array; everything else is scalar.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if n < 1 or deadline < 1:
        raise ValueError("n and deadline must be positive")
    tau_arr = np.asarray(tau)
    if np.any(tau_arr < 1):
        raise ValueError("deviation needs at least one pull")
    log_term = math.log(n * deadline / delta)
    if tau_arr.ndim == 0:
        return sigma * math.sqrt(RHO * log_term / float(tau))
    return sigma * np.sqrt(RHO * log_term / tau_arr)


def bounds(stats: ArmStats, n: int, deadline: int, delta: float, sigma: float) -> ConfidenceState:
    mean = stats.mean
    d = deviation(stats.pulls, n, deadline, delta, sigma)
    return ConfidenceState(mean - d, mean + d, d)


def anytime_deviation(tau, arm_count: int, delta: float, sigma: float):
    """Union bound over every pull count:
    ``sigma * sqrt(2 log(K tau (tau + 1) / delta) / tau)``.

    Summing ``delta / (K tau (tau+1))`` over tau >= 1 and K arms gives
    delta per tail.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    tau_arr = np.asarray(tau, dtype=float)
    if np.any(tau_arr < 1):
        raise ValueError("anytime deviation needs at least one pull")
    if tau_arr.ndim == 0:
        t = float(tau)
        return sigma * math.sqrt(2.0 * math.log(arm_count * t * (t + 1.0) / delta) / t)
    return sigma * np.sqrt(2.0 * np.log(arm_count * tau_arr * (tau_arr + 1.0) / delta) / tau_arr)
