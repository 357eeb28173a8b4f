"""Bandit models and instance-complexity quantities.

Everything here is a pure function of the arm means, the tolerance
``epsilon`` and (for the partition) the deadline ``T``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union


@dataclass(frozen=True)
class Bernoulli:
    p: float

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"Bernoulli p must lie in [0, 1], got {self.p}")

    @property
    def mean(self) -> float:
        return self.p

    @property
    def subgaussian_proxy(self) -> float:
        # tight proxy for any [0, 1]-valued reward
        return 0.5


@dataclass(frozen=True)
class Gaussian:
    mean: float
    stddev: float

    def __post_init__(self):
        if not 0.0 <= self.mean <= 1.0:
            raise ValueError(f"Gaussian mean must lie in [0, 1], got {self.mean}")
        if not self.stddev > 0.0:
            raise ValueError(f"Gaussian stddev must be positive, got {self.stddev}")

    @property
    def subgaussian_proxy(self) -> float:
        return self.stddev


ArmDistribution = Union[Bernoulli, Gaussian]


def default_sigma(arms: Sequence[ArmDistribution]) -> float:
    return max(arm.subgaussian_proxy for arm in arms)


@dataclass(frozen=True)
class BanditModel:
    """Ground truth for a simulation: the arms plus the proxy ``sigma``
    that every schedule and interval uses.

    ``sigma`` defaults to the largest per-arm proxy (1/2 for an
    all-Bernoulli model) and may be raised but never lowered below it.
    """

    arms: tuple
    sigma: float = None

    def __post_init__(self):
        arms = tuple(self.arms)
        object.__setattr__(self, "arms", arms)
        if len(arms) < 2:
            raise ValueError(f"a bandit model needs at least 2 arms, got {len(arms)}")
        floor = default_sigma(arms)
        if self.sigma is None:
            object.__setattr__(self, "sigma", floor)
        elif self.sigma < floor:
            raise ValueError(
                f"sigma={self.sigma} is below the largest arm proxy {floor}"
            )

    @property
    def n(self) -> int:
        return len(self.arms)

    @property
    def means(self) -> tuple:
        return tuple(arm.mean for arm in self.arms)

    @classmethod
    def bernoulli(cls, means: Sequence[float], sigma: float | None = None) -> "BanditModel":
        return cls(tuple(Bernoulli(float(m)) for m in means), sigma)

    @classmethod
    def gaussian(cls, means: Sequence[float], stddev: float, sigma: float | None = None) -> "BanditModel":
        return cls(tuple(Gaussian(float(m), stddev) for m in means), sigma)


@dataclass(frozen=True)
class GapProfile:
    best_arm: int
    gaps: tuple
    n_opt: tuple
    complexity_h: float
    epsilon: float = field(default=None, compare=False)


def best_arm(means: Sequence[float]) -> int:
    """Index of the highest mean; the lowest index wins a tie."""
    best = 0
    for i, m in enumerate(means):
        if m > means[best]:
            best = i
    return best


def compute_gaps(model: BanditModel | Sequence[float], epsilon: float) -> GapProfile:
    means = model.means if isinstance(model, BanditModel) else tuple(model)
    if len(means) < 2:
        raise ValueError("gaps need at least 2 arms")
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    top = best_arm(means)
    runner_up = max(m for i, m in enumerate(means) if i != top)
    gaps = tuple(
        means[top] - runner_up if i == top else means[top] - m
        for i, m in enumerate(means)
    )
    n_opt = tuple(
        epsilon ** -2 if g < epsilon else (g + epsilon) ** -2 for g in gaps
    )
    return GapProfile(top, gaps, n_opt, math.fsum(n_opt), epsilon)


def _check_eps_T(epsilon: float, deadline: int):
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    if deadline < 1 or int(deadline) != deadline:
        raise ValueError(f"deadline must be a positive integer, got {deadline}")


def gap_bin(gap: float, epsilon: float, deadline: int) -> int:
    """Bin index in {1..T} of a single gap under the geometric partition."""
    T = int(deadline)
    for k in range(1, T):
        if gap >= epsilon ** (k / T):
            return k
    return T


def partition_index(profile: GapProfile | Sequence[float], epsilon: float, deadline: int) -> tuple:
    """Map every gap to its bin: bin 1 is ``[eps^(1/T), 1]``, bin k is
    ``[eps^(k/T), eps^((k-1)/T))`` and bin T is ``[0, eps^((T-1)/T))``."""
    _check_eps_T(epsilon, deadline)
    gaps = profile.gaps if isinstance(profile, GapProfile) else tuple(profile)
    return tuple(gap_bin(g, epsilon, deadline) for g in gaps)


def partition_sup_complexity(gamma: Sequence[int], epsilon: float, deadline: int) -> float:
    """Supremum of H over the partition cell ``gamma``.

    H decreases in every gap, so the sup sits at each bin's lower edge;
    the last bin contains gaps below epsilon and contributes ``eps^-2``.
    """
    _check_eps_T(epsilon, deadline)
    T = int(deadline)
    terms = []
    for g in gamma:
        if not 1 <= g <= T:
            raise ValueError(f"partition index {g} outside [1, {T}]")
        if g == T:
            terms.append(epsilon ** -2)
        else:
            terms.append((epsilon ** (g / T) + epsilon) ** -2)
    return math.fsum(terms)


def ilog(depth: int, n: float) -> float:
    """Iterated natural log floored at 1: ``ilog(0, n) = n``."""
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    if n < 1:
        raise ValueError(f"ilog needs n >= 1, got {n}")
    value = float(n)
    for _ in range(depth):
        if value <= math.e:
            # log(value) <= 1 from here on
            return 1.0
        value = max(math.log(value), 1.0)
    return value


def arithmetic_means(low: float, high: float, n: int) -> tuple:
    if n < 2:
        raise ValueError("need at least 2 arms")
    step = (high - low) / (n - 1)
    return tuple(low + i * step for i in range(n - 1)) + (high,)


# name -> (low, high, default n)
PRESETS = {
    "setup1": (0.1, 0.9, 100),
    "setup2": (0.65, 0.9, 100),
}
DESK_N = 20


def preset_model(name: str, n: int | None = None, sigma: float | None = None) -> BanditModel:
    """Bernoulli arms whose means form an arithmetic sequence.

    ``setup1`` spans 0.1..0.9 (evenly spaced arms), ``setup2`` spans
    0.65..0.9 (all arms close). ``n`` defaults to 100.
    """
    try:
        low, high, default_n = PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; known: {sorted(PRESETS)}") from None
    return BanditModel.bernoulli(arithmetic_means(low, high, n or default_n), sigma)
