"""Mechanical checks of the theory.

* ``scheduling_gap`` computes, for a fixed set of batch sizes, the worst
  ratio by which any target pull count in ``[R, N)`` must be overshot
  when only subset sums of the batches are available.
* ``verify_scheduling_lemma`` samples instances and checks the
  ``(1/8) (N/R)^(1/T)`` floor on that ratio.
* ``check_bounds`` / ``check_coverage`` grade EBR traces against the
  two cost bounds, the large-T constant-factor form, and interval
  coverage.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .model import BanditModel, compute_gaps, partition_index
from .records import RunTrace
from .stats import deviation
from .strategies import ebr_cumulative_target

MAX_SCHEDULE_LEN = 24

BOUND_NAMES = ("thm1", "thm1_rounded", "thm2", "remark_constant", "coverage", "scheduling_lemma")


@dataclass(frozen=True)
class BoundReport:
    bound_name: str
    runs_checked: int
    violations: int
    worst_ratio: float = 0.0  # max observed lhs / rhs

    def __post_init__(self):
        if self.bound_name not in BOUND_NAMES:
            raise ValueError(f"unknown bound {self.bound_name!r}")
        if not 0 <= self.violations <= self.runs_checked:
            raise ValueError("violations must lie in [0, runs_checked]")

    @property
    def rate(self) -> float:
        return self.violations / self.runs_checked if self.runs_checked else 0.0

    def within(self, tolerance: float) -> bool:
        return self.rate <= tolerance


@dataclass(frozen=True)
class ScheduleInstance:
    q: tuple
    r_min: float
    n_total: float

    def __post_init__(self):
        q = tuple(float(v) for v in self.q)
        object.__setattr__(self, "q", q)
        if not q:
            raise ValueError("schedule needs at least one batch")
        if any(v <= 0 for v in q):
            raise ValueError("batch sizes must be positive")
        if any(a > b for a, b in zip(q, q[1:])):
            raise ValueError("batch sizes must be nondecreasing")
        if self.r_min < 1:
            raise ValueError("r_min must be at least 1")
        if q[0] < self.r_min:
            raise ValueError(f"smallest batch {q[0]} is below r_min {self.r_min}")
        if math.fsum(q) < self.n_total:
            raise ValueError(f"batches sum to {math.fsum(q)} < n_total {self.n_total}")

    @property
    def T(self) -> int:
        return len(self.q)


def subset_sums(instance: ScheduleInstance) -> np.ndarray:
    """Sorted distinct values of phi over all 2^T subsets (phi(empty) = R)."""
    if instance.T > MAX_SCHEDULE_LEN:
        raise ValueError(f"2^T enumeration limited to T <= {MAX_SCHEDULE_LEN}")
    sums = np.zeros(1)
    for v in instance.q:
        sums = np.concatenate([sums, sums + v])
    sums[0] = instance.r_min
    return np.unique(sums)


def scheduling_gap(instance: ScheduleInstance) -> float:
    """``sup_{x in [R, N)} min_{phi > x} phi / x`` via adjacent achievable sums.

    On ``[s_k, s_{k+1})`` the minimiser is ``s_{k+1}``, so the sup is the
    largest ratio of an achievable value in ``[R, N)`` to its successor.
    """
    vals = subset_sums(instance)
    R, N = instance.r_min, instance.n_total
    inside = vals[(vals >= R) & (vals < N)]
    if inside.size == 0:
        return N / R
    succ = vals[np.searchsorted(vals, inside, side="right")]
    return float(np.max(succ / inside))


def grid_gap(instance: ScheduleInstance, points: int = 10_000) -> float:
    """Brute-force the same sup on a uniform x-grid over ``[R, N)``.

    Subset sums come from explicit combinations, not the doubling used
    above. The grid value never exceeds the exact sup and is within a
    factor ``1 + (N - R) / (points R)`` of it.
    """
    sums = [instance.r_min]
    for k in range(1, instance.T + 1):
        sums.extend(math.fsum(c) for c in itertools.combinations(instance.q, k))
    sums = np.array(sorted(sums))
    R, N = instance.r_min, instance.n_total
    xs = R + (N - R) * np.arange(points) / points
    best = 1.0
    for chunk in np.array_split(xs, max(1, points // 1000)):
        above = np.where(sums[None, :] > chunk[:, None], sums[None, :], np.inf)
        best = max(best, float(np.max(above.min(axis=1) / chunk)))
    return best


def lemma_floor(instance: ScheduleInstance) -> float:
    return (instance.n_total / instance.r_min) ** (1.0 / instance.T) / 8.0


def random_instance(rng: np.random.Generator, T: int, ratio: float | None = None) -> ScheduleInstance:
    """Random instance satisfying ``(N/R)^(1/T) > 4``.

    ``N/R`` is log-uniform on ``[1.01 * 4^T, max(1e6, 100 * 4^T)]``;
    batches are sorted log-uniform draws in ``[R, N]``, then scaled up
    (which keeps ``q[0] >= R``) until they cover ``N``. Half the draws
    instead perturb a geometric ladder, which sits close to the floor.
    """
    floor = 1.01 * 4.0 ** T
    if ratio is None:
        hi = max(1e6, 100.0 * 4.0 ** T)
        ratio = math.exp(rng.uniform(math.log(floor), math.log(hi)))
    R = math.exp(rng.uniform(0.0, math.log(100.0)))
    N = R * ratio
    if rng.random() < 0.5:
        logs = np.sort(rng.uniform(0.0, math.log(ratio), size=T))
    else:
        # geometric ladder from R whose total is about N, jittered in log space
        step = math.log(ratio) / T
        logs = np.sort(np.arange(T) * step + rng.uniform(0.0, step, size=T))
    q = R * np.exp(logs)
    total = q.sum()
    if total < N:
        q = q * (N / total) * (1.0 + 1e-9)
    return ScheduleInstance(tuple(q), R, N)


def verify_scheduling_lemma(trials: int = 1000, T_range=(2, 10), seed: int = 0) -> BoundReport:
    rng = np.random.default_rng(seed)
    violations = 0
    worst = 0.0
    for _ in range(trials):
        T = int(rng.integers(T_range[0], T_range[1] + 1))
        inst = random_instance(rng, T)
        ratio = lemma_floor(inst) / scheduling_gap(inst)
        worst = max(worst, ratio)
        violations += ratio > 1.0
    return BoundReport("scheduling_lemma", trials, violations, worst)


def _log_term(n, deadline, delta):
    return math.log(n * deadline / delta)


def partition_bound_rhs(model: BanditModel, epsilon: float, delta: float, deadline: int, sigma: float | None = None) -> float:
    sigma = sigma or model.sigma
    gamma = partition_index(compute_gaps(model, epsilon), epsilon, deadline)
    schedule = math.fsum(epsilon ** (-2.0 * g / deadline) for g in gamma)
    return 80.0 * sigma ** 2 * _log_term(model.n, deadline, delta) * schedule


def partition_bound_rounded_rhs(model: BanditModel, epsilon: float, delta: float, deadline: int, sigma: float | None = None) -> int:
    """The per-arm schedule sum of ``partition_bound_rhs`` with each term rounded up to the integer
    cumulative batch size EBR actually uses at round ``gamma_i``."""
    sigma = sigma or model.sigma
    gamma = partition_index(compute_gaps(model, epsilon), epsilon, deadline)
    return sum(ebr_cumulative_target(g, deadline, model.n, epsilon, delta, sigma) for g in gamma)


def complexity_bound_rhs(model: BanditModel, epsilon: float, delta: float, deadline: int, sigma: float | None = None) -> float:
    sigma = sigma or model.sigma
    h = compute_gaps(model, epsilon).complexity_h
    return 640.0 * sigma ** 2 * epsilon ** (-2.0 / deadline) * _log_term(model.n, deadline, delta) * h


def remark_applies(epsilon: float, deadline: int) -> bool:
    return deadline >= 2.0 * math.log(1.0 / epsilon)


def constant_factor_rhs(model: BanditModel, epsilon: float, delta: float, deadline: int, sigma: float | None = None) -> float:
    sigma = sigma or model.sigma
    h = compute_gaps(model, epsilon).complexity_h
    return 640.0 * math.e * sigma ** 2 * h * _log_term(model.n, deadline, delta)


def _require_ebr(traces):
    for tr in traces:
        if tr.strategy != "ebr":
            raise ValueError(f"bound checks apply to EBR traces only, got {tr.strategy!r}")


def _report(name, costs, rhs):
    ratios = [c / rhs for c in costs]
    return BoundReport(name, len(costs), sum(r > 1.0 for r in ratios), max(ratios, default=0.0))


def check_bounds(traces: list, model: BanditModel, epsilon: float, delta: float, deadline: int,
                 sigma: float | None = None) -> dict:
    """Per-bound violation counts over EBR traces.

    ``remark_constant`` is only reported when ``T >= 2 log(1/eps)``.
    """
    _require_ebr(traces)
    costs = [tr.total_cost for tr in traces]
    reports = {
        "thm1": _report("thm1", costs, partition_bound_rhs(model, epsilon, delta, deadline, sigma)),
        "thm1_rounded": _report("thm1_rounded", costs, partition_bound_rounded_rhs(model, epsilon, delta, deadline, sigma)),
        "thm2": _report("thm2", costs, complexity_bound_rhs(model, epsilon, delta, deadline, sigma)),
    }
    if remark_applies(epsilon, deadline):
        reports["remark_constant"] = _report("remark_constant", costs, constant_factor_rhs(model, epsilon, delta, deadline, sigma))
    return reports


def run_violates(trace: RunTrace, model: BanditModel, epsilon: float, delta: float, deadline: int,
                 sigma: float | None = None) -> bool:
    """True when an EBR run breaks any applicable cost bound."""
    return any(r.violations for r in check_bounds([trace], model, epsilon, delta, deadline, sigma).values()
               if r.bound_name != "thm1_rounded")


def intervals_cover(trace: RunTrace, model: BanditModel, delta: float, deadline: int,
                    sigma: float | None = None) -> bool:
    """Whether every recorded interval of the run contains its arm's true mean."""
    sigma = sigma or model.sigma
    means = model.means
    for rec in trace.rounds:
        for arm, pulls, mean in rec.snapshot:
            d = deviation(pulls, model.n, deadline, delta, sigma)
            if not mean - d <= means[arm] <= mean + d:
                return False
    return True


def check_coverage(traces: list, model: BanditModel, delta: float, deadline: int,
                   sigma: float | None = None) -> BoundReport:
    _require_ebr(traces)
    misses = sum(not intervals_cover(tr, model, delta, deadline, sigma) for tr in traces)
    return BoundReport("coverage", len(traces), misses, misses / len(traces) / delta if traces else 0.0)


def elimination_deadline(model: BanditModel, arm: int, epsilon: float, delta: float, deadline: int,
                         sigma: float | None = None) -> int | None:
    """First round whose cumulative batch reaches ``80 sigma^2 log(nT/delta) / Delta_i^2``.

    On the all-intervals-cover event an arm at least ``eps`` below the
    best must be gone by the end of that round. ``None`` for
    eps-optimal arms or when no round reaches the threshold.
    """
    sigma = sigma or model.sigma
    means = model.means
    gap = max(means) - means[arm]
    if gap < epsilon:
        return None
    need = 80.0 * sigma ** 2 * _log_term(model.n, deadline, delta) / gap ** 2
    for t in range(1, deadline + 1):
        if ebr_cumulative_target(t, deadline, model.n, epsilon, delta, sigma) >= need:
            return t
    return None
