"""Round-based best-arm strategies.

Each ``run_*`` function drives one strategy to termination against a
sampler exposing ``pull(arm, count) -> reward sum`` (and, for the
sequential baseline, ``pull_samples(arm, count) -> array``) and returns
``(Recommendation, RunTrace)``. Within a round every pull count is fixed
before any of that round's rewards are seen.

``kdelta_er`` and ``ae`` are reconstructions: only their hyperparameters
are pinned down, so their bodies follow the behaviour described for
them rather than the original publications.
"""
from __future__ import annotations

import math

import numpy as np

from .model import ilog
from .records import Recommendation, RoundRecord, RunAborted, RunTrace
from .stats import ArmStats, anytime_deviation, bounds

RECONSTRUCTED = frozenset({"kdelta_er", "ae"})


def ebr_cumulative_target(t: int, deadline: int, n: int, epsilon: float, delta: float, sigma: float) -> int:
    """Cumulative pulls every survivor must have after round ``t``."""
    if not 1 <= t <= deadline:
        raise ValueError(f"round {t} outside [1, {deadline}]")
    scale = 80.0 * sigma ** 2 * math.log(n * deadline / delta)
    return math.ceil(scale * epsilon ** (-2.0 * t / deadline))


def passive_pulls_per_arm(n: int, epsilon: float, delta: float, sigma: float) -> int:
    return ebr_cumulative_target(1, 1, n, epsilon, delta, sigma)


def kdelta_er_batch(epsilon: float) -> int:
    return math.ceil(57.0 / epsilon ** 2)


def ae_batch(t: int, deadline: int, n: int, survivors: int, epsilon: float, delta: float) -> int:
    extra = ilog(deadline - t + 1, survivors)
    return math.ceil(4.0 / epsilon ** 2 * (math.log(2 * n * deadline / delta) + extra))


def _argmax(values: dict) -> int:
    # dict iterates in ascending arm order, so the first max is the lowest index
    best = None
    for arm, v in values.items():
        if best is None or v > values[best]:
            best = arm
    return best


def ebr_eliminate(stats, survivors, n: int, deadline: int, epsilon: float, delta: float, sigma: float):
    """Return ``(R_t, S_{t+1})`` for the survivor list ``survivors``.

    The arm with the largest lower bound is never eliminated, so the
    survivor set cannot empty out even when intervals are narrower than
    the slack ``epsilon / min(n, T)``.
    """
    survivors = sorted(survivors)
    if len(survivors) <= 1:
        return (), tuple(survivors)
    conf = {i: bounds(stats[i], n, deadline, delta, sigma) for i in survivors}
    leader = _argmax({i: c.lower for i, c in conf.items()})
    threshold = conf[leader].lower + epsilon / min(n, deadline)
    removed = tuple(i for i in survivors if i != leader and conf[i].upper < threshold)
    return removed, tuple(i for i in survivors if i not in removed)


def _pull(sampler, trace, arm, count):
    try:
        return sampler.pull(arm, count)
    except Exception as exc:
        trace.error = f"sampler failed on arm {arm} ({count} pulls): {exc!r}"
        raise RunAborted(trace.error, trace) from exc


def _run_batched(name, sampler, n, max_rounds, plan_fn, eliminate_fn, params):
    trace = RunTrace(name, seed=getattr(sampler, "seed", None), params=dict(params))
    stats = [ArmStats() for _ in range(n)]
    survivors = tuple(range(n))
    cost = 0
    t = 0
    while len(survivors) > 1 and t < max_rounds:
        t += 1
        plan = plan_fn(t, survivors, stats)
        for arm, count in plan:
            reward = _pull(sampler, trace, arm, count) if count > 0 else 0.0
            stats[arm].add(count, reward)
            cost += count
        removed, survivors = eliminate_fn(t, survivors, stats)
        snapshot = tuple((arm, stats[arm].pulls, stats[arm].mean) for arm, _ in plan)
        trace.rounds.append(RoundRecord(t, tuple(plan), tuple(removed), tuple(survivors), cost, snapshot))
    if len(survivors) == 1:
        arm = survivors[0]
    else:
        arm = _argmax({i: stats[i].mean for i in survivors})
    rec = Recommendation(arm, t)
    trace.recommendation = rec
    trace.total_cost = cost
    return rec, trace


def run_ebr(sampler, n: int, deadline: int, epsilon: float, delta: float, sigma: float):
    """Elastic batch racing: geometric cumulative schedule plus racing
    elimination; stops as soon as a single arm survives."""
    _check_common(deadline, epsilon, delta)

    def plan(t, survivors, stats):
        target = ebr_cumulative_target(t, deadline, n, epsilon, delta, sigma)
        return [(i, target - stats[i].pulls) for i in survivors]

    def eliminate(t, survivors, stats):
        return ebr_eliminate(stats, survivors, n, deadline, epsilon, delta, sigma)

    params = dict(epsilon=epsilon, delta=delta, deadline=deadline, sigma=sigma)
    return _run_batched("ebr", sampler, n, deadline, plan, eliminate, params)


def run_passive(sampler, n: int, epsilon: float, delta: float, sigma: float):
    _check_common(1, epsilon, delta)
    per_arm = passive_pulls_per_arm(n, epsilon, delta, sigma)

    def plan(t, survivors, stats):
        return [(i, per_arm) for i in survivors]

    def eliminate(t, survivors, stats):
        return (), survivors

    params = dict(epsilon=epsilon, delta=delta, deadline=1, sigma=sigma)
    return _run_batched("passive", sampler, n, 1, plan, eliminate, params)


def run_kdelta_er(sampler, n: int, deadline: int, epsilon: float, delta: float):
    """Reconstructed k-delta elimination (k = 1): a fixed batch of
    ``ceil(57 / eps^2)`` pulls per survivor each round, dropping arms
    more than ``eps / 2`` below the empirical leader."""
    _check_common(deadline, epsilon, delta)
    q = kdelta_er_batch(epsilon)

    def plan(t, survivors, stats):
        return [(i, q) for i in survivors]

    def eliminate(t, survivors, stats):
        means = {i: stats[i].mean for i in survivors}
        cut = means[_argmax(means)] - epsilon / 2.0
        removed = tuple(i for i in survivors if means[i] < cut)
        return removed, tuple(i for i in survivors if i not in removed)

    params = dict(epsilon=epsilon, delta=delta, deadline=deadline, reconstructed=True)
    return _run_batched("kdelta_er", sampler, n, deadline, plan, eliminate, params)


def run_ae(sampler, n: int, deadline: int, epsilon: float, delta: float):
    """Reconstructed aggressive elimination with the unknown gap set to eps.

    Round t pulls every survivor ``ceil(4/eps^2 (log(2nT/delta) +
    ilog^(T-t+1)(|S_t|)))`` times, then keeps only the top
    ``ceil(|S_t| / ilog^(T-t)(n))`` arms by empirical mean. The
    iterated log is 1 until the last few rounds, so nothing is dropped
    early and the final rounds cut down to a single arm.
    """
    _check_common(deadline, epsilon, delta)

    def plan(t, survivors, stats):
        m = ae_batch(t, deadline, n, len(survivors), epsilon, delta)
        return [(i, m) for i in survivors]

    def eliminate(t, survivors, stats):
        keep = math.ceil(len(survivors) / ilog(deadline - t, n))
        ranked = sorted(survivors, key=lambda i: (-stats[i].mean, i))
        kept = set(ranked[:keep])
        removed = tuple(i for i in survivors if i not in kept)
        return removed, tuple(i for i in survivors if i in kept)

    params = dict(epsilon=epsilon, delta=delta, deadline=deadline, reconstructed=True)
    return _run_batched("ae", sampler, n, deadline, plan, eliminate, params)


_MIN_BLOCK = 64
_MAX_BLOCK = 1 << 15


def run_sequential(sampler, n: int, epsilon: float, delta: float, sigma: float, pull_cap: int | None = None):
    """Round-robin single pulls with racing elimination after every pass.

    Intervals come from ``anytime_deviation`` and the slack is
    ``eps / n``. Passes are simulated in vectorised blocks; each trace
    record covers the passes up to (and including) one elimination.
    When the cap would be exceeded by another full pass the run stops
    and recommends the empirical leader with ``capped`` set.
    """
    _check_common(1, epsilon, delta)
    if pull_cap is None:
        pull_cap = n * passive_pulls_per_arm(n, epsilon, delta, sigma)
    params = dict(epsilon=epsilon, delta=delta, sigma=sigma, pull_cap=int(pull_cap))
    trace = RunTrace("sequential", seed=getattr(sampler, "seed", None), params=params)
    if n == 1:
        rec = Recommendation(0, 0)
        trace.recommendation = rec
        return rec, trace

    survivors = np.arange(n)
    sums = np.zeros(n)
    slack = epsilon / n
    tau = 0
    segment_start = 0
    cost = 0
    block = _MIN_BLOCK

    def close_segment(removed):
        pulled = tuple((int(a), tau - segment_start) for a in survivors)
        return pulled, tuple(int(a) for a in removed)

    while len(survivors) > 1:
        passes_left = (pull_cap - cost) // len(survivors)
        if passes_left <= 0:
            trace.capped = True
            break
        b = int(min(block, passes_left))
        try:
            draws = np.stack([sampler.pull_samples(int(a), b) for a in survivors])
        except Exception as exc:
            trace.error = f"sampler failed during pass block at tau={tau}: {exc!r}"
            raise RunAborted(trace.error, trace) from exc
        cum = sums[survivors][:, None] + np.cumsum(draws, axis=1)
        taus = tau + np.arange(1, b + 1)
        dev = anytime_deviation(taus, n, delta, sigma)
        means = cum / taus
        lower = means - dev
        upper = means + dev
        cols = np.arange(b)
        leader = np.argmax(lower, axis=0)
        elim = upper < lower[leader, cols] + slack
        elim[leader, cols] = False
        hits = np.flatnonzero(elim.any(axis=0))
        if hits.size == 0:
            sums[survivors] = cum[:, -1]
            tau += b
            cost += b * len(survivors)
            block = min(block * 2, _MAX_BLOCK)
            continue
        j = int(hits[0])
        sums[survivors] = cum[:, j]
        tau += j + 1
        cost += (j + 1) * len(survivors)
        removed = survivors[elim[:, j]]
        plan, removed_t = close_segment(removed)
        survivors = survivors[~elim[:, j]]
        trace.rounds.append(RoundRecord(tau, plan, removed_t, tuple(int(a) for a in survivors), cost))
        segment_start = tau

    if tau > segment_start:
        plan, _ = close_segment(())
        trace.rounds.append(RoundRecord(tau, plan, (), tuple(int(a) for a in survivors), cost))
    # equal pull counts across survivors, so the leader by sum is the leader by mean
    arm = int(survivors[np.argmax(sums[survivors])])
    rec = Recommendation(arm, tau)
    trace.recommendation = rec
    trace.total_cost = cost
    return rec, trace


def _check_common(deadline, epsilon, delta):
    if deadline < 1 or int(deadline) != deadline:
        raise ValueError(f"deadline must be a positive integer, got {deadline}")
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")


STRATEGY_NAMES = ("ebr", "passive", "sequential", "kdelta_er", "ae")


def run_strategy(name: str, sampler, n: int, *, epsilon: float, delta: float, deadline: int,
                 sigma: float, pull_cap: int | None = None):
    """Dispatch by strategy name with the harness's uniform parameters."""
    if name == "ebr":
        return run_ebr(sampler, n, deadline, epsilon, delta, sigma)
    if name == "passive":
        return run_passive(sampler, n, epsilon, delta, sigma)
    if name == "sequential":
        return run_sequential(sampler, n, epsilon, delta, sigma, pull_cap)
    if name == "kdelta_er":
        return run_kdelta_er(sampler, n, deadline, epsilon, delta)
    if name == "ae":
        return run_ae(sampler, n, deadline, epsilon, delta)
    raise ValueError(f"unknown strategy {name!r}; known: {', '.join(STRATEGY_NAMES)}")
