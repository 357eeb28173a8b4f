from __future__ import annotations

import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from batchrace.model import BanditModel, compute_gaps, preset_model
from batchrace.oracles import (
    BoundReport,
    ScheduleInstance,
    check_bounds,
    check_coverage,
    elimination_deadline,
    grid_gap,
    intervals_cover,
    lemma_floor,
    random_instance,
    remark_applies,
    constant_factor_rhs,
    run_violates,
    scheduling_gap,
    subset_sums,
    partition_bound_rhs,
    partition_bound_rounded_rhs,
    complexity_bound_rhs,
    verify_scheduling_lemma,
)
from batchrace.sim import execute_run


def test_scheduling_examples():
    inst = ScheduleInstance((1, 1, 1), 1, 3)
    assert subset_sums(inst).tolist() == [1.0, 2.0, 3.0]
    assert scheduling_gap(inst) == 2.0
    inst = ScheduleInstance((5, 20), 1, 25)
    assert subset_sums(inst).tolist() == [1.0, 5.0, 20.0, 25.0]
    assert scheduling_gap(inst) == 5.0
    assert lemma_floor(inst) == pytest.approx(0.625)
    assert scheduling_gap(ScheduleInstance((50,), 50, 50)) == 1.0


def test_instance_preconditions():
    with pytest.raises(ValueError):
        ScheduleInstance((0.5, 3), 1, 3)
    with pytest.raises(ValueError):
        ScheduleInstance((3, 2), 1, 4)
    with pytest.raises(ValueError):
        ScheduleInstance((1, 1), 1, 5)
    with pytest.raises(ValueError):
        ScheduleInstance((), 1, 1)


@given(R=st.floats(1.0, 100.0), ratio=st.floats(16.5, 1e6))
def test_two_batch_adversary(R, ratio):
    N = R * ratio
    inst = ScheduleInstance((R, N - R), R, N)
    gap = scheduling_gap(inst)
    assert gap >= (N - R) / R * (1 - 1e-12)
    assert gap >= lemma_floor(inst)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32), T=st.integers(1, 7))
def test_gap_matches_grid_oracle(seed, T):
    inst = random_instance(np.random.default_rng(seed), T)
    exact = scheduling_gap(inst)
    approx = grid_gap(inst, points=4000)
    res = 1 + (inst.n_total - inst.r_min) / (4000 * inst.r_min)
    assert approx <= exact * (1 + 1e-12)
    assert exact <= approx * res * (1 + 1e-12)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32), T=st.integers(2, 10))
def test_random_instances_are_valid_and_respect_lemma(seed, T):
    inst = random_instance(np.random.default_rng(seed), T)
    assert (inst.n_total / inst.r_min) ** (1 / T) > 4
    assert scheduling_gap(inst) >= lemma_floor(inst)


def test_verify_lemma_report():
    rep = verify_scheduling_lemma(200, seed=3)
    assert rep.bound_name == "scheduling_lemma" and rep.runs_checked == 200
    assert rep.violations == 0 and rep.worst_ratio < 1


def test_bound_report_validation():
    with pytest.raises(ValueError):
        BoundReport("thm9", 1, 0)
    with pytest.raises(ValueError):
        BoundReport("thm2", 1, 2)
    assert BoundReport("thm2", 0, 0).rate == 0.0
    assert BoundReport("thm2", 10, 1).within(0.1)
    assert not BoundReport("thm2", 10, 2).within(0.1)


def test_bound_formulas():
    model = BanditModel.gaussian([0.5, 0.4], stddev=1.0)
    h = compute_gaps(model, 0.01).complexity_h
    log_term = math.log(2 * 3 / 0.05)
    assert complexity_bound_rhs(model, 0.01, 0.05, 3) == pytest.approx(640 * 0.01 ** (-2 / 3) * log_term * h)
    assert constant_factor_rhs(model, 0.01, 0.05, 3) == pytest.approx(640 * math.e * log_term * h)
    # both gaps 0.1 fall in bin 2 of three at eps = 0.01
    assert partition_bound_rhs(model, 0.01, 0.05, 3) == pytest.approx(80 * log_term * 2 * 0.01 ** (-4 / 3))
    assert partition_bound_rounded_rhs(model, 0.01, 0.05, 3) == 2 * math.ceil(80 * log_term * 0.01 ** (-4 / 3))


def test_remark_threshold():
    eps = 0.05
    T0 = math.ceil(2 * math.log(1 / eps))
    assert T0 == 6
    assert remark_applies(eps, T0) and not remark_applies(eps, T0 - 1)
    model = preset_model("setup1", n=20)
    tr = [execute_run("ebr", dict(epsilon=eps, delta=0.05, deadline=T), model, 0) for T in (T0 - 1, T0)]
    assert "remark_constant" not in check_bounds(tr[:1], model, eps, 0.05, T0 - 1)
    assert "remark_constant" in check_bounds(tr[1:], model, eps, 0.05, T0)


def test_checker_flags_oversized_cost():
    model = preset_model("setup1", n=20)
    tr = execute_run("ebr", dict(epsilon=0.05, delta=0.05, deadline=3), model, 0)
    assert not run_violates(tr, model, 0.05, 0.05, 3)
    bloated = replace(tr, total_cost=math.ceil(complexity_bound_rhs(model, 0.05, 0.05, 3)) + 1)
    reports = check_bounds([tr, bloated], model, 0.05, 0.05, 3)
    assert reports["thm2"].violations == 1 and reports["thm2"].worst_ratio > 1
    assert run_violates(bloated, model, 0.05, 0.05, 3)


def test_checker_rejects_non_ebr():
    model = preset_model("setup1", n=20)
    tr = execute_run("passive", dict(epsilon=0.05, delta=0.05, deadline=1), model, 0)
    with pytest.raises(ValueError):
        check_bounds([tr], model, 0.05, 0.05, 1)


def test_desk_traces_respect_bounds():
    model = preset_model("setup1", n=20)
    traces = [execute_run("ebr", dict(epsilon=0.05, delta=0.01, deadline=5), model, s) for s in range(200)]
    reports = check_bounds(traces, model, 0.05, 0.01, 5)
    assert reports["thm1"].violations == 0
    assert reports["thm2"].violations == 0


def test_coverage_and_elimination_round():
    model = BanditModel.bernoulli([0.2, 0.4, 0.5, 0.55, 0.6])
    eps, delta, T = 0.05, 0.05, 5
    traces = [execute_run("ebr", dict(epsilon=eps, delta=delta, deadline=T), model, s) for s in range(300)]
    assert check_coverage(traces, model, delta, T).violations == 0
    for tr in traces:
        assert intervals_cover(tr, model, delta, T)
        gone = {a: r.round for r in tr.rounds for a in r.eliminated}
        for arm in range(5):
            limit = elimination_deadline(model, arm, eps, delta, T)
            if limit is not None and limit < len(tr.rounds):
                assert arm in gone and gone[arm] <= limit
    assert elimination_deadline(model, 4, eps, delta, T) is None
    # need 20 log(500) / 0.16 = 776.8; C_1 = 412, C_2 = 1365
    assert elimination_deadline(model, 0, eps, delta, T) == 2


def test_coverage_detects_a_miss():
    model = BanditModel.bernoulli([0.2, 0.8])
    tr = execute_run("ebr", dict(epsilon=0.1, delta=0.05, deadline=3), model, 0)
    wrong = BanditModel.bernoulli([0.9, 0.1])
    assert not intervals_cover(tr, wrong, 0.05, 3)
