from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from batchrace.stats import ArmStats, UndefinedMeanError, anytime_deviation, bounds, deviation

D_100 = 0.801223813534000054  # mpmath, tau=100, n=100, T=15, delta=0.01, sigma=1


def test_deviation_examples():
    assert deviation(100, 100, 15, 0.01, 1.0) == pytest.approx(D_100, rel=1e-12)
    assert deviation(400, 100, 15, 0.01, 1.0) == pytest.approx(D_100 / 2, rel=1e-12)
    assert deviation(400, 100, 15, 0.01, 0.5) == pytest.approx(D_100 / 4, rel=1e-12)


def test_deviation_vectorised_matches_scalar():
    taus = np.array([1, 7, 100, 12345])
    vec = deviation(taus, 20, 5, 0.05, 0.5)
    assert np.allclose(vec, [deviation(int(t), 20, 5, 0.05, 0.5) for t in taus], rtol=1e-15)


def test_deviation_rejects_bad_input():
    with pytest.raises(ValueError):
        deviation(0, 10, 5, 0.1, 1.0)
    with pytest.raises(ValueError):
        deviation(10, 10, 5, 1.0, 1.0)


def test_bounds_example():
    s = ArmStats()
    s.add(100, 50.0)
    c = bounds(s, 100, 15, 0.01, 1.0)
    assert c.lower == pytest.approx(0.5 - D_100, rel=1e-12)
    assert c.upper == pytest.approx(0.5 + D_100, rel=1e-12)
    assert bounds(s, 100, 15, 0.01, 1.0) == c


def test_mean_of_unpulled_arm_raises():
    with pytest.raises(UndefinedMeanError):
        ArmStats().mean


def test_compensated_sum_is_batching_invariant():
    rng = np.random.default_rng(3)
    vals = rng.random(10_000) * 1e6
    one = ArmStats()
    one.add(len(vals), math.fsum(vals))
    many = ArmStats()
    for v in vals:
        many.add(1, float(v))
    assert many.total == pytest.approx(one.total, rel=1e-15)
    assert many.round_pulls == [1] * 10_000


def test_anytime_examples():
    assert anytime_deviation(1, 2, 0.01, 1.0) == pytest.approx(3.46163676520457068, rel=1e-12)
    assert anytime_deviation(10_000, 5, 0.05, 1.0) < anytime_deviation(1000, 5, 0.05, 1.0)
    assert anytime_deviation(50, 5, 0.05, 0.5) == pytest.approx(anytime_deviation(50, 5, 0.05, 1.0) / 2)
    taus = np.arange(1, 50)
    assert np.allclose(anytime_deviation(taus, 3, 0.1, 1.0),
                       [anytime_deviation(int(t), 3, 0.1, 1.0) for t in taus])


@given(tau=st.integers(1, 10**9), k=st.floats(1.0, 4.0))
def test_deviation_scales_as_inverse_sqrt(tau, k):
    a = deviation(tau, 10, 5, 0.05, 1.0)
    b = deviation(tau * 4, 10, 5, 0.05, 1.0)
    assert b == pytest.approx(a / 2, rel=1e-12)
    assert deviation(tau, 10, 5, 0.05, k) == pytest.approx(k * a, rel=1e-12)
