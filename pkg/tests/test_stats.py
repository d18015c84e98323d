"""Interval estimates and goodness-of-fit helpers."""
from __future__ import annotations

import math

import pytest
from hypothesis import given, strategies as st

from core.errors import InputError
from core.stats import (
    binomial_sigma,
    chi_square_expected,
    chi_square_uniform,
    collision_estimate,
    shape_exponent,
    wilson_interval,
    z_score,
)


def test_wilson_zero_count_uses_one_sided_bound():
    iv = wilson_interval(0, 1000)
    assert iv.lo == 0.0
    assert iv.hi == pytest.approx(1 - 0.05 ** (1 / 1000))
    assert iv.hi == pytest.approx(3 / 1000, rel=0.01)


@given(trials=st.integers(min_value=1, max_value=5000), data=st.data())
def test_wilson_interval_contains_the_estimate(trials, data):
    k = data.draw(st.integers(min_value=0, max_value=trials))
    iv = wilson_interval(k, trials)
    assert 0.0 <= iv.lo <= iv.hi <= 1.0
    assert iv.contains(k / trials)


def test_wilson_interval_without_trials():
    iv = wilson_interval(0, 0)
    assert (iv.lo, iv.hi) == (0.0, 1.0)


def test_collision_estimate():
    est = collision_estimate(["a", "a", "b", "b"])
    # 2 equal pairs out of 6
    assert est.collision_hat == pytest.approx(1 / 3)
    assert est.max_atom_hat == 0.5
    assert est.distinct == 2
    assert est.samples == 4


def test_collision_estimate_of_a_point_mass():
    est = collision_estimate([7] * 50)
    assert est.collision_hat == 1.0
    assert est.sigma == 0.0


def test_collision_estimate_needs_two_samples():
    est = collision_estimate([1])
    assert math.isnan(est.collision_hat)


def test_chi_square_uniform():
    res = chi_square_uniform({"a": 100, "b": 100, "c": 100}, ["a", "b", "c"])
    assert res.statistic == 0.0
    assert res.passes(0.001)
    skewed = chi_square_uniform({"a": 300, "b": 0, "c": 0}, ["a", "b", "c"])
    assert not skewed.passes(0.001)


def test_chi_square_uniform_rejects_unknown_states():
    with pytest.raises(InputError):
        chi_square_uniform({"a": 1, "z": 1}, ["a", "b"])


def test_chi_square_expected_skips_impossible_states():
    res = chi_square_expected([25, 75, 0], [0.25, 0.75, 0.0])
    assert res.dof == 1
    assert res.passes(0.001)


def test_small_helpers():
    assert binomial_sigma(0.5, 100) == pytest.approx(0.05)
    assert binomial_sigma(0.5, 0) == float("inf")
    assert z_score(1.0, 0.5, 0.25) == pytest.approx(2.0)
    assert z_score(1.0, 0.5, 0.0) is None


def test_shape_exponent():
    exponent, value = shape_exponent(2, 1, 100)
    assert exponent == pytest.approx(-2 * math.log(50))
    assert value == pytest.approx(1 / 2500)
    assert shape_exponent(10, 10, 100) == (0.0, 1.0)
