"""Structural events: expansion, zero minors, independence, Omega events, anti-concentration."""
from __future__ import annotations

import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from core.errors import InputError
from core.graph import circulant, delta_vector, has_zero_block
from core.properties import (
    chained_atom_bound,
    default_k_max,
    delta_anticoncentration,
    exact_delta_law,
    expansion_check,
    independence_number,
    is_independent,
    min_pair_union,
    omega_events,
    projection_anticoncentration,
    projection_event,
    projection_exact_probability,
    projection_query,
    row_support_density,
    zero_minor_search,
)
from core.rng import make_rng
from core.sampler import ChainConfig, FrozenColumnSet, enumerate_all, sample_graph


def _random_graph(n, d, seed):
    return sample_graph(n, d, ChainConfig(), make_rng(seed))[0]


# ---------------------------------------------------------
# Expansion
# ---------------------------------------------------------
def test_expansion_of_circulant(circ52):
    rep = expansion_check(circ52, "1/2", k_max=2)
    assert rep.per_size_ratio == {1: Fraction(1), 2: Fraction(3, 4)}
    assert rep.worst_ratio == Fraction(3, 4)
    assert rep.mode == "exhaustive"
    assert not rep.in_gamma
    assert rep.iso_number == 1
    assert rep.invariant_violations() == []
    assert expansion_check(circ52, "1/4", k_max=2).in_gamma


def test_sampled_sweep_agrees_on_small_graphs(circ52):
    exhaustive = expansion_check(circ52, "1/4", k_max=3)
    sampled = expansion_check(circ52, "1/4", k_max=3, budget=1, rng=3)
    assert sampled.mode == "sampled"
    assert sampled.worst_ratio == exhaustive.worst_ratio


def test_expansion_rejects_bad_k_max(circ52):
    with pytest.raises(InputError):
        expansion_check(circ52, "1/4", k_max=0)


def test_expansion_of_the_complete_graph():
    g = circulant(6, 6)
    rep = expansion_check(g, "1/10", k_max=3, lam="1/2")
    assert rep.per_size_ratio == {1: Fraction(1), 2: Fraction(1, 2), 3: Fraction(1, 3)}
    assert rep.worst_ratio == Fraction(1, 3)
    assert rep.in_gamma
    assert rep.iso_number == 1 and len(rep.iso_set) == 3
    assert rep.invariant_violations() == []
    assert expansion_check(g, "1/10", k_max=1).iso_number is None


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(6, 12), data=st.data())
def test_expansion_ratio_bounds(seed, n, data):
    d = data.draw(st.integers(1, n - 1))
    g = _random_graph(n, d, seed)
    rep = expansion_check(g, "1/10", k_max=min(3, n))
    assert rep.invariant_violations() == []


def test_default_k_max_is_at_least_one():
    assert default_k_max(10, 5, 0.1) == 1
    assert default_k_max(10_000, 10, 0.5, c0=0.1) == 50


# ---------------------------------------------------------
# Zero minors
# ---------------------------------------------------------
def test_zero_minor_exact(circ52):
    res = zero_minor_search(circ52, 2, 2, mode="exact")
    assert res.found and res.conclusive
    assert res.i_set == (0, 1)
    assert res.j_set == (3, 4)
    assert has_zero_block(circ52, res.i_set, res.j_set)


def test_zero_minor_absence_is_only_conclusive_when_exact(circ52):
    exact = zero_minor_search(circ52, 4, 2, mode="exact")
    assert not exact.found and exact.conclusive
    greedy = zero_minor_search(circ52, 4, 2, mode="heuristic", restarts=5)
    assert not greedy.found and not greedy.conclusive


def _has_zero_minor(g, l, r):
    return any(
        has_zero_block(g, i_set, j_set)
        for i_set in itertools.combinations(range(g.n), l)
        for j_set in itertools.combinations(range(g.n), r)
    )


@pytest.mark.parametrize("l, r", [(2, 2), (3, 2)])
def test_zero_minor_exact_matches_double_enumeration(l, r):
    for g in enumerate_all(5, 2):
        assert zero_minor_search(g, l, r, mode="exact").found == _has_zero_minor(g, l, r)


def test_zero_minor_greedy_witness_is_valid():
    g = _random_graph(30, 3, 2)
    res = zero_minor_search(g, 5, 10, mode="heuristic", rng=1)
    if res.found:
        assert len(res.i_set) >= 5 and len(res.j_set) >= 10
        assert has_zero_block(g, res.i_set, res.j_set)


def test_zero_minor_rejects_bad_arguments(circ52):
    with pytest.raises(InputError):
        zero_minor_search(circ52, 0, 2)
    with pytest.raises(InputError):
        zero_minor_search(circ52, 2, 2, mode="fast")


# ---------------------------------------------------------
# Independence number
# ---------------------------------------------------------
@pytest.mark.parametrize(
    "g, alpha",
    [
        (circulant(5, 2, offset=1), 1),  # underlying graph is K5
        (circulant(6, 1, offset=1), 3),  # directed 6-cycle
        (circulant(4, 1), 0),            # every vertex has a loop
    ],
)
def test_independence_number_known_values(g, alpha):
    res = independence_number(g)
    assert res.size == alpha
    assert res.exact
    assert is_independent(g, res.vertices)


def _brute_alpha(g):
    for size in range(g.n, 0, -1):
        if any(is_independent(g, s) for s in itertools.combinations(range(g.n), size)):
            return size
    return 0


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(3, 9), data=st.data())
def test_independence_number_matches_brute_force(seed, n, data):
    d = data.draw(st.integers(1, n - 1))
    g = _random_graph(n, d, seed)
    res = independence_number(g)
    assert res.size == _brute_alpha(g)
    assert is_independent(g, res.vertices)
    greedy = independence_number(g, exact_cap=0, rng=seed, restarts=3)
    assert not greedy.exact
    assert greedy.size <= res.size
    assert is_independent(g, greedy.vertices)


# ---------------------------------------------------------
# Omega events
# ---------------------------------------------------------
def test_omega_events_on_circulant(circ52):
    assert min_pair_union(circ52) == (3, (0, 1))
    loose = omega_events(circ52, "1/2", j_max=2)
    assert loose.in_omega2 and loose.in_omega_eps
    assert loose.min_sj_ratio == Fraction(3, 4)
    tight = omega_events(circ52, "1/10", j_max=2)
    assert not tight.in_omega2
    assert not tight.in_omega_eps


def test_omega_events_rejects_bad_epsilon(circ52):
    with pytest.raises(InputError):
        omega_events(circ52, 1)


def test_row_support_density(circ52):
    assert row_support_density(circ52, {0, 1, 2}, "1/2", "1/2") == 4
    with pytest.raises(InputError):
        row_support_density(circ52, {0}, "1/2", "1/2")


# ---------------------------------------------------------
# Anti-concentration of delta^J
# ---------------------------------------------------------
def test_exact_delta_law_is_uniform_for_a_single_column():
    law = exact_delta_law(4, 2, {0})
    assert len(law) == 6
    assert set(law.values()) == {Fraction(1, 6)}
    assert chained_atom_bound(4, 2, 1) == pytest.approx(1 / 6)


def test_delta_estimate_matches_exact_collision():
    exact = sum(p * p for p in exact_delta_law(5, 2, {0, 1}).values())
    est = delta_anticoncentration(5, 2, {0, 1}, samples=3000, seed=4)
    assert est.samples == 3000
    assert abs(est.collision_hat - float(exact)) <= 0.02
    assert est.max_atom_hat <= 1.0
    assert est.to_dict()["sampler"] == "uniform"


def test_delta_estimate_under_frozen_columns():
    g = circulant(8, 2)
    frozen = FrozenColumnSet.from_graph(g, [7])
    est = delta_anticoncentration(8, 2, {0}, samples=200, frozen=frozen, seed=2,
                                  sampler_cfg=ChainConfig(burn_in_factor=5))
    assert est.heuristic
    assert est.to_dict()["sampler"] == "conditional (heuristic)"
    with pytest.raises(InputError):
        delta_anticoncentration(8, 2, {7}, samples=10, frozen=frozen)


def test_delta_vectors_are_counted_by_mask():
    g = circulant(5, 2)
    assert delta_vector(g, {0, 1}).mask == 0b10011


def test_delta_collision_does_not_grow_with_j():
    estimates = [delta_anticoncentration(12, 2, range(k), samples=3000, seed=10 + k) for k in (1, 2, 3)]
    for smaller, larger in zip(estimates, estimates[1:]):
        slack = 3 * (smaller.sigma + larger.sigma)
        assert larger.collision_hat <= smaller.collision_hat + slack
    assert estimates[-1].collision_hat < estimates[0].collision_hat


# ---------------------------------------------------------
# Projection anti-concentration
# ---------------------------------------------------------
def _query():
    return projection_query(4, set(), {0}, {1, 2, 3}, [1, 0, 0, 0], "1/2", {0}, lam=0)


def test_projection_exact_probability():
    assert projection_exact_probability(4, 2, _query()) == Fraction(1, 2)


def test_projection_event(circ52):
    q = projection_query(5, set(), {0}, {1, 2, 3, 4}, [1, 0, 0, 0, 0], "1/2", {2})
    assert q.lam == 0
    assert projection_event(circ52, q)  # row 2 avoids column 0
    q0 = projection_query(5, set(), {0}, {1, 2, 3, 4}, [1, 0, 0, 0, 0], "1/2", {0})
    assert not projection_event(circ52, q0)


def test_projection_estimate_is_close_to_exact():
    est = projection_anticoncentration(4, 2, _query(), samples=2000, seed=1)
    assert abs(est.frequency - 0.5) < 0.06
    assert est.interval.contains(est.frequency)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(i_set={0}, j_set={0}, j_lambda={1, 2, 3}),          # I meets J
        dict(i_set=set(), j_set={0}, j_lambda={1, 2}),          # no cover
        dict(i_set=set(), j_set={0}, j_lambda={1, 2, 3}, a="1"),  # y_0 - lambda < 2a
    ],
)
def test_projection_query_rejects_bad_hypotheses(kwargs):
    args = dict(n=4, y=[1, 0, 0, 0], a="1/2", s_set={0}, lam=0)
    args.update(kwargs)
    with pytest.raises(InputError):
        projection_query(**args)


def test_projection_below_direction():
    q = projection_query(4, set(), {0}, {1, 2, 3}, [-1, 0, 0, 0], "1/2", {0}, direction="below")
    assert projection_exact_probability(4, 2, q) == Fraction(1, 2)
