"""Littlewood-Offord toolkit: subset-sum atoms, sign sums, permutations, shuffle class."""
from __future__ import annotations

import itertools
import math
from collections import Counter
from fractions import Fraction

import pytest
from hypothesis import assume, given, settings, strategies as st

from core.errors import CapExceededError, InputError
from core.graph import circulant
from core.lo_kit import (
    atom_bound_holds,
    atom_law,
    atom_probability,
    atom_probability_mc,
    atom_probability_naive,
    atom_query,
    canonical_vector,
    count_subsets_with_sum,
    erdos_lo_max_atom,
    max_atom,
    mismatch_threshold_probability,
    orthocomplement_basis,
    pair_mismatch_distribution,
    permutation_pair_estimate,
    separating_split,
    separating_split_on,
    shuffle_class_experiment,
    shuffle_class_members,
    sum_law,
)
from core.rank import ac_check, mat_vec
from core.rng import make_rng
from core.sampler import ChainConfig, sample_graph
from core.stats import chi_square_expected


# ---------------------------------------------------------
# Subset-sum counting
# ---------------------------------------------------------
def test_count_subsets_with_sum():
    assert count_subsets_with_sum([1, 2, 3, 4], 2, 5) == 2
    assert count_subsets_with_sum([1, 2, 3, 4], 5, 5) == 0
    assert count_subsets_with_sum([], 0, 0) == 1


@settings(max_examples=150, deadline=None)
@given(
    values=st.lists(st.integers(-6, 6), max_size=10),
    data=st.data(),
)
def test_count_subsets_matches_brute_force(values, data):
    size = data.draw(st.integers(0, len(values)))
    target = data.draw(st.integers(-15, 15))
    brute = sum(1 for c in itertools.combinations(values, size) if sum(c) == target)
    assert count_subsets_with_sum(values, size, target) == brute


def test_huge_values_take_the_exact_python_path():
    big = 2**70
    assert count_subsets_with_sum([big, big, 1, 2], 2, big + 1) == 2


def test_sum_law():
    assert sum_law([1, 1, 0, 0], 2) == Counter({1: 4, 2: 1, 0: 1})


# ---------------------------------------------------------
# Atoms
# ---------------------------------------------------------
def test_canonical_atom():
    q = atom_query(canonical_vector(1, 2), 1, 0)
    assert q.d == 2
    assert atom_probability(q) == Fraction(1, 2)
    assert max_atom(canonical_vector(1, 2)) == (Fraction(1, 2), Fraction(0))


@settings(max_examples=60, deadline=None)
@given(
    v=st.integers(1, 4).flatmap(lambda d: st.lists(st.integers(-3, 3), min_size=2 * d, max_size=2 * d)),
    a=st.integers(-6, 6),
)
def test_atom_probability_matches_naive(v, a):
    classes = Counter(v)
    k = min(classes.values())
    assume(k <= len(v) // 2)
    q = atom_query(v, k, a)
    assert atom_probability(q) == atom_probability_naive(q)


def test_atom_law_sums_to_one_with_rational_entries():
    law = atom_law([Fraction(1, 2), Fraction(1, 3), 0, 1])
    assert sum(law.values()) == 1
    assert law[Fraction(5, 6)] == Fraction(1, 6)


@pytest.mark.parametrize("d", range(1, 7))
def test_atom_bound_holds_for_canonical_vectors(d):
    for k in range(1, d + 1):
        prob, _ = max_atom(canonical_vector(k, d))
        assert atom_bound_holds(prob, k)


@pytest.mark.parametrize(
    "v, k",
    [
        ((1, 1, 1, 1), 1),   # one class of size 4
        ((1, 0, 0, 0), 3),   # k above d
        ((1, 0, 0), 1),      # odd length
    ],
)
def test_atom_query_rejects(v, k):
    with pytest.raises(InputError):
        atom_query(v, k, 0)


def test_exact_atom_refused_above_cap():
    q = atom_query(canonical_vector(1, 17), 1, 0)
    with pytest.raises(CapExceededError) as exc:
        atom_probability(q)
    assert exc.value.estimated_cost == math.comb(34, 17)
    est = atom_probability_mc(q, 4000, rng=1)
    # exact value is 1/2
    assert abs(est.frequency - 0.5) < 0.05
    assert est.interval.contains(est.frequency)


# ---------------------------------------------------------
# Sign sums
# ---------------------------------------------------------
@pytest.mark.parametrize("m", range(1, 13))
def test_erdos_all_ones(m):
    assert erdos_lo_max_atom([1] * m) == Fraction(math.comb(m, m // 2), 2**m)


def test_erdos_custom_values_and_errors():
    assert erdos_lo_max_atom([1, 1], values=[(0, 1), (0, 1)]) == Fraction(1, 2)
    with pytest.raises(InputError):
        erdos_lo_max_atom([0, 0])
    with pytest.raises(CapExceededError):
        erdos_lo_max_atom([1] * 25)
    with pytest.raises(InputError):
        erdos_lo_max_atom([1, 1], values=[(0, 1)])


# ---------------------------------------------------------
# Pair mismatches
# ---------------------------------------------------------
@pytest.mark.parametrize("d", range(1, 7))
def test_pair_mismatch_distribution_sums_to_one(d):
    for k in range(1, 2 * d + 1):
        law = pair_mismatch_distribution(k, d)
        assert sum(law.values()) == 1
        assert all(e % 2 == k % 2 for e in law)


def test_pair_mismatch_small_case():
    assert pair_mismatch_distribution(1, 1) == {1: Fraction(1)}
    # both ones land in one pair with probability d / C(2d, 2)
    assert pair_mismatch_distribution(2, 3)[0] == Fraction(3, 15)


def test_permutation_estimate_follows_exact_law():
    est = permutation_pair_estimate(2, 3, 20_000, rng=5)
    law = pair_mismatch_distribution(2, 3)
    assert set(est.mismatch_counts) <= set(law)
    states = sorted(law)
    res = chi_square_expected([est.mismatch_counts.get(e, 0) for e in states], [float(law[e]) for e in states])
    assert res.passes(0.001)
    assert est.exact == mismatch_threshold_probability(2, 3)
    assert est.interval.contains(est.frequency)


def test_permutation_estimate_rejects_k_above_d():
    with pytest.raises(InputError):
        permutation_pair_estimate(4, 3, 10)


# ---------------------------------------------------------
# Separating splits
# ---------------------------------------------------------
def test_separating_split():
    assert separating_split([1, 1, 2, 2, 3, 3], "1/3") == (0, 1)
    with pytest.raises(InputError):
        separating_split([1, 1, 1, 1, 1, 2], "1/3")
    with pytest.raises(InputError):
        separating_split([1, 2, 3], "1/2")


@settings(max_examples=100, deadline=None)
@given(x=st.lists(st.integers(0, 3), min_size=3, max_size=12))
def test_separating_split_exists_off_almost_constant(x):
    assume(any(x))
    assume(not ac_check(x, Fraction(1, 3)).is_almost_constant)
    n = len(x)
    split = separating_split(x, Fraction(1, 3))
    assert math.ceil(n / 3) <= len(split) <= math.floor(2 * n / 3)
    inside = {x[i] for i in split}
    outside = {x[i] for i in range(n) if i not in split}
    assert not inside & outside


def test_separating_split_on_subset():
    assert separating_split_on([1, 1, 2, 2, 3], {0, 1, 2, 3}, 2) == (0, 1)
    with pytest.raises(InputError):
        separating_split_on([1, 1, 1, 1], {0, 1, 2, 3}, 1)


# ---------------------------------------------------------
# Shuffle class
# ---------------------------------------------------------
def test_shuffle_class_on_circulant(circ52):
    assert orthocomplement_basis(circ52, 0, 1) == [(1, 0, -1, 1, -1)]
    rep = shuffle_class_experiment(circ52, q=2, epsilon="1/2")
    assert rep.outcome == "ok"
    assert rep.v == (1, 0, -1, 1, -1)
    assert (rep.m2, rep.s_size, rep.class_size) == (1, 2, 2)
    assert rep.zero_count == 0
    assert rep.zero_fraction == 0
    assert rep.bound is None
    assert rep.split == (0,)


def test_shuffle_class_outcomes(circ52):
    assert shuffle_class_experiment(circ52, q=3, epsilon="1/2").outcome == "not_witnessed"
    with pytest.raises(InputError):
        shuffle_class_experiment(circ52)
    auto = shuffle_class_experiment(circ52, strict=False)
    assert auto.outcome == "outside_omega2"
    assert auto.q == 1 and auto.epsilon == Fraction(1, 8)
    with pytest.raises(InputError):
        shuffle_class_experiment(circ52, q=0)
    with pytest.raises(InputError):
        shuffle_class_experiment(circ52, rows=(1, 1))


def test_shuffle_class_members_of_circulant(circ52):
    members = sorted(shuffle_class_members(circ52))
    assert members == [((0, 1), (1, 2)), ((1, 2), (0, 1))]


@pytest.mark.parametrize("seed", [1, 2])
def test_shuffle_zero_count_matches_class_enumeration(seed):
    g, _ = sample_graph(30, 6, ChainConfig(), make_rng(seed))
    rep = shuffle_class_experiment(g, q=2, epsilon="1/2", rng=seed)
    assert rep.outcome in ("ok", "not_witnessed")
    if rep.outcome != "ok":
        return
    m = g.to_matrix().tolist()
    for k in range(2, g.n):
        assert mat_vec([m[k]], rep.v) == [0]
    assert mat_vec([[a + b for a, b in zip(m[0], m[1])]], rep.v) == [0]

    members = list(shuffle_class_members(g))
    assert len(members) == rep.class_size
    zero = sum(1 for r1, _ in members if sum(rep.v[t] for t in r1) == 0)
    assert zero == rep.zero_count
