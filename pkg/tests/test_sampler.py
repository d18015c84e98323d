"""Samplers: uniformity against the enumeration oracle, determinism, frozen columns."""
from __future__ import annotations

import math
from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from core.errors import CapExceededError, ConfigError, InfeasibleError, InputError, SamplerBudgetError
from core.graph import circulant
from core.rank import exact_rank, is_singular
from core.rng import make_rng
from core.sampler import (
    ChainConfig,
    FrozenColumnSet,
    SampleUnit,
    SwitchChain,
    check_feasible,
    choose_method,
    complete_frozen,
    count_all,
    draw_unit,
    enumerate_all,
    enumerate_conditional,
    sample_conditional,
    sample_configuration,
    sample_graph,
    sample_many,
    sampling_plan,
    stream_switch_chain,
)
from core.stats import binomial_sigma, chi_square_expected, chi_square_uniform

ALPHA = 0.001


def _assert_uniform(graphs, states):
    counts = Counter(g.key() for g in graphs)
    result = chi_square_uniform(counts, [g.key() for g in states])
    assert result.passes(ALPHA), result


# ---------------------------------------------------------
# Enumeration oracles
# ---------------------------------------------------------
@pytest.mark.parametrize("n, d, expected", [(3, 2, 6), (4, 2, 90), (5, 2, 2040), (6, 2, 67950)])
def test_count_all_known_values(n, d, expected):
    assert count_all(n, d) == expected


@pytest.mark.parametrize("n", range(1, 7))
def test_permutation_matrices(n):
    assert count_all(n, 1) == math.factorial(n)


@pytest.mark.parametrize("n", range(2, 6))
def test_count_is_symmetric_under_complement(n):
    for d in range(1, n):
        assert count_all(n, d) == count_all(n, n - d)


@pytest.mark.parametrize("n, d", [(3, 1), (4, 2), (4, 3), (5, 2)])
def test_enumeration_matches_count(n, d):
    graphs = list(enumerate_all(n, d))
    assert len(graphs) == count_all(n, d)
    assert len({g.key() for g in graphs}) == len(graphs)


def test_enumeration_refused_above_cap():
    with pytest.raises(CapExceededError) as exc:
        list(enumerate_all(7, 2, cap=6))
    assert exc.value.estimated_cost == count_all(7, 2)


def test_count_rejects_bad_degree():
    with pytest.raises(InputError):
        count_all(3, 4)


# ---------------------------------------------------------
# Uniformity
# ---------------------------------------------------------
def test_configuration_model_is_uniform():
    states = list(enumerate_all(4, 2))
    rng = make_rng(7)
    graphs = [sample_configuration(4, 2, rng) for _ in range(100 * len(states))]
    _assert_uniform(graphs, states)


def test_switch_chain_is_uniform():
    states = list(enumerate_all(4, 2))
    cfg = ChainConfig(method="switch", burn_in_steps=1000)
    graphs = list(sample_many(4, 2, 50 * len(states), cfg, seed=11))
    _assert_uniform(graphs, states)


def test_conditional_chain_is_uniform_on_the_conditional_class():
    frozen = FrozenColumnSet(4, 2, {0: frozenset({0, 1})})
    states = list(enumerate_conditional(4, 2, frozen))
    assert len(states) == 15
    cfg = ChainConfig(burn_in_steps=1000)
    graphs = list(sample_many(4, 2, 100 * len(states), cfg, seed=5, frozen=frozen))
    assert all(frozen.matches(g) for g in graphs)
    _assert_uniform(graphs, states)


def test_configuration_and_switch_agree_at_five_two():
    # rank classes n, n-1 and <= n-2 of all 2040 graphs give the target law
    def bucket(g):
        return min(5 - exact_rank(g), 2)

    law = Counter(bucket(g) for g in enumerate_all(5, 2))
    probs = [law[b] / 2040 for b in range(3)]
    for method, seed in (("configuration", 3), ("switch", 4)):
        cfg = ChainConfig(method=method, burn_in_steps=600)
        observed = Counter(bucket(g) for g in sample_many(5, 2, 3000, cfg, seed=seed))
        result = chi_square_expected([observed[b] for b in range(3)], probs)
        assert result.passes(ALPHA), (method, result)


@pytest.mark.parametrize("n, d", [(4, 2), (5, 2)])
@pytest.mark.parametrize("method", ["configuration", "switch"])
def test_singular_fraction_matches_enumeration(n, d, method):
    graphs = list(enumerate_all(n, d))
    p = sum(1 for g in graphs if exact_rank(g) < n) / len(graphs)
    samples = 4000
    cfg = ChainConfig(method=method, burn_in_steps=600)
    hits = sum(1 for g in sample_many(n, d, samples, cfg, seed=17) if is_singular(g).singular)
    sigma = binomial_sigma(p, samples)
    assert abs(hits / samples - p) <= 3 * sigma


def test_switch_chain_counts_steps():
    chain = SwitchChain(circulant(6, 2), make_rng(1))
    accepted = chain.run(500)
    assert chain.steps == 500
    assert 0 < accepted <= 500
    g = chain.snapshot()
    assert g.n == 6 and g.d == 2


# ---------------------------------------------------------
# Method selection and determinism
# ---------------------------------------------------------
@pytest.mark.parametrize(
    "n, d, method",
    [(5, 5, "complete"), (20, 2, "configuration"), (20, 18, "configuration_complement"), (100, 10, "switch")],
)
def test_choose_method(n, d, method):
    assert choose_method(n, d) == method


def test_choose_method_honours_request_and_rejects_unknown():
    assert choose_method(20, 2, "switch") == "switch"
    with pytest.raises(ConfigError):
        choose_method(20, 2, "bogus")
    with pytest.raises(ConfigError):
        ChainConfig(method="bogus")


def test_complement_method_gives_requested_degree():
    g, method = sample_graph(9, 7, ChainConfig(), make_rng(3))
    assert method == "configuration_complement"
    assert g.d == 7
    assert all(len(c) == 7 for c in g.in_adj)


def test_configuration_budget_exhausted():
    with pytest.raises(SamplerBudgetError):
        sample_configuration(6, 6, make_rng(0), retry_budget=5)


@pytest.mark.parametrize("method", ["auto", "switch"])
def test_sample_many_is_deterministic(method):
    cfg = ChainConfig(method=method, thinning=30)
    a = list(sample_many(10, 3, 6, cfg, seed=42))
    b = list(sample_many(10, 3, 6, cfg, seed=42))
    c = list(sample_many(10, 3, 6, cfg, seed=43))
    assert a == b
    assert a != c


def test_sampling_plan_independent_units():
    plan = sampling_plan(10, 3, 5, ChainConfig())
    assert plan == [SampleUnit(k) for k in range(5)]
    assert sampling_plan(10, 3, 5, ChainConfig(method="switch")) == plan


def test_frozen_samples_are_independent_per_index():
    frozen = FrozenColumnSet.from_graph(circulant(8, 2), [7])
    cfg = ChainConfig()
    first = list(draw_unit(8, 2, SampleUnit(2), cfg, 9, frozen=frozen))
    assert first == [sample_conditional(8, 2, frozen, cfg, make_rng(9, 2))]
    with pytest.raises(InputError):
        sampling_plan(9, 2, 3, cfg, frozen=frozen)


def test_units_reassemble_sample_many():
    cfg = ChainConfig(method="switch", burn_in_steps=200)
    plan = sampling_plan(8, 3, 7, cfg)
    pieces = [g for unit in reversed(plan) for g in draw_unit(8, 3, unit, cfg, 9)]
    ordered = [g for unit in plan for g in draw_unit(8, 3, unit, cfg, 9)]
    assert ordered == list(sample_many(8, 3, 7, cfg, 9))
    assert pieces == ordered[::-1]


def test_stream_is_thinned_from_one_chain():
    cfg = ChainConfig(thinning=5)
    states = list(stream_switch_chain(8, 3, cfg, make_rng(1), 4))
    assert len(states) == 4
    assert all(g.n == 8 and g.d == 3 for g in states)


def test_chain_config_dict_roundtrip():
    cfg = ChainConfig(burn_in_steps=50, thinning=7, seed=2**40, method="switch")
    assert ChainConfig.from_dict(cfg.to_dict()) == cfg
    assert cfg.burn_in(5, 2) >= 50
    assert ChainConfig().thinning_for(5, 2) == 10


# ---------------------------------------------------------
# Frozen columns
# ---------------------------------------------------------
def test_infeasible_frozen_set():
    frozen = FrozenColumnSet(3, 2, {0: frozenset({0, 1}), 1: frozenset({0, 1})})
    assert not check_feasible(frozen)
    with pytest.raises(InfeasibleError):
        sample_conditional(3, 2, frozen, ChainConfig(), make_rng(0))


def test_overloaded_row_is_infeasible_at_construction():
    with pytest.raises(InfeasibleError):
        FrozenColumnSet(3, 1, {0: frozenset({0}), 1: frozenset({0})})


def test_frozen_set_validation():
    with pytest.raises(InputError):
        FrozenColumnSet(4, 2, {0: frozenset({0})})
    with pytest.raises(InputError):
        FrozenColumnSet(4, 2, {4: frozenset({0, 1})})


def test_frozen_set_dict_roundtrip():
    frozen = FrozenColumnSet.from_graph(circulant(6, 2), [4, 5])
    assert FrozenColumnSet.from_dict(frozen.to_dict()) == frozen


@settings(max_examples=30, deadline=None)
@given(
    n=st.integers(min_value=4, max_value=9),
    data=st.data(),
)
def test_completion_and_conditional_sample_keep_frozen_columns(n, data):
    d = data.draw(st.integers(min_value=1, max_value=n - 1))
    source, _ = sample_graph(n, d, ChainConfig(), make_rng(data.draw(st.integers(0, 1000))))
    cols = data.draw(st.lists(st.integers(0, n - 1), min_size=1, max_size=n - 1, unique=True))
    frozen = FrozenColumnSet.from_graph(source, cols)
    assert frozen.matches(complete_frozen(frozen))
    g = sample_conditional(n, d, frozen, ChainConfig(burn_in_factor=1), make_rng(1))
    assert frozen.matches(g)
