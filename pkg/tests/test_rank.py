"""Rank engine: modular and exact rank, kernels, certificates, eAC classes."""
from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from core.errors import InputError
from core.graph import Digraph, circulant, complement
from core.rank import (
    CERTIFIED_FALSE,
    CERTIFIED_TRUE,
    HEURISTIC_TRUE,
    WITNESS_EXACT,
    WITNESS_KERNEL,
    WITNESS_MOD_P,
    RankCertificate,
    ac_check,
    canonical_integer,
    eac_event,
    exact_rank,
    is_singular,
    kernel_basis,
    left_kernel_basis,
    mat_vec,
    random_primes,
    rank_mod_p,
    verify_certificate,
)
from core.rng import make_rng
from core.sampler import ChainConfig, enumerate_all, sample_graph

TWO_KERNELS = Digraph.from_rows([[0, 1], [0, 1], [2, 3], [3, 4], [4, 5], [2, 5]])

small_matrices = st.integers(min_value=1, max_value=6).flatmap(
    lambda n: st.lists(
        st.lists(st.integers(min_value=-3, max_value=3), min_size=n, max_size=n),
        min_size=n,
        max_size=n,
    )
)


# ---------------------------------------------------------
# Rank
# ---------------------------------------------------------
def test_exact_rank_of_circulants(circ52, singular42):
    assert exact_rank(circulant(4, 2)) == 3
    assert exact_rank(circ52) == 5
    assert exact_rank(singular42) == 2
    assert exact_rank(circulant(4, 4)) == 1


def test_rank_mod_p_detects_small_prime_collapse():
    m = [[1, 1], [1, 3]]  # det 2
    assert rank_mod_p(m, 2) == 1
    assert rank_mod_p(m, 3) == 2
    assert exact_rank(m) == 2


def test_rank_mod_p_rejects_bad_moduli():
    with pytest.raises(InputError):
        rank_mod_p([[1]], 9)
    with pytest.raises(InputError):
        rank_mod_p([[1]], 2**31 + 11)


@settings(max_examples=80, deadline=None)
@given(m=small_matrices)
def test_modular_rank_never_exceeds_exact_rank(m):
    r = exact_rank(m)
    assert rank_mod_p(m, 2_147_483_647) <= r
    assert rank_mod_p(m, 5) <= r
    assert r == int(np.linalg.matrix_rank(np.array(m, dtype=float)))


def test_random_primes_are_distinct_primes_in_range():
    primes = random_primes(make_rng(3), 4, low=1000, high=2000)
    assert len(set(primes)) == 4
    assert all(1000 <= p < 2000 for p in primes)


# ---------------------------------------------------------
# Kernels
# ---------------------------------------------------------
def test_kernel_of_circulant():
    g = circulant(4, 2)
    assert kernel_basis(g) == [(1, -1, 1, -1)]
    assert left_kernel_basis(g) == [(1, -1, 1, -1)]


def test_kernel_vectors_are_null_and_canonical(singular42):
    basis = kernel_basis(singular42)
    assert len(basis) == 2
    rows = singular42.to_matrix().tolist()
    for v in basis:
        assert not any(mat_vec(rows, v))
        assert next(x for x in v if x) > 0


def test_canonical_integer():
    assert canonical_integer([Fraction(-1, 2), Fraction(1, 3), 0]) == (3, -2, 0)
    with pytest.raises(InputError):
        canonical_integer([0, 0])


# ---------------------------------------------------------
# Singularity certificates
# ---------------------------------------------------------
def test_nonsingular_certificate(circ52):
    cert = is_singular(circ52, rng=1)
    assert not cert.singular
    assert cert.witness_kind == WITNESS_MOD_P
    assert verify_certificate(circ52, cert)


def test_singular_certificate_carries_both_null_vectors():
    g = circulant(4, 2)
    cert = is_singular(g, rng=1)
    assert cert.singular and cert.rank == 3
    assert cert.witness_kind == WITNESS_KERNEL
    assert cert.null_right == (1, -1, 1, -1)
    assert cert.null_left == (1, -1, 1, -1)
    assert verify_certificate(g, cert)


def test_unlucky_primes_fall_back_to_exact_elimination():
    m = [[1, 1], [1, 3]]
    cert = is_singular(m, primes=[2])
    assert not cert.singular
    assert cert.witness_kind == WITNESS_EXACT
    assert verify_certificate(m, cert)


def test_certificate_survives_json(singular42):
    cert = is_singular(singular42, rng=4)
    raw = cert.to_dict()
    assert all(isinstance(v, str) for v in raw["null_right"])
    back = RankCertificate.from_dict(raw)
    assert back == cert
    assert verify_certificate(singular42, back)
    assert RankCertificate.from_dict({"certificate": raw, "eac": {}}) == cert
    for broken in ({"n": 4}, {**raw, "rank": "x"}, ["not", "a", "dict"]):
        with pytest.raises(InputError):
            RankCertificate.from_dict(broken)


def test_tampered_certificates_fail(circ52, singular42):
    cert = is_singular(singular42, rng=4)
    bad = RankCertificate(**{**cert.__dict__, "null_right": (1, 0, 0, 0)})
    assert not verify_certificate(singular42, bad)
    good = is_singular(circ52, rng=2)
    assert not verify_certificate(singular42, good)


def test_is_singular_requires_square():
    with pytest.raises(InputError):
        is_singular([[1, 0, 1]])


@pytest.mark.parametrize("n, d", [(4, 2), (5, 2), (4, 3)])
def test_singular_verdicts_agree_with_exact_rank(n, d):
    for g in enumerate_all(n, d):
        cert = is_singular(g, rng=0)
        assert cert.singular == (exact_rank(g) < n)


def test_sampled_graph_certificate_verifies():
    g, _ = sample_graph(30, 3, ChainConfig(), make_rng(8))
    cert = is_singular(g, rng=8)
    assert verify_certificate(g, cert)


# ---------------------------------------------------------
# Almost-constant vectors
# ---------------------------------------------------------
def test_ac_check():
    rep = ac_check([1, 1, 1, 2], Fraction(1, 3))
    assert rep.is_almost_constant and rep.lam == 1 and rep.match_count == 3
    assert not ac_check([1, 2, 3, 4], Fraction(1, 3)).is_almost_constant
    with pytest.raises(InputError):
        ac_check([0, 0, 0], Fraction(1, 3))
    with pytest.raises(InputError):
        ac_check([1, 1], Fraction(1, 2))


@settings(max_examples=200, deadline=None)
@given(
    x=st.lists(st.integers(min_value=-3, max_value=3), min_size=1, max_size=9).filter(any),
    c=st.integers(min_value=-5, max_value=5).filter(bool),
    p=st.sampled_from([Fraction(1, 10), Fraction(1, 4), Fraction(1, 3), Fraction(9, 20)]),
)
def test_ac_check_is_scale_invariant(x, c, p):
    base = ac_check(x, p)
    scaled = ac_check([c * v for v in x], p)
    assert scaled.is_almost_constant == base.is_almost_constant
    assert scaled.match_count == base.match_count
    if base.is_almost_constant:
        assert scaled.lam == c * base.lam


@settings(max_examples=40, deadline=None)
@given(d=st.sampled_from([2, 3]), seed=st.integers(min_value=0, max_value=10_000))
def test_singularity_is_complement_invariant_on_samples(d, seed):
    g, _ = sample_graph(8, d, ChainConfig(), make_rng(seed))
    assert is_singular(g, rng=seed).singular == is_singular(complement(g), rng=seed).singular


@pytest.mark.parametrize("n, d", [(4, 1), (4, 2), (5, 2), (5, 3)])
def test_complement_audit_over_all_graphs(n, d):
    for g in enumerate_all(n, d):
        assert (exact_rank(g) < n) == (exact_rank(complement(g)) < n)


def test_eac_classes(singular42, circ52):
    assert eac_event(singular42, "1/3", rng=0).status == HEURISTIC_TRUE
    assert eac_event(circulant(4, 2), "1/3", rng=0).status == CERTIFIED_TRUE
    full = eac_event(circ52, "1/3", rng=0)
    assert full.status == CERTIFIED_TRUE
    assert (full.right_dim, full.left_dim) == (0, 0)


def test_eac_finds_almost_constant_null_vector():
    res = eac_event(TWO_KERNELS, "1/3", rng=0)
    assert res.status == CERTIFIED_FALSE
    assert not res.holds
    assert res.witness_side == "right"
    assert res.witness == (1, -1, 0, 0, 0, 0)
    assert not any(mat_vec(TWO_KERNELS.to_matrix().tolist(), res.witness))


def test_eac_rejects_bad_level(circ52):
    with pytest.raises(InputError):
        eac_event(circ52, "1/2")
