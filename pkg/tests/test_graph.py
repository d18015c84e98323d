"""Graph model: construction checks, neighbourhoods, switchings, text format."""
from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from core.errors import GraphError, InputError
from core.graph import (
    Digraph,
    SwitchingMove,
    apply_switching,
    circulant,
    co_in,
    co_out,
    complement,
    delta_vector,
    edge_list_between,
    edges_between,
    format_graph,
    has_zero_block,
    in_dco,
    max_co_out,
    n_in,
    n_out,
    parse_graph,
    switch_rejection,
    transpose,
)


# ---------------------------------------------------------
# Construction
# ---------------------------------------------------------
def test_in_adjacency_is_derived(circ52):
    assert circ52.in_adj[0] == (0, 4)
    assert circ52.in_adj[3] == (2, 3)
    assert all(len(col) == 2 for col in circ52.in_adj)


@pytest.mark.parametrize(
    "rows",
    [
        [[0, 0], [1, 2], [1, 2]],   # repeated vertex in a row
        [[0, 1], [0, 1], [0, 1]],   # column 0 has in-degree 3
        [[0, 3], [1, 2], [0, 2]],   # vertex out of range
        [[0], [1, 2], [0]],         # ragged rows
    ],
)
def test_invalid_rows_rejected(rows):
    with pytest.raises(GraphError):
        Digraph.from_rows(rows)


def test_graph_error_is_an_input_error():
    with pytest.raises(InputError):
        Digraph(3, 4, ((0,), (1,), (2,)))


def test_from_matrix_roundtrip(circ52):
    m = circ52.to_matrix()
    assert m.sum(axis=0).tolist() == [2] * 5
    assert m.sum(axis=1).tolist() == [2] * 5
    assert Digraph.from_matrix(m) == circ52


def test_from_matrix_rejects_non_binary():
    with pytest.raises(GraphError):
        Digraph.from_matrix(np.array([[2, 0], [0, 2]]))


def test_from_edges_matches_rows(circ52):
    assert Digraph.from_edges(5, 2, circ52.edges()) == circ52


def test_equal_graphs_hash_alike():
    a = Digraph.from_rows([[1, 0], [2, 1], [0, 2]])
    b = circulant(3, 2)
    assert a == b
    assert hash(a) == hash(b)
    assert a.key() == b.key()


# ---------------------------------------------------------
# Neighbourhoods
# ---------------------------------------------------------
def test_neighbourhoods(circ52):
    assert n_in(circ52, {0}) == frozenset({0, 4})
    assert n_out(circ52, {0}) == frozenset({0, 1})
    assert n_out(circ52, {0, 1}) == frozenset({0, 1, 2})


def test_edges_between(circ52):
    assert edges_between(circ52, {0, 1}, {1}) == 2
    assert edge_list_between(circ52, {0, 1}, {1}) == [(0, 1), (1, 1)]
    assert has_zero_block(circ52, {0}, {2, 3, 4})
    assert not has_zero_block(circ52, {0}, {1})


def test_codegrees(circ52):
    assert co_out(circ52, 0, 1) == frozenset({1})
    assert co_in(circ52, 0, 1) == frozenset({0})
    assert max_co_out(circ52) == 1
    assert in_dco(circ52, "1/2")
    assert not in_dco(circ52, "1/4")


def test_codegree_needs_distinct_vertices(circ52):
    with pytest.raises(InputError):
        co_out(circ52, 2, 2)
    with pytest.raises(InputError):
        co_in(circ52, 0, 5)


def test_delta_vector(circ52):
    dv = delta_vector(circ52, {0})
    assert dv.support == [0, 4]
    assert dv.weight == 2
    assert dv.bits == (1, 0, 0, 0, 1)
    with pytest.raises(InputError):
        delta_vector(circ52, [])


# ---------------------------------------------------------
# Switchings
# ---------------------------------------------------------
def test_valid_switching_and_inverse(circ52):
    move = SwitchingMove(0, 0, 2, 2)
    res = apply_switching(circ52, move)
    assert res.ok and res.reason is None
    assert res.graph.out_adj[0] == (1, 2)
    assert res.graph.out_adj[2] == (0, 3)
    back = apply_switching(res.graph, move.inverse())
    assert back.ok
    assert back.graph == circ52


@pytest.mark.parametrize(
    "move, reason",
    [
        (SwitchingMove(0, 0, 0, 1), "same_row"),
        (SwitchingMove(0, 1, 1, 1), "same_column"),
        (SwitchingMove(0, 2, 1, 1), "missing_edge"),
        (SwitchingMove(0, 0, 1, 1), "multi_edge"),
    ],
)
def test_switching_rejections(circ52, move, reason):
    assert switch_rejection(circ52, move) == reason
    res = apply_switching(circ52, move)
    assert not res.ok
    assert res.reason == reason
    assert res.graph is circ52


def test_frozen_column_blocks_switching(circ52):
    move = SwitchingMove(0, 0, 2, 2)
    assert switch_rejection(circ52, move, frozenset({0})) == "frozen_column"


@settings(max_examples=60, deadline=None)
@given(
    n=st.integers(min_value=3, max_value=9),
    data=st.data(),
)
def test_switching_preserves_degrees(n, data):
    d = data.draw(st.integers(min_value=1, max_value=n - 1))
    offset = data.draw(st.integers(min_value=0, max_value=n - 1))
    g = circulant(n, d, offset)
    move = SwitchingMove(*(data.draw(st.integers(0, n - 1)) for _ in range(4)))
    res = apply_switching(g, move)
    m = res.graph.to_matrix()
    assert m.sum(axis=0).tolist() == [d] * n
    assert m.sum(axis=1).tolist() == [d] * n
    if res.ok:
        assert apply_switching(res.graph, move.inverse()).graph == g


# ---------------------------------------------------------
# Complement, transpose, text format
# ---------------------------------------------------------
def test_complement_and_transpose(circ52):
    c = complement(circ52)
    assert c.d == 3
    assert (c.to_matrix() + circ52.to_matrix() == 1).all()
    assert complement(c) == circ52
    assert (transpose(circ52).to_matrix() == circ52.to_matrix().T).all()
    with pytest.raises(InputError):
        complement(circulant(4, 4))


def test_format_graph(circ52):
    assert format_graph(circ52) == "5 2\n0 1\n1 2\n2 3\n3 4\n0 4\n"
    assert parse_graph(format_graph(circ52)) == circ52


@pytest.mark.parametrize(
    "text",
    [
        "",
        "3\n0\n1\n2\n",
        "3 1\n0\n1\n",
        "3 1\n0\nx\n2\n",
        "2 2\n1 0\n0 1\n",
    ],
)
def test_parse_graph_rejects(text):
    with pytest.raises(GraphError):
        parse_graph(text)
