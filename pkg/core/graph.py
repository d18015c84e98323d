"""
graph.py

Immutable d-regular digraphs (equivalently 0/1 matrices with every row and
column sum equal to d) and their neighbourhood, edge-count, co-degree and
switching primitives.

Conventions:
- Vertices are 0..n-1. Loops and anti-parallel edges are allowed, multiple
  edges are not.
- Row i of the adjacency matrix is the out-neighbourhood of i; column j is
  the in-neighbourhood of j.
- Every graph carries sorted neighbour lists AND one Python-int bit row per
  vertex (bit k of out_bits[i] set iff i -> k). Bit rows are the canonical
  form for intersections, unions and popcounts.

Text format (one file per graph):
    line 1      "n d"
    line i + 2  sorted out-neighbours of vertex i, space separated
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from core.errors import GraphError, InputError


# -------------------------------------------------------------
# Bit helpers
# -------------------------------------------------------------
def mask_of(vertices: Iterable[int]) -> int:
    m = 0
    for v in vertices:
        m |= 1 << v
    return m


def members(mask: int) -> List[int]:
    """Indices of set bits, ascending."""
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def _check_vertices(n: int, vertices: Iterable[int], what: str = "vertex") -> List[int]:
    vs = [int(v) for v in vertices]
    for v in vs:
        if not 0 <= v < n:
            raise InputError(f"{what} index {v} out of range [0, {n})")
    return vs


# -------------------------------------------------------------
# Data structures
# -------------------------------------------------------------
@dataclass(frozen=True)
class Digraph:
    """A d-regular digraph on n labelled vertices.

    Build with Digraph(n, d, out_adj) or one of the from_* helpers; the
    constructor validates every invariant and derives in_adj and bit rows.
    """

    n: int
    d: int
    out_adj: Tuple[Tuple[int, ...], ...]
    in_adj: Tuple[Tuple[int, ...], ...] = field(init=False, compare=False, repr=False)
    out_bits: Tuple[int, ...] = field(init=False, compare=False, repr=False)
    in_bits: Tuple[int, ...] = field(init=False, compare=False, repr=False)

    def __post_init__(self) -> None:
        n, d = int(self.n), int(self.d)
        if n < 1:
            raise GraphError(f"n must be positive, got {n}")
        if not 1 <= d <= n:
            raise GraphError(f"d must satisfy 1 <= d <= n, got d={d}, n={n}")
        if len(self.out_adj) != n:
            raise GraphError(f"expected {n} out-neighbour lists, got {len(self.out_adj)}")

        rows: List[Tuple[int, ...]] = []
        in_lists: List[List[int]] = [[] for _ in range(n)]
        for i, row in enumerate(self.out_adj):
            srow = tuple(sorted(int(v) for v in row))
            if len(srow) != d or len(set(srow)) != d:
                raise GraphError(f"row {i} must hold exactly {d} distinct vertices, got {list(row)}")
            if srow[0] < 0 or srow[-1] >= n:
                raise GraphError(f"row {i} has a vertex outside [0, {n})")
            rows.append(srow)
            for j in srow:
                in_lists[j].append(i)
        for j, col in enumerate(in_lists):
            if len(col) != d:
                raise GraphError(f"column {j} has in-degree {len(col)}, expected {d}")

        object.__setattr__(self, "n", n)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "out_adj", tuple(rows))
        object.__setattr__(self, "in_adj", tuple(tuple(c) for c in in_lists))
        object.__setattr__(self, "out_bits", tuple(mask_of(r) for r in rows))
        object.__setattr__(self, "in_bits", tuple(mask_of(c) for c in in_lists))

    # ---------------------
    # Constructors
    # ---------------------
    @classmethod
    def from_rows(cls, rows: Sequence[Iterable[int]], d: Optional[int] = None) -> "Digraph":
        rows = [tuple(r) for r in rows]
        if not rows:
            raise GraphError("a digraph needs at least one vertex")
        return cls(len(rows), len(rows[0]) if d is None else d, tuple(rows))

    @classmethod
    def from_matrix(cls, m) -> "Digraph":
        arr = np.asarray(m)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise GraphError(f"adjacency matrix must be square, got shape {arr.shape}")
        if not np.isin(arr, (0, 1)).all():
            raise GraphError("adjacency matrix must be 0/1")
        rows = [tuple(int(j) for j in np.flatnonzero(arr[i])) for i in range(arr.shape[0])]
        return cls.from_rows(rows)

    @classmethod
    def from_edges(cls, n: int, d: int, edges: Iterable[Tuple[int, int]]) -> "Digraph":
        rows: List[List[int]] = [[] for _ in range(n)]
        for i, j in edges:
            rows[int(i)].append(int(j))
        return cls(n, d, tuple(tuple(r) for r in rows))

    # ---------------------
    # Views
    # ---------------------
    def to_matrix(self, dtype=np.int64) -> np.ndarray:
        m = np.zeros((self.n, self.n), dtype=dtype)
        for i, row in enumerate(self.out_adj):
            m[i, list(row)] = 1
        return m

    def edges(self) -> List[Tuple[int, int]]:
        return [(i, j) for i, row in enumerate(self.out_adj) for j in row]

    def has_edge(self, i: int, j: int) -> bool:
        return bool((self.out_bits[i] >> j) & 1)

    def key(self) -> Tuple[int, ...]:
        """Hashable canonical key (the bit rows)."""
        return self.out_bits

    def __hash__(self) -> int:
        return hash((self.n, self.d, self.out_bits))


@dataclass(frozen=True)
class SwitchingMove:
    """Replace edges (i1,j1), (i2,j2) by (i1,j2), (i2,j1)."""

    i1: int
    j1: int
    i2: int
    j2: int

    def inverse(self) -> "SwitchingMove":
        return SwitchingMove(self.i1, self.j2, self.i2, self.j1)


@dataclass(frozen=True)
class SwitchResult:
    graph: Digraph
    ok: bool
    reason: Optional[str] = None


@dataclass(frozen=True)
class DeltaVector:
    """0/1 indicator of the rows that meet the column set J."""

    bits: Tuple[int, ...]
    j_set: frozenset
    mask: int

    @property
    def support(self) -> List[int]:
        return members(self.mask)

    @property
    def weight(self) -> int:
        return self.mask.bit_count()


# -------------------------------------------------------------
# Neighbourhoods and edge counts
# -------------------------------------------------------------
def n_in_mask(g: Digraph, s: Iterable[int]) -> int:
    m = 0
    for i in _check_vertices(g.n, s):
        m |= g.in_bits[i]
    return m


def n_out_mask(g: Digraph, s: Iterable[int]) -> int:
    m = 0
    for i in _check_vertices(g.n, s):
        m |= g.out_bits[i]
    return m


def n_in(g: Digraph, s: Iterable[int]) -> frozenset:
    """Union of the in-neighbourhoods of s."""
    return frozenset(members(n_in_mask(g, s)))


def n_out(g: Digraph, s: Iterable[int]) -> frozenset:
    """Union of the out-neighbourhoods of s."""
    return frozenset(members(n_out_mask(g, s)))


def edges_between(g: Digraph, i_set: Iterable[int], j_set: Iterable[int]) -> int:
    """Number of edges leaving i_set and landing in j_set."""
    jm = mask_of(_check_vertices(g.n, j_set))
    return sum((g.out_bits[i] & jm).bit_count() for i in set(_check_vertices(g.n, i_set)))


def edge_list_between(g: Digraph, i_set: Iterable[int], j_set: Iterable[int]) -> List[Tuple[int, int]]:
    jm = mask_of(_check_vertices(g.n, j_set))
    return [
        (i, j)
        for i in sorted(set(_check_vertices(g.n, i_set)))
        for j in members(g.out_bits[i] & jm)
    ]


def has_zero_block(g: Digraph, i_set: Iterable[int], j_set: Iterable[int]) -> bool:
    """True iff no edge goes from i_set to j_set."""
    return edges_between(g, i_set, j_set) == 0


# -------------------------------------------------------------
# Co-degrees
# -------------------------------------------------------------
def co_out(g: Digraph, u: int, v: int) -> frozenset:
    """Common out-neighbours of u and v."""
    _check_vertices(g.n, (u, v))
    if u == v:
        raise InputError("co_out needs two distinct vertices")
    return frozenset(members(g.out_bits[u] & g.out_bits[v]))


def co_in(g: Digraph, u: int, v: int) -> frozenset:
    """Common in-neighbours of u and v."""
    _check_vertices(g.n, (u, v))
    if u == v:
        raise InputError("co_in needs two distinct vertices")
    return frozenset(members(g.in_bits[u] & g.in_bits[v]))


def max_co_out(g: Digraph) -> int:
    best = 0
    for u in range(g.n):
        bu = g.out_bits[u]
        for v in range(u + 1, g.n):
            c = (bu & g.out_bits[v]).bit_count()
            if c > best:
                best = c
    return best


def in_dco(g: Digraph, eps) -> bool:
    """True iff every pair u < v shares at most eps*d out-neighbours."""
    return max_co_out(g) <= Fraction(eps) * g.d


# -------------------------------------------------------------
# Delta vectors
# -------------------------------------------------------------
def delta_vector(g: Digraph, j_set: Iterable[int]) -> DeltaVector:
    js = frozenset(_check_vertices(g.n, j_set))
    if not js:
        raise InputError("delta_vector needs a nonempty column set J")
    mask = n_in_mask(g, js)
    bits = tuple((mask >> i) & 1 for i in range(g.n))
    return DeltaVector(bits=bits, j_set=js, mask=mask)


# -------------------------------------------------------------
# Switching and complement
# -------------------------------------------------------------
def switch_rejection(g: Digraph, m: SwitchingMove, frozen_columns: Optional[frozenset] = None) -> Optional[str]:
    """Reason code if the move is invalid for g, else None."""
    _check_vertices(g.n, (m.i1, m.j1, m.i2, m.j2))
    if m.i1 == m.i2:
        return "same_row"
    if m.j1 == m.j2:
        return "same_column"
    if frozen_columns and (m.j1 in frozen_columns or m.j2 in frozen_columns):
        return "frozen_column"
    if not g.has_edge(m.i1, m.j1) or not g.has_edge(m.i2, m.j2):
        return "missing_edge"
    if g.has_edge(m.i1, m.j2) or g.has_edge(m.i2, m.j1):
        return "multi_edge"
    return None


def apply_switching(g: Digraph, m: SwitchingMove, frozen_columns: Optional[frozenset] = None) -> SwitchResult:
    """Apply a simple switching; an invalid move returns g unchanged with a reason."""
    reason = switch_rejection(g, m, frozen_columns)
    if reason is not None:
        return SwitchResult(g, False, reason)
    rows = [list(r) for r in g.out_adj]
    rows[m.i1].remove(m.j1)
    rows[m.i1].append(m.j2)
    rows[m.i2].remove(m.j2)
    rows[m.i2].append(m.j1)
    return SwitchResult(Digraph(g.n, g.d, tuple(tuple(r) for r in rows)), True, None)


def complement(g: Digraph) -> Digraph:
    """The (n-d)-regular digraph with adjacency matrix J_n - M."""
    if g.d >= g.n:
        raise InputError("complement of the complete digraph has degree 0")
    full = (1 << g.n) - 1
    return Digraph(g.n, g.n - g.d, tuple(tuple(members(full ^ b)) for b in g.out_bits))


def circulant(n: int, d: int, offset: int = 0) -> Digraph:
    """out_adj[i] = {i+offset, ..., i+offset+d-1} mod n."""
    return Digraph(n, d, tuple(tuple((i + offset + t) % n for t in range(d)) for i in range(n)))


def transpose(g: Digraph) -> Digraph:
    return Digraph(g.n, g.d, g.in_adj)


# -------------------------------------------------------------
# Text format
# -------------------------------------------------------------
def format_graph(g: Digraph) -> str:
    lines = [f"{g.n} {g.d}"]
    lines.extend(" ".join(str(j) for j in row) for row in g.out_adj)
    return "\n".join(lines) + "\n"


def parse_graph(text: str) -> Digraph:
    lines = [ln.strip() for ln in text.strip().splitlines()]
    if not lines:
        raise GraphError("empty graph text")
    try:
        n, d = (int(t) for t in lines[0].split())
    except ValueError as e:
        raise GraphError(f"header must be 'n d', got {lines[0]!r}") from e
    body = lines[1:]
    if len(body) != n:
        raise GraphError(f"expected {n} neighbour lines, got {len(body)}")
    try:
        rows = tuple(tuple(int(t) for t in ln.split()) for ln in body)
    except ValueError as e:
        raise GraphError(f"non-integer vertex in graph text: {e}") from e
    for i, row in enumerate(rows):
        if list(row) != sorted(row):
            raise GraphError(f"line for vertex {i} is not sorted")
    return Digraph(n, d, rows)
