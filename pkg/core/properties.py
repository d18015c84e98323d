"""
properties.py

Structural events measured on sampled graphs.

Responsibilities:
- In-neighbourhood expansion (worst |N^in(S)|/(d|S|)) and the vertex
  isoperimetric number, from one subset sweep
- Zero minors (I, J with no I -> J edge): exact scan or greedy restarts
- Independence number: exact branch-and-bound on bitmasks, greedy above a cap
- Matrix-side events: Omega_eps (column unions), Omega2_eps (row-pair
  unions), row support density
- Monte Carlo anti-concentration of delta^J and of ||P_S M y||_inf < a

Every estimator takes a master seed; per-sample streams are derived from it
so serial and parallel runs agree.

This module MUST NOT:
- Decide matrix rank (see core.rank)
- Write files or print
"""
from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from core.errors import InputError
from core.graph import Digraph, delta_vector, mask_of, members
from core.logging import get_logger
from core.rng import SeedLike, as_rng
from core.sampler import (
    DEFAULT_ENUMERATE_CAP,
    DEFAULT_RETRY_BUDGET,
    ChainConfig,
    FrozenColumnSet,
    enumerate_all,
    sample_many,
)
from core.stats import Interval, collision_estimate, shape_exponent, wilson_interval

logger = get_logger("properties")

DEFAULT_SUBSET_BUDGET = 1_000_000
DEFAULT_SAMPLES_PER_SIZE = 10_000
DEFAULT_RESTARTS = 50
DEFAULT_EXACT_CAP = 40
DEFAULT_C0 = 0.1

# bool cells held per numpy chunk in the sampled sweep
_CHUNK_CELLS = 4_000_000


# -------------------------------------------------------------
# Subset sweep engine
# -------------------------------------------------------------
@dataclass
class _Sweep:
    min_union: Dict[int, int] = field(default_factory=dict)
    arg_union: Dict[int, Tuple[int, ...]] = field(default_factory=dict)
    iso_best: Optional[Fraction] = None
    iso_set: Tuple[int, ...] = ()
    tested: int = 0
    mode: str = "exhaustive"

    def offer(self, size: int, union: int, subset: Tuple[int, ...]) -> None:
        best = self.min_union.get(size)
        if best is None or union < best:
            self.min_union[size] = union
            self.arg_union[size] = subset

    def offer_iso(self, boundary: int, size: int, subset: Tuple[int, ...]) -> None:
        ratio = Fraction(boundary, size)
        if self.iso_best is None or ratio < self.iso_best:
            self.iso_best = ratio
            self.iso_set = subset


def _subset_sweep(
    bits: Sequence[int],
    n: int,
    max_size: int,
    iso_size: int,
    budget: int,
    samples_per_size: int,
    rng: np.random.Generator,
) -> _Sweep:
    """
    For every size s <= max(max_size, iso_size): min popcount of the union of
    bits over s-subsets (sizes <= max_size), and min |union \\ S| / |S|
    (sizes <= iso_size).
    """
    top = min(n, max(max_size, iso_size))
    total = sum(math.comb(n, s) for s in range(1, top + 1))
    sweep = _Sweep(mode="exhaustive" if total <= budget else "sampled")
    if top < 1:
        return sweep

    if sweep.mode == "exhaustive":
        def dfs(start: int, size: int, chosen: int, union: int, subset: Tuple[int, ...]) -> None:
            for v in range(start, n):
                s = size + 1
                cm = chosen | (1 << v)
                un = union | bits[v]
                sub = subset + (v,)
                sweep.tested += 1
                if s <= max_size:
                    sweep.offer(s, un.bit_count(), sub)
                if s <= iso_size:
                    sweep.offer_iso((un & ~cm).bit_count(), s, sub)
                if s < top:
                    dfs(v + 1, s, cm, un, sub)

        dfs(0, 0, 0, 0, ())
        return sweep

    table = np.array([[(b >> j) & 1 for j in range(n)] for b in bits], dtype=bool)
    for s in range(1, top + 1):
        if math.comb(n, s) <= samples_per_size:
            for combo in itertools.combinations(range(n), s):
                cm = mask_of(combo)
                un = 0
                for v in combo:
                    un |= bits[v]
                sweep.tested += 1
                if s <= max_size:
                    sweep.offer(s, un.bit_count(), combo)
                if s <= iso_size:
                    sweep.offer_iso((un & ~cm).bit_count(), s, combo)
            continue
        chunk = max(1, _CHUNK_CELLS // (s * n))
        remaining = samples_per_size
        while remaining > 0:
            rows = min(chunk, remaining)
            remaining -= rows
            idx = np.argpartition(rng.random((rows, n)), s - 1, axis=1)[:, :s]
            union = table[idx].any(axis=1)
            sweep.tested += rows
            if s <= max_size:
                sizes = union.sum(axis=1)
                k = int(np.argmin(sizes))
                sweep.offer(s, int(sizes[k]), tuple(sorted(int(v) for v in idx[k])))
            if s <= iso_size:
                member = np.zeros((rows, n), dtype=bool)
                np.put_along_axis(member, idx, True, axis=1)
                boundary = (union & ~member).sum(axis=1)
                k = int(np.argmin(boundary))
                sweep.offer_iso(int(boundary[k]), s, tuple(sorted(int(v) for v in idx[k])))
    return sweep


# -------------------------------------------------------------
# Expansion
# -------------------------------------------------------------
@dataclass
class ExpansionReport:
    epsilon: Fraction
    k_max: int
    worst_ratio: Fraction
    worst_set: Tuple[int, ...]
    subsets_tested: int
    mode: str
    in_gamma: bool
    per_size_ratio: Dict[int, Fraction]
    d: int
    iso_lambda: Fraction
    iso_max_size: int
    iso_number: Optional[Fraction] = None
    iso_set: Tuple[int, ...] = ()

    def invariant_violations(self) -> List[str]:
        out = []
        if self.per_size_ratio.get(1, Fraction(1)) != 1:
            out.append("singleton ratio differs from 1")
        if not Fraction(1, self.d) <= self.worst_ratio <= 1:
            out.append(f"worst_ratio {self.worst_ratio} outside [1/d, 1]")
        return out

    def to_dict(self) -> Dict[str, object]:
        return {
            "epsilon": str(self.epsilon),
            "k_max": self.k_max,
            "worst_ratio": str(self.worst_ratio),
            "worst_set": list(self.worst_set),
            "subsets_tested": self.subsets_tested,
            "mode": self.mode,
            "in_gamma": self.in_gamma,
            "per_size_ratio": {str(k): str(v) for k, v in sorted(self.per_size_ratio.items())},
            "iso_lambda": str(self.iso_lambda),
            "iso_max_size": self.iso_max_size,
            "iso_number": None if self.iso_number is None else str(self.iso_number),
            "iso_set": list(self.iso_set),
        }


def default_k_max(n: int, d: int, epsilon, c0: float = DEFAULT_C0) -> int:
    """floor(c0 * eps * n / d), at least 1."""
    return max(1, int(math.floor(c0 * float(epsilon) * n / d)))


def expansion_check(
    g: Digraph,
    epsilon,
    k_max: int,
    budget: int = DEFAULT_SUBSET_BUDGET,
    rng: SeedLike = 0,
    samples_per_size: int = DEFAULT_SAMPLES_PER_SIZE,
    lam=None,
) -> ExpansionReport:
    """
    Worst in-expansion over subsets of size <= k_max and the isoperimetric
    number i_{lam,V} = min over 1 <= |U| <= lam*n of |N^in(U) \\ U| / |U|
    (lam defaults to eps/d).
    """
    if not 1 <= k_max <= g.n:
        raise InputError(f"k_max must lie in [1, {g.n}], got {k_max}")
    eps = Fraction(epsilon)
    lam_f = Fraction(lam) if lam is not None else eps / g.d
    iso_size = min(g.n, int(math.floor(lam_f * g.n)))

    sweep = _subset_sweep(g.in_bits, g.n, k_max, iso_size, budget, samples_per_size, as_rng(rng))
    per_size = {s: Fraction(u, g.d * s) for s, u in sweep.min_union.items()}
    worst_size = min(per_size, key=lambda s: (per_size[s], s))
    worst = per_size[worst_size]
    return ExpansionReport(
        epsilon=eps,
        k_max=k_max,
        worst_ratio=worst,
        worst_set=sweep.arg_union[worst_size],
        subsets_tested=sweep.tested,
        mode=sweep.mode,
        in_gamma=worst <= 1 - eps,
        per_size_ratio=per_size,
        d=g.d,
        iso_lambda=lam_f,
        iso_max_size=iso_size,
        iso_number=sweep.iso_best,
        iso_set=sweep.iso_set,
    )


# -------------------------------------------------------------
# Zero minors
# -------------------------------------------------------------
@dataclass(frozen=True)
class ZeroMinorResult:
    found: bool
    i_set: Tuple[int, ...]
    j_set: Tuple[int, ...]
    mode: str
    conclusive: bool
    tested: int

    def to_dict(self) -> Dict[str, object]:
        return {
            "found": self.found,
            "i_set": list(self.i_set),
            "j_set": list(self.j_set),
            "mode": self.mode,
            "conclusive": self.conclusive,
            "tested": self.tested,
        }


def _zero_minor_exact(g: Digraph, l: int, r: int) -> ZeroMinorResult:
    full = (1 << g.n) - 1
    tested = 0
    for combo in itertools.combinations(range(g.n), l):
        tested += 1
        out = 0
        for i in combo:
            out |= g.out_bits[i]
        free = full & ~out
        if free.bit_count() >= r:
            return ZeroMinorResult(True, combo, tuple(members(free)), "exact", True, tested)
    return ZeroMinorResult(False, (), (), "exact", True, tested)


def _zero_minor_greedy(g: Digraph, l: int, r: int, rng: np.random.Generator, restarts: int) -> ZeroMinorResult:
    full = (1 << g.n) - 1
    for attempt in range(1, restarts + 1):
        first = int(rng.integers(g.n))
        chosen = [first]
        out = g.out_bits[first]
        while len(chosen) < l:
            best_size = None
            best: List[int] = []
            for v in range(g.n):
                if v in chosen:
                    continue
                size = (out | g.out_bits[v]).bit_count()
                if best_size is None or size < best_size:
                    best_size, best = size, [v]
                elif size == best_size:
                    best.append(v)
            v = best[int(rng.integers(len(best)))]
            chosen.append(v)
            out |= g.out_bits[v]
        free = full & ~out
        if free.bit_count() >= r:
            return ZeroMinorResult(True, tuple(sorted(chosen)), tuple(members(free)), "heuristic", True, attempt)
    # none found by restarts proves nothing
    return ZeroMinorResult(False, (), (), "heuristic", False, restarts)


def zero_minor_search(
    g: Digraph,
    l: int,
    r: int,
    mode: str = "auto",
    rng: SeedLike = 0,
    restarts: int = DEFAULT_RESTARTS,
    budget: int = DEFAULT_SUBSET_BUDGET,
) -> ZeroMinorResult:
    """Find I, J with |I| >= l, |J| >= r and no edge I -> J."""
    if not (1 <= l <= g.n and 1 <= r <= g.n):
        raise InputError(f"need 1 <= l, r <= n, got l={l}, r={r}, n={g.n}")
    if mode not in ("auto", "exact", "heuristic"):
        raise InputError(f"zero minor mode must be auto, exact or heuristic, got {mode!r}")
    if mode == "auto":
        mode = "exact" if math.comb(g.n, l) <= budget else "heuristic"
    if mode == "exact":
        return _zero_minor_exact(g, l, r)
    return _zero_minor_greedy(g, l, r, as_rng(rng), restarts)


# -------------------------------------------------------------
# Independence number
# -------------------------------------------------------------
@dataclass(frozen=True)
class IndependenceResult:
    size: int
    vertices: Tuple[int, ...]
    exact: bool

    def to_dict(self) -> Dict[str, object]:
        return {"alpha": self.size, "vertices": list(self.vertices), "exact": self.exact}


def _undirected(g: Digraph) -> Tuple[List[int], int]:
    """Symmetrized neighbour masks without self bits, plus the mask of loop-free vertices."""
    adj = []
    loop_free = 0
    for v in range(g.n):
        bit = 1 << v
        adj.append((g.out_bits[v] | g.in_bits[v]) & ~bit)
        if not g.out_bits[v] & bit:
            loop_free |= bit
    return adj, loop_free


def is_independent(g: Digraph, vertices: Iterable[int]) -> bool:
    vs = list(vertices)
    m = mask_of(vs)
    return all(not (g.out_bits[v] & m) for v in vs)


def _greedy_matching_size(cand: int, adj: List[int]) -> int:
    size = 0
    rest = cand
    while rest:
        low = rest & -rest
        v = low.bit_length() - 1
        rest ^= low
        nb = adj[v] & rest
        if nb:
            rest ^= nb & -nb
            size += 1
    return size


def _mis_exact(adj: List[int], cand: int) -> int:
    best = 0
    best_mask = 0

    def expand(cand: int, chosen: int, size: int) -> None:
        nonlocal best, best_mask
        # vertices of degree <= 1 inside cand belong to some maximum set
        while True:
            forced = 0
            rest = cand
            while rest:
                low = rest & -rest
                v = low.bit_length() - 1
                rest ^= low
                if (adj[v] & cand).bit_count() <= 1:
                    forced = low
                    break
            if not forced:
                break
            v = forced.bit_length() - 1
            chosen |= forced
            size += 1
            cand &= ~(forced | adj[v])
        if not cand:
            if size > best:
                best, best_mask = size, chosen
            return
        # alpha(cand) <= |cand| - (any matching in cand)
        if size + cand.bit_count() - _greedy_matching_size(cand, adj) <= best:
            return
        rest = cand
        pivot, pivot_deg = -1, -1
        while rest:
            low = rest & -rest
            v = low.bit_length() - 1
            rest ^= low
            deg = (adj[v] & cand).bit_count()
            if deg > pivot_deg:
                pivot, pivot_deg = v, deg
        bit = 1 << pivot
        expand(cand & ~bit & ~adj[pivot], chosen | bit, size + 1)
        expand(cand & ~bit, chosen, size)

    expand(cand, 0, 0)
    return best_mask


def _mis_greedy(adj: List[int], cand: int, rng: np.random.Generator, restarts: int) -> int:
    best_mask = 0
    for _ in range(max(1, restarts)):
        chosen = 0
        rest = cand
        while rest:
            vs = members(rest)
            degs = [(adj[v] & rest).bit_count() for v in vs]
            low = min(degs)
            ties = [v for v, dg in zip(vs, degs) if dg == low]
            v = ties[int(rng.integers(len(ties)))]
            chosen |= 1 << v
            rest &= ~((1 << v) | adj[v])
        if chosen.bit_count() > best_mask.bit_count():
            best_mask = chosen
    return best_mask


def independence_number(
    g: Digraph,
    exact_cap: int = DEFAULT_EXACT_CAP,
    rng: SeedLike = 0,
    restarts: int = DEFAULT_RESTARTS,
) -> IndependenceResult:
    """alpha(G): exact for n <= exact_cap, randomized-greedy lower bound above."""
    adj, loop_free = _undirected(g)
    if g.n <= exact_cap:
        mask = _mis_exact(adj, loop_free)
        exact = True
    else:
        mask = _mis_greedy(adj, loop_free, as_rng(rng), restarts)
        exact = False
    return IndependenceResult(mask.bit_count(), tuple(members(mask)), exact)


# -------------------------------------------------------------
# Matrix-side events
# -------------------------------------------------------------
@dataclass
class OmegaReport:
    epsilon: Fraction
    in_omega_eps: bool
    in_omega2: bool
    min_sj_ratio: Fraction
    min_sj_set: Tuple[int, ...]
    min_pair_union: int
    min_pair: Tuple[int, int]
    j_max: int
    mode: str
    subsets_tested: int
    shape_omega: float
    shape_omega2: float

    def to_dict(self) -> Dict[str, object]:
        return {
            "epsilon": str(self.epsilon),
            "in_omega_eps": self.in_omega_eps,
            "in_omega2": self.in_omega2,
            "min_SJ_ratio": str(self.min_sj_ratio),
            "min_SJ_set": list(self.min_sj_set),
            "min_pair_union": self.min_pair_union,
            "min_pair": list(self.min_pair),
            "j_max": self.j_max,
            "mode": self.mode,
            "subsets_tested": self.subsets_tested,
            "shape_omega": self.shape_omega,
            "shape_omega2": self.shape_omega2,
        }


def min_pair_union(g: Digraph) -> Tuple[int, Tuple[int, int]]:
    """min over i < j of |supp R_i U supp R_j| and the pair attaining it."""
    if g.n < 2:
        return g.d, (0, 0)
    best, pair = None, (0, 1)
    rows = g.out_bits
    for i in range(g.n):
        for j in range(i + 1, g.n):
            u = (rows[i] | rows[j]).bit_count()
            if best is None or u < best:
                best, pair = u, (i, j)
    return int(best), pair


def omega_shapes(n: int, d: int, eps: float, c0: float) -> Tuple[float, float]:
    """Bound shapes with constants set to 1 (for display only)."""
    inner = math.e * c0 * eps * n / d
    shape1 = math.exp(-(eps * eps * d / 8.0) * math.log(inner)) if inner > 0 else 1.0
    base = math.e * d / (eps * n)
    shape2 = (n * n / 2.0) * base ** (eps * d)
    return min(shape1, 1.0), shape2


def omega_events(
    g: Digraph,
    epsilon,
    j_budget: int = DEFAULT_SUBSET_BUDGET,
    rng: SeedLike = 0,
    c0: float = DEFAULT_C0,
    samples_per_size: int = DEFAULT_SAMPLES_PER_SIZE,
    j_max: Optional[int] = None,
) -> OmegaReport:
    """
    Omega2_eps exactly over all row pairs; Omega_eps over column sets J with
    |J| <= c0*eps*n/d through the subset sweep applied to column supports.
    """
    eps = Fraction(epsilon)
    if not 0 < eps < 1:
        raise InputError(f"epsilon must lie in (0, 1), got {eps}")
    jm = j_max if j_max is not None else default_k_max(g.n, g.d, eps, c0)
    jm = max(1, min(jm, g.n))

    sweep = _subset_sweep(g.in_bits, g.n, jm, 0, j_budget, samples_per_size, as_rng(rng))
    per_size = {s: Fraction(u, g.d * s) for s, u in sweep.min_union.items()}
    worst_size = min(per_size, key=lambda s: (per_size[s], s))
    pair_union, pair = min_pair_union(g)
    s1, s2 = omega_shapes(g.n, g.d, float(eps), c0)
    return OmegaReport(
        epsilon=eps,
        in_omega_eps=per_size[worst_size] >= 1 - eps,
        in_omega2=pair_union >= 2 * (1 - eps) * g.d,
        min_sj_ratio=per_size[worst_size],
        min_sj_set=sweep.arg_union[worst_size],
        min_pair_union=pair_union,
        min_pair=pair,
        j_max=jm,
        mode=sweep.mode,
        subsets_tested=sweep.tested,
        shape_omega=s1,
        shape_omega2=s2,
    )


def row_support_density(g: Digraph, j_set: Iterable[int], alpha, beta) -> int:
    """#rows i with |supp R_i n J| >= beta/(2 alpha)."""
    js = frozenset(int(j) for j in j_set)
    alpha, beta = Fraction(alpha), Fraction(beta)
    if alpha <= 0 or beta <= 0:
        raise InputError("alpha and beta must be positive")
    if len(js) < beta * g.n:
        raise InputError(f"|J| = {len(js)} is below beta*n = {beta * g.n}")
    jm = mask_of(js)
    threshold = beta / (2 * alpha)
    return sum(1 for b in g.out_bits if (b & jm).bit_count() >= threshold)


# -------------------------------------------------------------
# delta^J anti-concentration
# -------------------------------------------------------------
@dataclass
class AnticoncEstimate:
    n: int
    d: int
    j_set: Tuple[int, ...]
    samples: int
    max_atom_hat: float
    collision_hat: float
    sigma: float
    distinct: int
    chained_bound: float
    shape_exponent: float
    shape_value: float
    advisory: Dict[str, bool]
    frozen: Optional[FrozenColumnSet] = None
    heuristic: bool = False

    def to_dict(self) -> Dict[str, object]:
        return {
            "n": self.n,
            "d": self.d,
            "j_set": list(self.j_set),
            "samples": self.samples,
            "max_atom_hat": self.max_atom_hat,
            "collision_hat": self.collision_hat,
            "sigma": self.sigma,
            "distinct": self.distinct,
            "chained_bound": self.chained_bound,
            "shape_exponent": self.shape_exponent,
            "shape_value": self.shape_value,
            "advisory": dict(self.advisory),
            "frozen": None if self.frozen is None else self.frozen.to_dict(),
            "sampler": "conditional (heuristic)" if self.heuristic else "uniform",
        }


def chained_atom_bound(n: int, d: int, j_size: int) -> float:
    """
    Upper bound on any single atom P(delta^J = v): 1/C(n, |supp v|) by row
    symmetry, minimized over the achievable support sizes max(d,|J|)..min(n,d|J|).
    """
    lo, hi = max(d, j_size), min(n, d * j_size)
    return 1.0 / min(math.comb(n, m) for m in range(lo, hi + 1))


def _check_j(n: int, j_set: Iterable[int], frozen: Optional[FrozenColumnSet]) -> Tuple[int, ...]:
    js = tuple(sorted(set(int(j) for j in j_set)))
    if not js:
        raise InputError("J must be nonempty")
    if js[0] < 0 or js[-1] >= n:
        raise InputError(f"J has a column outside [0, {n})")
    if frozen is not None and frozen.i_set & set(js):
        raise InputError(f"J meets the frozen columns {sorted(frozen.i_set & set(js))}")
    return js


def delta_anticoncentration(
    n: int,
    d: int,
    j_set: Iterable[int],
    samples: int,
    frozen: Optional[FrozenColumnSet] = None,
    sampler_cfg: Optional[ChainConfig] = None,
    seed: int = 0,
    retry_budget: int = DEFAULT_RETRY_BUDGET,
) -> AnticoncEstimate:
    """Modal frequency and collision estimate of delta^J over `samples` graphs."""
    js = _check_j(n, j_set, frozen)
    cfg = sampler_cfg or ChainConfig()
    values = (
        delta_vector(g, js).mask
        for g in sample_many(n, d, samples, cfg, seed, frozen=frozen, retry_budget=retry_budget)
    )
    return summarize_delta(n, d, js, values, frozen)


def summarize_delta(
    n: int,
    d: int,
    js: Tuple[int, ...],
    values: Iterable[int],
    frozen: Optional[FrozenColumnSet] = None,
) -> AnticoncEstimate:
    """Reduce delta^J masks to an estimate. Order-insensitive."""
    est = collision_estimate(values)
    exponent, value = shape_exponent(d, len(js), n)
    i_size = len(frozen.i_set) if frozen is not None else 0
    advisory = {
        "frozen_small": i_size <= d * len(js) / 32,
        "j_size_regime": 8 <= len(js) <= 8 * n / d,
    }
    return AnticoncEstimate(
        n=n,
        d=d,
        j_set=js,
        samples=est.samples,
        max_atom_hat=est.max_atom_hat,
        collision_hat=est.collision_hat,
        sigma=est.sigma,
        distinct=est.distinct,
        chained_bound=chained_atom_bound(n, d, len(js)),
        shape_exponent=exponent,
        shape_value=value,
        advisory=advisory,
        frozen=frozen,
        heuristic=bool(frozen is not None and frozen.f_supports),
    )


def exact_delta_law(
    n: int, d: int, j_set: Iterable[int], cap: int = DEFAULT_ENUMERATE_CAP
) -> Dict[int, Fraction]:
    """Exact law of delta^J (as row masks) by enumerating M_{n,d}."""
    js = _check_j(n, j_set, None)
    counts: Counter = Counter(delta_vector(g, js).mask for g in enumerate_all(n, d, cap))
    total = sum(counts.values())
    return {v: Fraction(c, total) for v, c in counts.items()}


# -------------------------------------------------------------
# Projection anti-concentration
# -------------------------------------------------------------
@dataclass
class ProjectionEstimate:
    samples: int
    hits: int
    frequency: float
    interval: Interval
    lam: Fraction
    a: Fraction
    direction: str
    shape_exponent: float
    shape_value: float
    advisory: Dict[str, bool]
    heuristic: bool = False

    def to_dict(self) -> Dict[str, object]:
        return {
            "samples": self.samples,
            "hits": self.hits,
            "frequency": self.frequency,
            "wilson_95_lo": self.interval.lo,
            "wilson_95_hi": self.interval.hi,
            "lambda": str(self.lam),
            "a": str(self.a),
            "direction": self.direction,
            "shape_exponent": self.shape_exponent,
            "shape_value": self.shape_value,
            "advisory": dict(self.advisory),
            "sampler": "conditional (heuristic)" if self.heuristic else "uniform",
        }


@dataclass(frozen=True)
class ProjectionQuery:
    """Validated hypothesis, scaled to integers: y_int = D*y, a_int = D*a."""

    n: int
    i_set: frozenset
    j_set: frozenset
    j_lambda: frozenset
    lam: Fraction
    a: Fraction
    direction: str
    y_int: Tuple[int, ...]
    a_int: int
    s_mask: int


def projection_query(
    n: int,
    i_set: Iterable[int],
    j_set: Iterable[int],
    j_lambda: Iterable[int],
    y: Sequence,
    a,
    s_set: Iterable[int],
    lam=None,
    direction: str = "above",
) -> ProjectionQuery:
    """Check the hypothesis on (I, J, J_lam, y, a) clause by clause."""
    I, J, L = (frozenset(int(v) for v in s) for s in (i_set, j_set, j_lambda))
    if I & J or I & L or J & L:
        raise InputError("I, J and J_lambda must be pairwise disjoint")
    if I | J | L != frozenset(range(n)):
        raise InputError("I, J and J_lambda must cover [n]")
    if direction not in ("above", "below"):
        raise InputError(f"direction must be 'above' or 'below', got {direction!r}")
    ys = [Fraction(v) for v in y]
    if len(ys) != n:
        raise InputError(f"y must have length {n}, got {len(ys)}")
    a_f = Fraction(a)
    if a_f <= 0:
        raise InputError("a must be positive")
    if lam is None:
        if not L:
            raise InputError("lambda must be given when J_lambda is empty")
        lam_f = ys[min(L)]
    else:
        lam_f = Fraction(lam)
    bad = [l for l in sorted(L) if ys[l] != lam_f]
    if bad:
        raise InputError(f"clause y_l = lambda on J_lambda fails at {bad}")
    if direction == "above":
        bad = [j for j in sorted(J) if ys[j] - lam_f < 2 * a_f]
        clause = "y_j - lambda >= 2a on J"
    else:
        bad = [j for j in sorted(J) if lam_f - ys[j] < 2 * a_f]
        clause = "lambda - y_j >= 2a on J"
    if bad:
        raise InputError(f"clause {clause} fails at {bad}")
    if not J:
        raise InputError("J must be nonempty")
    ss = frozenset(int(s) for s in s_set)
    if any(not 0 <= s < n for s in ss):
        raise InputError(f"S has a row outside [0, {n})")

    den = a_f.denominator
    for v in ys:
        den = math.lcm(den, v.denominator)
    return ProjectionQuery(
        n=n, i_set=I, j_set=J, j_lambda=L, lam=lam_f, a=a_f, direction=direction,
        y_int=tuple(int(v * den) for v in ys), a_int=int(a_f * den), s_mask=mask_of(ss),
    )


def projection_event(g: Digraph, q: ProjectionQuery) -> bool:
    """||P_S M y||_inf < a, exactly."""
    y = q.y_int
    for i in members(q.s_mask):
        total = 0
        for j in g.out_adj[i]:
            total += y[j]
        if abs(total) >= q.a_int:
            return False
    return True


def projection_anticoncentration(
    n: int,
    d: int,
    q: ProjectionQuery,
    samples: int,
    sampler_cfg: Optional[ChainConfig] = None,
    seed: int = 0,
    frozen: Optional[FrozenColumnSet] = None,
    retry_budget: int = DEFAULT_RETRY_BUDGET,
) -> ProjectionEstimate:
    """Monte Carlo frequency of ||P_S M y||_inf < a with a Wilson interval."""
    if q.n != n:
        raise InputError(f"query is for n={q.n}, expected {n}")
    if frozen is not None and not frozen.i_set <= q.i_set:
        raise InputError("frozen columns must lie inside I")
    cfg = sampler_cfg or ChainConfig()
    hits = sum(
        1
        for g in sample_many(n, d, samples, cfg, seed, frozen=frozen, retry_budget=retry_budget)
        if projection_event(g, q)
    )
    return summarize_projection(n, d, q, hits, samples, frozen)


def summarize_projection(
    n: int, d: int, q: ProjectionQuery, hits: int, samples: int, frozen: Optional[FrozenColumnSet] = None
) -> ProjectionEstimate:
    exponent, value = shape_exponent(d, len(q.j_set), n)
    return ProjectionEstimate(
        samples=samples,
        hits=hits,
        frequency=hits / samples if samples else float("nan"),
        interval=wilson_interval(hits, samples),
        lam=q.lam,
        a=q.a,
        direction=q.direction,
        shape_exponent=exponent,
        shape_value=value,
        advisory={"d_at_least_32": d >= 32, "dJ_below_n": d * len(q.j_set) < n},
        heuristic=bool(frozen is not None and frozen.f_supports),
    )


def projection_exact_probability(n: int, d: int, q: ProjectionQuery, cap: int = DEFAULT_ENUMERATE_CAP) -> Fraction:
    """Exact P(||P_S M y||_inf < a) over M_{n,d} by enumeration."""
    total = hits = 0
    for g in enumerate_all(n, d, cap):
        total += 1
        hits += projection_event(g, q)
    return Fraction(hits, total)
