"""
lo_kit.py

Littlewood-Offord style atom bounds and the row-shuffling class experiment.

Responsibilities:
- Exact subset-sum atoms P(v_B = a) over uniform d-subsets B of [2d]
  (meet-in-the-middle on integer-scaled values) and full atom laws
- Exact maximal atom of sum xi_i x_i for two-valued independent signs
- Monte Carlo and closed-form laws of the pair-mismatch count under a
  uniform permutation
- Separating splits (value-class unions of bounded size)
- The two-row shuffle class: choose v orthogonal to the other rows and to
  R_i + R_j, then count class members with <v, R_i> = 0 exactly

Rational inputs are scaled by the lcm of their denominators before any
summation; integer sums are the canonical form used for hashing.

This module MUST NOT:
- Sample graphs (callers pass them in)
- Write files
"""
from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from core.errors import CapExceededError, InputError
from core.graph import Digraph, mask_of, members
from core.logging import get_logger
from core.properties import min_pair_union
from core.rank import canonical_integer, kernel_basis
from core.rng import SeedLike, as_rng
from core.stats import Interval, binomial_sigma, wilson_interval

logger = get_logger("lo_kit")

DEFAULT_ATOM_CAP = 32
DEFAULT_ERDOS_CAP = 24
DEFAULT_SHUFFLE_COMBOS = 200
DEFAULT_SHUFFLE_COEFF = 5
DEFAULT_CLASS_CAP = 40

_INT64_SAFE = 1 << 62


# -------------------------------------------------------------
# Exact subset-sum counting
# -------------------------------------------------------------
def scale_to_integers(values: Sequence, *extra) -> Tuple[List[int], List[int], int]:
    """(D*values, D*extra, D) with D the lcm of every denominator."""
    fr = [Fraction(v) for v in values]
    ex = [Fraction(v) for v in extra]
    den = 1
    for v in itertools.chain(fr, ex):
        den = math.lcm(den, v.denominator)
    return [int(v * den) for v in fr], [int(v * den) for v in ex], den


def _half_table(vals: Sequence[int]) -> Tuple[np.ndarray, np.ndarray]:
    sizes = np.zeros(1, dtype=np.int64)
    sums = np.zeros(1, dtype=np.int64)
    for v in vals:
        sizes = np.concatenate([sizes, sizes + 1])
        sums = np.concatenate([sums, sums + v])
    return sizes, sums


def _count_numpy(left: Sequence[int], right: Sequence[int], size: int, target: int) -> int:
    lsz, lsum = _half_table(left)
    rsz, rsum = _half_table(right)
    count = 0
    for t in range(max(0, size - len(right)), min(size, len(left)) + 1):
        ls = np.sort(lsum[lsz == t])
        need = target - rsum[rsz == size - t]
        count += int((np.searchsorted(ls, need, "right") - np.searchsorted(ls, need, "left")).sum())
    return count


def _count_python(left: Sequence[int], right: Sequence[int], size: int, target: int) -> int:
    table: Counter = Counter()
    for t in range(0, min(size, len(left)) + 1):
        for combo in itertools.combinations(left, t):
            table[(t, sum(combo))] += 1
    count = 0
    for t in range(0, min(size, len(right)) + 1):
        for combo in itertools.combinations(right, t):
            count += table.get((size - t, target - sum(combo)), 0)
    return count


def count_subsets_with_sum(values: Sequence[int], size: int, target: int) -> int:
    """#size-subsets of `values` (by position) summing to target, meet-in-the-middle."""
    vals = [int(v) for v in values]
    if size < 0 or size > len(vals):
        return 0
    half = len(vals) // 2
    left, right = vals[:half], vals[half:]
    bound = sum(abs(v) for v in vals) + abs(int(target))
    if bound < _INT64_SAFE:
        return _count_numpy(left, right, size, int(target))
    return _count_python(left, right, size, int(target))


def sum_law(values: Sequence[int], size: int) -> Counter:
    """Counter sum -> #size-subsets, by a DP over value classes."""
    classes = Counter(int(v) for v in values)
    states: Dict[Tuple[int, int], int] = {(0, 0): 1}
    for value, mult in classes.items():
        nxt: Dict[Tuple[int, int], int] = {}
        for (taken, total), ways in states.items():
            for c in range(0, min(mult, size - taken) + 1):
                key = (taken + c, total + c * value)
                nxt[key] = nxt.get(key, 0) + ways * math.comb(mult, c)
        states = nxt
    law: Counter = Counter()
    for (taken, total), ways in states.items():
        if taken == size:
            law[total] += ways
    return law


# -------------------------------------------------------------
# Separating splits
# -------------------------------------------------------------
def _classes(values: Sequence[Fraction], index: Sequence[int]) -> List[List[int]]:
    groups: Dict[Fraction, List[int]] = {}
    for i in index:
        groups.setdefault(values[i], []).append(i)
    return sorted(groups.values(), key=lambda g: (-len(g), g[0]))


def _class_union(classes: List[List[int]], lo: int, hi: int) -> Optional[List[int]]:
    """Union of whole classes with lo <= size <= hi (exact reachability DP)."""
    reach: Dict[int, Tuple[int, ...]] = {0: ()}
    for ci, cls in enumerate(classes):
        for total, picks in list(reach.items()):
            t = total + len(cls)
            if t <= hi and t not in reach:
                reach[t] = picks + (ci,)
    for total in sorted(reach):
        if lo <= total <= hi and total > 0:
            return sorted(i for ci in reach[total] for i in classes[ci])
    return None


def separating_split(x: Sequence, p) -> Tuple[int, ...]:
    """
    J with pn <= |J| <= (1-p)n and x_i != x_j for i in J, j outside J.
    Exists whenever x is not almost constant at level p <= 1/3.
    """
    p = Fraction(p)
    if not 0 < p <= Fraction(1, 3):
        raise InputError(f"p must lie in (0, 1/3], got {p}")
    xs = [Fraction(v) for v in x]
    n = len(xs)
    lo, hi = math.ceil(p * n), math.floor((1 - p) * n)
    split = _class_union(_classes(xs, range(n)), lo, hi)
    if split is None:
        raise InputError("x is almost constant at this level; no separating split exists")
    return tuple(split)


def separating_split_on(x: Sequence, s_set: Iterable[int], l: int) -> Tuple[int, ...]:
    """J inside S with l <= |J| <= |S| - l, separating x across J / S minus J."""
    xs = [Fraction(v) for v in x]
    ss = sorted(set(int(i) for i in s_set))
    if any(not 0 <= i < len(xs) for i in ss):
        raise InputError("S has an index outside x")
    split = _class_union(_classes(xs, ss), l, len(ss) - l)
    if split is None:
        raise InputError(f"no separating split of S with {l} <= |J| <= {len(ss) - l}")
    return tuple(split)


# -------------------------------------------------------------
# Subset-sum atoms
# -------------------------------------------------------------
@dataclass(frozen=True)
class SubsetSumAtomQuery:
    v: Tuple[Fraction, ...]
    k: int
    a: Fraction
    j_set: Tuple[int, ...] = ()

    @property
    def d(self) -> int:
        return len(self.v) // 2


def atom_query(v: Sequence, k: int, a) -> SubsetSumAtomQuery:
    """Validate (v, k, a): len(v) = 2d, 1 <= k <= d, and some J with |J| = k separates v."""
    vs = tuple(Fraction(x) for x in v)
    if not vs or len(vs) % 2:
        raise InputError(f"v must have even positive length 2d, got {len(vs)}")
    d = len(vs) // 2
    if not 1 <= k <= d:
        raise InputError(f"k must lie in [1, {d}], got {k}")
    split = _class_union(_classes(vs, range(len(vs))), k, k)
    if split is None:
        raise InputError(f"no union of value classes of v has exactly {k} coordinates")
    return SubsetSumAtomQuery(v=vs, k=k, a=Fraction(a), j_set=tuple(split))


def canonical_vector(k: int, d: int) -> Tuple[int, ...]:
    """(1,...,1,0,...,0) with k ones and 2d coordinates."""
    return tuple([1] * k + [0] * (2 * d - k))


def _check_atom_cap(length: int, cap: int) -> None:
    if length > cap:
        raise CapExceededError(
            f"exact atom refused: 2d={length} exceeds cap {cap}; use atom_probability_mc",
            estimated_cost=math.comb(length, length // 2),
            meta={"length": length, "cap": cap},
        )


def atom_probability(q: SubsetSumAtomQuery, cap: int = DEFAULT_ATOM_CAP) -> Fraction:
    """P(sum_{i in B} v_i = a) for a uniform d-subset B of [2d]."""
    _check_atom_cap(len(q.v), cap)
    ints, (target,), _ = scale_to_integers(q.v, q.a)
    hits = count_subsets_with_sum(ints, q.d, target)
    return Fraction(hits, math.comb(2 * q.d, q.d))


def atom_probability_naive(q: SubsetSumAtomQuery) -> Fraction:
    hits = sum(1 for combo in itertools.combinations(q.v, q.d) if sum(combo) == q.a)
    return Fraction(hits, math.comb(2 * q.d, q.d))


def atom_law(v: Sequence, cap: int = DEFAULT_ATOM_CAP) -> Dict[Fraction, Fraction]:
    """Every achievable a with its exact probability."""
    _check_atom_cap(len(v), cap)
    if len(v) % 2:
        raise InputError("v must have even length")
    d = len(v) // 2
    ints, _, den = scale_to_integers(v)
    law = sum_law(ints, d)
    total = math.comb(2 * d, d)
    return {Fraction(s, den): Fraction(c, total) for s, c in law.items()}


def max_atom(v: Sequence, cap: int = DEFAULT_ATOM_CAP) -> Tuple[Fraction, Fraction]:
    """(largest atom, the a attaining it; smallest such a on ties)."""
    law = atom_law(v, cap)
    a, prob = min(law.items(), key=lambda kv: (-kv[1], kv[0]))
    return prob, a


def atom_bound(k: int) -> float:
    return 10.0 / math.sqrt(k)


def atom_bound_holds(prob: Fraction, k: int) -> bool:
    """prob <= 10/sqrt(k), compared exactly as prob^2 * k <= 100."""
    return prob * prob * k <= 100


@dataclass(frozen=True)
class AtomEstimate:
    samples: int
    hits: int
    frequency: float
    interval: Interval


def atom_probability_mc(q: SubsetSumAtomQuery, samples: int, rng: SeedLike = 0) -> AtomEstimate:
    """Monte Carlo P(v_B = a) for lengths above the exact cap."""
    gen = as_rng(rng)
    ints, (target,), _ = scale_to_integers(q.v, q.a)
    vals = np.array(ints, dtype=object if max(map(abs, ints), default=0) * q.d >= _INT64_SAFE else np.int64)
    hits = 0
    for _ in range(samples):
        pick = gen.permutation(len(ints))[: q.d]
        hits += int(vals[pick].sum() == target)
    return AtomEstimate(samples, hits, hits / samples, wilson_interval(hits, samples))


# -------------------------------------------------------------
# Two-valued sign sums
# -------------------------------------------------------------
def erdos_lo_max_atom(
    x: Sequence,
    values: Optional[Sequence[Tuple[object, object]]] = None,
    cap: int = DEFAULT_ERDOS_CAP,
) -> Fraction:
    """
    Exact max_a P(sum xi_i x_i = a), each xi_i uniform on its pair of values
    (default -1/+1), by convolution of distribution tables.
    """
    xs = [Fraction(v) for v in x]
    if not any(xs):
        raise InputError("x must have nonempty support")
    if len(xs) > cap:
        raise CapExceededError(
            f"exact sign-sum law refused: m={len(xs)} exceeds cap {cap}",
            estimated_cost=2 ** len(xs),
            meta={"m": len(xs), "cap": cap},
        )
    pairs = [(Fraction(u), Fraction(w)) for u, w in values] if values is not None else [(Fraction(-1), Fraction(1))] * len(xs)
    if len(pairs) != len(xs):
        raise InputError("need one value pair per coordinate")
    law: Dict[Fraction, int] = {Fraction(0): 1}
    for xi, (u, w) in zip(xs, pairs):
        nxt: Dict[Fraction, int] = {}
        for s, c in law.items():
            for val in (u, w):
                key = s + val * xi
                nxt[key] = nxt.get(key, 0) + c
        law = nxt
    return Fraction(max(law.values()), 2 ** len(xs))


def erdos_bound(x: Sequence) -> float:
    """|supp x|^(-1/2)."""
    return 1.0 / math.sqrt(sum(1 for v in x if Fraction(v) != 0))


# -------------------------------------------------------------
# Pair mismatches under a random permutation
# -------------------------------------------------------------
def pair_mismatch_distribution(k: int, d: int) -> Dict[int, Fraction]:
    """
    Exact law of |E|: the number of positions i <= d where the canonical
    vector differs at pi(i) and pi(i+d).
    P(|E| = e) = C(d,e) C(d-e,(k-e)/2) 2^e / C(2d,k).
    """
    if not 1 <= k <= 2 * d:
        raise InputError(f"need 1 <= k <= 2d, got k={k}, d={d}")
    total = math.comb(2 * d, k)
    law = {}
    for e in range(k % 2, min(k, 2 * d - k) + 1, 2):
        both = (k - e) // 2
        if both > d - e:
            continue
        law[e] = Fraction(math.comb(d, e) * math.comb(d - e, both) * 2**e, total)
    return law


def mismatch_threshold_probability(k: int, d: int) -> Fraction:
    """Exact P(|E| <= k/50), compared as 50|E| <= k."""
    return sum((p for e, p in pair_mismatch_distribution(k, d).items() if 50 * e <= k), Fraction(0))


def permutation_pair_bound(k: int, d: int) -> float:
    return (k / (1.1 * d)) ** (k / 3.0)


@dataclass(frozen=True)
class PermutationPairEstimate:
    k: int
    d: int
    samples: int
    hits: int
    frequency: float
    interval: Interval
    sigma: float
    exact: Fraction
    bound: float
    mismatch_counts: Dict[int, int] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, object]:
        return {
            "k": self.k,
            "d": self.d,
            "samples": self.samples,
            "hits": self.hits,
            "frequency": self.frequency,
            "wilson_95_lo": self.interval.lo,
            "wilson_95_hi": self.interval.hi,
            "sigma": self.sigma,
            "exact": str(self.exact),
            "bound": self.bound,
            "mismatch_counts": {str(e): c for e, c in sorted(self.mismatch_counts.items())},
        }


def permutation_pair_estimate(k: int, d: int, samples: int, rng: SeedLike = 0, chunk: int = 50_000) -> PermutationPairEstimate:
    """Frequency of |E(pi)| <= k/50 over `samples` uniform permutations of [2d]."""
    if not 1 <= k <= d:
        raise InputError(f"need 1 <= k <= d, got k={k}, d={d}")
    gen = as_rng(rng)
    x = np.array(canonical_vector(k, d), dtype=np.int8)
    counts: Counter = Counter()
    remaining = samples
    while remaining > 0:
        rows = min(chunk, remaining)
        remaining -= rows
        perms = np.argsort(gen.random((rows, 2 * d)), axis=1)
        shuffled = x[perms]
        mism = (shuffled[:, :d] != shuffled[:, d:]).sum(axis=1)
        vals, cnt = np.unique(mism, return_counts=True)
        for e, c in zip(vals.tolist(), cnt.tolist()):
            counts[int(e)] += int(c)
    hits = sum(c for e, c in counts.items() if 50 * e <= k)
    freq = hits / samples if samples else float("nan")
    exact = mismatch_threshold_probability(k, d)
    return PermutationPairEstimate(
        k=k,
        d=d,
        samples=samples,
        hits=hits,
        frequency=freq,
        interval=wilson_interval(hits, samples),
        sigma=binomial_sigma(float(exact), samples),
        exact=exact,
        bound=permutation_pair_bound(k, d),
        mismatch_counts=dict(counts),
    )


# -------------------------------------------------------------
# Shuffle class
# -------------------------------------------------------------
@dataclass
class ShuffleClassReport:
    q: int
    epsilon: Fraction
    rows: Tuple[int, int]
    outcome: str
    m2: int = 0
    s_size: int = 0
    class_size: int = 0
    zero_count: int = 0
    zero_fraction: Optional[Fraction] = None
    bound: Optional[float] = None
    bound_holds: Optional[bool] = None
    in_bound_regime: bool = False
    v: Optional[Tuple[int, ...]] = None
    score: int = 0
    candidates_tested: int = 0
    split: Optional[Tuple[int, ...]] = None

    def to_dict(self) -> Dict[str, object]:
        return {
            "q": self.q,
            "epsilon": str(self.epsilon),
            "rows": list(self.rows),
            "outcome": self.outcome,
            "m2": self.m2,
            "s_size": self.s_size,
            "class_size": self.class_size,
            "zero_count": self.zero_count,
            "zero_fraction": None if self.zero_fraction is None else str(self.zero_fraction),
            "bound": self.bound,
            "bound_holds": self.bound_holds,
            "in_bound_regime": self.in_bound_regime,
            "v": None if self.v is None else [str(c) for c in self.v],
            "score": self.score,
            "candidates_tested": self.candidates_tested,
            "split": None if self.split is None else list(self.split),
        }


def orthocomplement_basis(g: Digraph, i: int, j: int) -> List[Tuple[int, ...]]:
    """Integer basis of the vectors orthogonal to every R_k (k != i, j) and to R_i + R_j."""
    m = g.to_matrix()
    keep = [k for k in range(g.n) if k not in (i, j)]
    rows = [m[k].tolist() for k in keep] + [(m[i] + m[j]).tolist()]
    return kernel_basis(rows)


def distinctness_score(v: Sequence[int], support: Iterable[int]) -> int:
    """min over lambda of #{k in support: v_k != lambda}."""
    vals = [v[k] for k in support]
    if not vals:
        return 0
    return len(vals) - Counter(vals).most_common(1)[0][1]


def choose_shuffle_vector(
    basis: List[Tuple[int, ...]],
    support: Sequence[int],
    rng: np.random.Generator,
    combos: int = DEFAULT_SHUFFLE_COMBOS,
    coeff: int = DEFAULT_SHUFFLE_COEFF,
) -> Tuple[Optional[Tuple[int, ...]], int, int]:
    """
    Best (score, then lexicographically smallest) canonical vector among
    random combinations of the basis and a fallback scan of the basis
    vectors and their sum. Returns (v, score, candidates tested).
    """
    if not basis:
        return None, 0, 0
    dim = len(basis)
    n = len(basis[0])
    candidates: List[Tuple[int, ...]] = []
    for coeffs in rng.integers(-coeff, coeff + 1, size=(combos, dim)).tolist():
        vec = [0] * n
        for c, b in zip(coeffs, basis):
            if c:
                for t in range(n):
                    vec[t] += c * b[t]
        if any(vec):
            candidates.append(canonical_integer(vec))
    candidates.extend(basis)
    total = [sum(col) for col in zip(*basis)]
    if any(total):
        candidates.append(canonical_integer(total))

    best: Optional[Tuple[int, ...]] = None
    best_score = -1
    for vec in candidates:
        s = distinctness_score(vec, support)
        if s > best_score or (s == best_score and best is not None and vec < best):
            best, best_score = vec, s
    return best, best_score, len(candidates)


def _shuffle_sets(g: Digraph, i: int, j: int) -> Tuple[int, int, List[int]]:
    """(S12 mask, s12 mask, S = S12 minus s12 as a sorted list)."""
    big = g.out_bits[i] | g.out_bits[j]
    small = g.out_bits[i] & g.out_bits[j]
    return big, small, members(big & ~small)


def shuffle_class_members(g: Digraph, rows: Tuple[int, int] = (0, 1)) -> Iterator[Tuple[Tuple[int, ...], Tuple[int, ...]]]:
    """Every (supp R_i, supp R_j) pair in the class: s12 plus a (d - m2)-subset B of S, and the rest."""
    i, j = rows
    big, small, s = _shuffle_sets(g, i, j)
    m2 = small.bit_count()
    for b in itertools.combinations(s, g.d - m2):
        r1 = small | mask_of(b)
        yield tuple(members(r1)), tuple(members(big & ~r1 | small))


def shuffle_class_experiment(
    g: Digraph,
    q: Optional[int] = None,
    epsilon=None,
    rng: SeedLike = 0,
    rows: Tuple[int, int] = (0, 1),
    combos: int = DEFAULT_SHUFFLE_COMBOS,
    coeff: int = DEFAULT_SHUFFLE_COEFF,
    class_cap: int = DEFAULT_CLASS_CAP,
    strict: bool = True,
) -> ShuffleClassReport:
    """
    Exact fraction of the two-row class with <v, R_i> = 0, for a v
    orthogonal to the other rows and to R_i + R_j with at least q distinct
    coordinates (against any constant) on supp(R_i + R_j).

    q=None takes the witnessed score capped at 2d/3; epsilon=None takes
    q/(4d). A graph outside Omega2_eps raises InputError when `strict`,
    otherwise the report comes back with outcome "outside_omega2".
    """
    i, j = rows
    if i == j or not (0 <= i < g.n and 0 <= j < g.n):
        raise InputError(f"rows must be two distinct indices in [0, {g.n})")
    if q is not None and q < 1:
        raise InputError(f"q must be >= 1, got {q}")

    big, small, s = _shuffle_sets(g, i, j)
    support = members(big)
    basis = orthocomplement_basis(g, i, j)
    v, score, tested = choose_shuffle_vector(basis, support, as_rng(rng), combos, coeff)
    score = max(score, 0)

    if q is None:
        q = max(1, min(score, (2 * g.d) // 3))
    eps = Fraction(epsilon) if epsilon is not None else Fraction(q, 4 * g.d)
    if not 0 < eps < 1:
        raise InputError(f"epsilon must lie in (0, 1), got {eps}")

    report = ShuffleClassReport(q=q, epsilon=eps, rows=(i, j), outcome="not_witnessed")
    report.in_bound_regime = 2 * eps * g.d < q <= Fraction(2 * g.d, 3)
    report.candidates_tested = tested
    report.score = score

    pair_union, _ = min_pair_union(g)
    if pair_union < 2 * (1 - eps) * g.d:
        if strict:
            raise InputError(f"graph is outside Omega2 at eps={eps} (min pair union {pair_union})")
        report.outcome = "outside_omega2"
        return report
    if v is None or score < q:
        return report

    m2 = small.bit_count()
    choose = g.d - m2
    class_size = math.comb(len(s), choose)
    if len(s) > class_cap:
        raise CapExceededError(
            f"shuffle class over |S|={len(s)} exceeds cap {class_cap}",
            estimated_cost=class_size,
            meta={"s_size": len(s), "cap": class_cap},
        )
    target = -sum(v[t] for t in members(small))
    zero = count_subsets_with_sum([v[t] for t in s], choose, target)

    report.outcome = "ok"
    report.v = v
    report.m2 = m2
    report.s_size = len(s)
    report.class_size = class_size
    report.zero_count = zero
    report.zero_fraction = Fraction(zero, class_size)
    slack = q - 2 * eps * g.d
    if slack > 0:
        report.bound = 10.0 / math.sqrt(slack)
        report.bound_holds = report.zero_fraction ** 2 * slack <= 100
    try:
        report.split = separating_split_on(v, s, q - m2) if q - m2 >= 1 else None
    except InputError:
        report.split = None
    logger.debug("shuffle_class", extra={"meta": {"q": q, "class_size": class_size, "zero": zero}})
    return report
