"""
rank.py

Exact singularity decisions for square integer (typically 0/1) matrices.

Responsibilities:
- Rank over a prime field by numpy int64 elimination
- Modular-first singularity test: one full-rank residue proves
  nonsingularity, otherwise fraction-free (Bareiss) integer elimination
  decides and exact kernel vectors are extracted
- Canonical integer kernel bases (coprime entries, first nonzero positive)
- Almost-constant vector checks and the kernel-wide eAC event with an
  explicit certainty class
- JSON-safe certificates (big integers as decimal strings) and their
  re-verification

This module MUST NOT:
- Use floating point in any rank decision
- Sample graphs or write files
"""
from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from sympy import isprime, nextprime

from core.errors import InputError
from core.graph import Digraph
from core.logging import get_logger
from core.rng import SeedLike, as_rng

logger = get_logger("rank")

DEFAULT_PRIME_COUNT = 3
DEFAULT_PRIME_LOW = 2**30
DEFAULT_PRIME_HIGH = 2**31
DEFAULT_EAC_BUDGET = 1000
DEFAULT_EAC_COEFF = 3
# {-1,0,1} combinations are tried exhaustively up to this kernel dimension
EAC_EXHAUSTIVE_DIM = 6

WITNESS_MOD_P = "full_rank_mod_p"
WITNESS_EXACT = "exact_elimination"
WITNESS_KERNEL = "kernel"

CERTIFIED_TRUE = "certified_true"
CERTIFIED_FALSE = "certified_false"
HEURISTIC_TRUE = "heuristic_true"

Matrix = List[List[int]]


# -------------------------------------------------------------
# Data structures
# -------------------------------------------------------------
@dataclass(frozen=True)
class RankCertificate:
    n: int
    rank: int
    singular: bool
    witness_kind: str
    prime: Optional[int] = None
    pivots: Tuple[int, ...] = ()
    null_right: Optional[Tuple[int, ...]] = None
    null_left: Optional[Tuple[int, ...]] = None
    primes_tried: Tuple[int, ...] = ()

    def to_dict(self) -> Dict[str, object]:
        out: Dict[str, object] = {
            "n": self.n,
            "rank": self.rank,
            "singular": self.singular,
            "witness_kind": self.witness_kind,
            "primes_tried": [str(p) for p in self.primes_tried],
        }
        if self.prime is not None:
            out["prime"] = str(self.prime)
            out["pivots"] = list(self.pivots)
        if self.null_right is not None:
            out["null_right"] = [str(v) for v in self.null_right]
        if self.null_left is not None:
            out["null_left"] = [str(v) for v in self.null_left]
        return out

    @classmethod
    def from_dict(cls, raw: Dict[str, object]) -> "RankCertificate":
        """A certificate, or the {"certificate": ...} document `rank` prints."""
        if isinstance(raw, dict) and isinstance(raw.get("certificate"), dict):
            raw = raw["certificate"]  # type: ignore[assignment]
        if not isinstance(raw, dict):
            raise InputError("certificate must be a JSON object")

        def vec(key: str) -> Optional[Tuple[int, ...]]:
            v = raw.get(key)
            return None if v is None else tuple(int(s) for s in v)  # type: ignore[union-attr]

        try:
            return cls(
                n=int(raw["n"]),
                rank=int(raw["rank"]),
                singular=bool(raw["singular"]),
                witness_kind=str(raw["witness_kind"]),
                prime=int(raw["prime"]) if raw.get("prime") is not None else None,
                pivots=tuple(int(c) for c in raw.get("pivots", ())),  # type: ignore[union-attr]
                null_right=vec("null_right"),
                null_left=vec("null_left"),
                primes_tried=tuple(int(p) for p in raw.get("primes_tried", ())),  # type: ignore[union-attr]
            )
        except (KeyError, TypeError, ValueError) as e:
            raise InputError(f"malformed certificate: {e!r}") from e


@dataclass(frozen=True)
class AcReport:
    p: Fraction
    is_almost_constant: bool
    lam: Optional[Fraction]
    match_count: int
    n: int

    def to_dict(self) -> Dict[str, object]:
        return {
            "p": str(self.p),
            "is_almost_constant": self.is_almost_constant,
            "lambda": None if self.lam is None else str(self.lam),
            "match_count": self.match_count,
            "n": self.n,
        }


@dataclass
class EacResult:
    """Outcome of the eAC test: no almost-constant vector in ker M or ker M^T."""

    status: str
    p: Fraction
    right_dim: int
    left_dim: int
    combinations_tested: int = 0
    witness: Optional[Tuple[int, ...]] = None
    witness_side: Optional[str] = None
    heuristic_sides: List[str] = field(default_factory=list)

    @property
    def holds(self) -> bool:
        return self.status != CERTIFIED_FALSE

    @property
    def certified(self) -> bool:
        return self.status != HEURISTIC_TRUE

    def to_dict(self) -> Dict[str, object]:
        return {
            "status": self.status,
            "p": str(self.p),
            "right_dim": self.right_dim,
            "left_dim": self.left_dim,
            "combinations_tested": self.combinations_tested,
            "witness": None if self.witness is None else [str(v) for v in self.witness],
            "witness_side": self.witness_side,
            "heuristic_sides": list(self.heuristic_sides),
        }


# -------------------------------------------------------------
# Input normalization
# -------------------------------------------------------------
def as_rows(m) -> Matrix:
    """Python-int rows from a Digraph, numpy array or nested sequence."""
    if isinstance(m, Digraph):
        return [[(b >> j) & 1 for j in range(m.n)] for b in m.out_bits]
    if isinstance(m, np.ndarray):
        if m.ndim != 2:
            raise InputError(f"expected a 2-d matrix, got shape {m.shape}")
        return [[int(v) for v in row] for row in m.tolist()]
    rows = [[int(v) for v in row] for row in m]
    if rows and any(len(r) != len(rows[0]) for r in rows):
        raise InputError("matrix rows have different lengths")
    return rows


def transpose_rows(rows: Matrix) -> Matrix:
    return [list(col) for col in zip(*rows)] if rows else []


def _require_square(rows: Matrix) -> int:
    n = len(rows)
    if n == 0 or any(len(r) != n for r in rows):
        raise InputError("expected a nonempty square matrix")
    return n


def _warn_if_irregular(rows: Matrix) -> None:
    row_sums = {sum(r) for r in rows}
    col_sums = {sum(c) for c in zip(*rows)}
    if len(row_sums) > 1 or len(col_sums) > 1 or row_sums != col_sums:
        logger.warning(
            "matrix_not_regular",
            extra={"meta": {"row_sums": sorted(row_sums), "col_sums": sorted(col_sums)}},
        )


# -------------------------------------------------------------
# Rank over F_p
# -------------------------------------------------------------
def _rank_mod_p_pivots(rows: Matrix, p: int) -> Tuple[int, List[int]]:
    a = np.array(rows, dtype=np.int64) % p
    m, ncols = a.shape
    r = 0
    pivots: List[int] = []
    for c in range(ncols):
        nz = np.flatnonzero(a[r:, c])
        if nz.size == 0:
            continue
        k = r + int(nz[0])
        if k != r:
            a[[r, k]] = a[[k, r]]
        inv = pow(int(a[r, c]), -1, p)
        a[r] = (a[r] * inv) % p
        below = np.flatnonzero(a[r + 1:, c]) + r + 1
        if below.size:
            a[below] = (a[below] - np.outer(a[below, c], a[r])) % p
        pivots.append(c)
        r += 1
        if r == m:
            break
    return r, pivots


def rank_mod_p(m, p: int) -> int:
    """Rank over the field with p elements (p prime, p <= 2**31)."""
    p = int(p)
    if not isprime(p):
        raise InputError(f"modulus {p} is not prime")
    if p > 2**31:
        raise InputError(f"modulus {p} exceeds 2**31 (residue products must fit in int64)")
    rows = as_rows(m)
    if not rows:
        return 0
    return _rank_mod_p_pivots(rows, p)[0]


def random_primes(
    rng: np.random.Generator,
    count: int = DEFAULT_PRIME_COUNT,
    low: int = DEFAULT_PRIME_LOW,
    high: int = DEFAULT_PRIME_HIGH,
) -> List[int]:
    """`count` distinct primes in [low, high), each the next prime after a uniform draw."""
    primes: List[int] = []
    while len(primes) < count:
        start = int(rng.integers(low, high))
        p = int(nextprime(start - 1))
        if p >= high:
            p = int(nextprime(low - 1))
        if p not in primes:
            primes.append(p)
    return primes


# -------------------------------------------------------------
# Exact arithmetic
# -------------------------------------------------------------
def exact_rank(m) -> int:
    """Rank over Q by fraction-free (Bareiss) elimination on Python ints."""
    a = [list(r) for r in as_rows(m)]
    if not a:
        return 0
    nrows, ncols = len(a), len(a[0])
    prev = 1
    r = 0
    for c in range(ncols):
        pivot = next((k for k in range(r, nrows) if a[k][c] != 0), None)
        if pivot is None:
            continue
        a[r], a[pivot] = a[pivot], a[r]
        arc = a[r][c]
        row_r = a[r]
        for k in range(r + 1, nrows):
            row_k = a[k]
            akc = row_k[c]
            for j in range(c + 1, ncols):
                row_k[j] = (arc * row_k[j] - akc * row_r[j]) // prev
            row_k[c] = 0
        prev = arc
        r += 1
        if r == nrows:
            break
    return r


def _rref(rows: Matrix) -> Tuple[List[List[Fraction]], List[int]]:
    a = [[Fraction(v) for v in r] for r in rows]
    nrows = len(a)
    ncols = len(a[0]) if a else 0
    pivots: List[int] = []
    r = 0
    for c in range(ncols):
        pivot = next((k for k in range(r, nrows) if a[k][c] != 0), None)
        if pivot is None:
            continue
        a[r], a[pivot] = a[pivot], a[r]
        inv = 1 / a[r][c]
        a[r] = [v * inv for v in a[r]]
        for k in range(nrows):
            if k != r and a[k][c] != 0:
                f = a[k][c]
                a[k] = [vk - f * vr for vk, vr in zip(a[k], a[r])]
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    return a[:r], pivots


def canonical_integer(vec: Sequence[Fraction]) -> Tuple[int, ...]:
    """Scale a nonzero rational vector to coprime integers, first nonzero positive."""
    fr = [Fraction(v) for v in vec]
    den = 1
    for v in fr:
        den = math.lcm(den, v.denominator)
    ints = [int(v * den) for v in fr]
    g = 0
    for v in ints:
        g = math.gcd(g, v)
    if g == 0:
        raise InputError("cannot canonicalize the zero vector")
    ints = [v // g for v in ints]
    first = next(v for v in ints if v != 0)
    if first < 0:
        ints = [-v for v in ints]
    return tuple(ints)


def kernel_basis(m) -> List[Tuple[int, ...]]:
    """Canonical integer basis of the right kernel; empty for full column rank."""
    rows = as_rows(m)
    if not rows:
        return []
    ncols = len(rows[0])
    reduced, pivots = _rref(rows)
    pivot_set = set(pivots)
    basis: List[Tuple[int, ...]] = []
    for f in range(ncols):
        if f in pivot_set:
            continue
        x = [Fraction(0)] * ncols
        x[f] = Fraction(1)
        for i, pc in enumerate(pivots):
            x[pc] = -reduced[i][f]
        basis.append(canonical_integer(x))
    return basis


def left_kernel_basis(m) -> List[Tuple[int, ...]]:
    return kernel_basis(transpose_rows(as_rows(m)))


def mat_vec(rows: Matrix, x: Sequence[int]) -> List[int]:
    return [sum(a * b for a, b in zip(r, x)) for r in rows]


# -------------------------------------------------------------
# Singularity
# -------------------------------------------------------------
def is_singular(
    m,
    rng: SeedLike = 0,
    primes: Optional[Iterable[int]] = None,
    prime_count: int = DEFAULT_PRIME_COUNT,
    prime_low: int = DEFAULT_PRIME_LOW,
    prime_high: int = DEFAULT_PRIME_HIGH,
) -> RankCertificate:
    """
    Modular-first singularity decision.

    A full-rank residue for any tried prime proves nonsingularity. Only if
    every prime reports a deficient rank does the exact path run; a singular
    verdict always carries exact right and left null vectors.
    """
    rows = as_rows(m)
    n = _require_square(rows)
    _warn_if_irregular(rows)

    tried = list(primes) if primes is not None else random_primes(as_rng(rng), prime_count, prime_low, prime_high)
    for p in tried:
        if not isprime(int(p)):
            raise InputError(f"modulus {p} is not prime")
        r, piv = _rank_mod_p_pivots(rows, int(p))
        if r == n:
            return RankCertificate(
                n=n, rank=n, singular=False, witness_kind=WITNESS_MOD_P,
                prime=int(p), pivots=tuple(piv), primes_tried=tuple(int(q) for q in tried),
            )

    rank = exact_rank(rows)
    if rank == n:
        logger.info("modular_rank_unlucky", extra={"meta": {"n": n, "primes": [int(p) for p in tried]}})
        return RankCertificate(n=n, rank=n, singular=False, witness_kind=WITNESS_EXACT,
                               primes_tried=tuple(int(q) for q in tried))

    right = kernel_basis(rows)[0]
    left = left_kernel_basis(rows)[0]
    return RankCertificate(
        n=n, rank=rank, singular=True, witness_kind=WITNESS_KERNEL,
        null_right=right, null_left=left, primes_tried=tuple(int(q) for q in tried),
    )


def verify_certificate(m, cert: RankCertificate) -> bool:
    """Re-check a certificate against the matrix it claims to describe."""
    rows = as_rows(m)
    n = _require_square(rows)
    if cert.n != n or cert.singular != (cert.rank < n):
        return False

    if cert.witness_kind == WITNESS_MOD_P:
        if cert.prime is None or not isprime(cert.prime) or cert.prime > 2**31:
            return False
        return cert.rank == n and _rank_mod_p_pivots(rows, cert.prime)[0] == n

    if cert.witness_kind == WITNESS_EXACT:
        return cert.rank == n and exact_rank(rows) == n

    if cert.witness_kind == WITNESS_KERNEL:
        x, y = cert.null_right, cert.null_left
        if x is None or y is None or len(x) != n or len(y) != n:
            return False
        for v in (x, y):
            if not any(v) or math.gcd(*v) != 1:
                return False
        if any(mat_vec(rows, x)) or any(mat_vec(transpose_rows(rows), y)):
            return False
        return exact_rank(rows) == cert.rank

    return False


# -------------------------------------------------------------
# Almost-constant vectors
# -------------------------------------------------------------
def _check_level(p) -> Fraction:
    p = Fraction(p)
    if not 0 < p < Fraction(1, 2):
        raise InputError(f"level p must lie in (0, 1/2), got {p}")
    return p


def ac_check(x: Sequence, p) -> AcReport:
    """Is x constant (= lambda) on at least (1-p)n coordinates?"""
    p = _check_level(p)
    xs = [Fraction(v) for v in x]
    if not xs or not any(xs):
        raise InputError("ac_check is defined on nonzero vectors only")
    n = len(xs)
    value, count = Counter(xs).most_common(1)[0]
    is_ac = count >= (1 - p) * n
    return AcReport(p=p, is_almost_constant=is_ac, lam=value if is_ac else None, match_count=count, n=n)


def _is_ac_int(vec: Sequence[int], threshold: Fraction) -> bool:
    if not any(vec):
        return False
    return Counter(vec).most_common(1)[0][1] >= threshold


def _combine(basis: List[Tuple[int, ...]], coeffs: Sequence[int]) -> Tuple[int, ...]:
    n = len(basis[0])
    out = [0] * n
    for c, b in zip(coeffs, basis):
        if c:
            for i in range(n):
                out[i] += c * b[i]
    return tuple(out)


def _search_ac(
    basis: List[Tuple[int, ...]],
    threshold: Fraction,
    rng: np.random.Generator,
    budget: int,
    coeff: int,
) -> Tuple[Optional[Tuple[int, ...]], int, bool]:
    """(witness, combinations tested, exhaustive?) for one kernel."""
    tested = 0
    for b in basis:
        tested += 1
        if _is_ac_int(b, threshold):
            return b, tested, True
    dim = len(basis)
    if dim == 1:
        # a 1-dim kernel is the line through its generator; AC is scale-invariant
        return None, tested, True
    if dim <= EAC_EXHAUSTIVE_DIM:
        for coeffs in itertools.product((-1, 0, 1), repeat=dim):
            if sum(1 for c in coeffs if c) < 2:
                continue
            tested += 1
            v = _combine(basis, coeffs)
            if _is_ac_int(v, threshold):
                return canonical_integer(v), tested, False
    if budget > 0:
        draws = rng.integers(-coeff, coeff + 1, size=(budget, dim)).tolist()
        for coeffs in draws:
            tested += 1
            v = _combine(basis, coeffs)
            if _is_ac_int(v, threshold):
                return canonical_integer(v), tested, False
    return None, tested, False


def eac_event(
    m,
    p,
    rng: SeedLike = 0,
    budget: int = DEFAULT_EAC_BUDGET,
    coeff: int = DEFAULT_EAC_COEFF,
) -> EacResult:
    """
    Does every almost-constant x satisfy Mx != 0 and x^T M != 0?

    certified_true  : kernels empty, or 1-dimensional with non-AC generators
    certified_false : an AC null vector was found (returned as witness)
    heuristic_true  : some kernel has dimension >= 2 and no AC vector turned
                      up among the tested combinations
    """
    p = _check_level(p)
    rows = as_rows(m)
    n = _require_square(rows)
    gen = as_rng(rng)
    threshold = (1 - p) * n

    # full rank mod a prime: both kernels are trivial
    for q in random_primes(gen, 1):
        if _rank_mod_p_pivots(rows, q)[0] == n:
            return EacResult(status=CERTIFIED_TRUE, p=p, right_dim=0, left_dim=0)

    right = kernel_basis(rows)
    left = left_kernel_basis(rows)
    result = EacResult(status=CERTIFIED_TRUE, p=p, right_dim=len(right), left_dim=len(left))
    for side, basis in (("right", right), ("left", left)):
        if not basis:
            continue
        witness, tested, exhaustive = _search_ac(basis, threshold, gen, budget, coeff)
        result.combinations_tested += tested
        if witness is not None:
            result.status = CERTIFIED_FALSE
            result.witness = witness
            result.witness_side = side
            return result
        if not exhaustive:
            result.heuristic_sides.append(side)
    if result.heuristic_sides:
        result.status = HEURISTIC_TRUE
    return result
