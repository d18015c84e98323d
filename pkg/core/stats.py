"""
stats.py

Interval estimates and test statistics shared by the experiment modules.

- Wilson score intervals (zero counts get the one-sided 95% bound)
- Collision estimator of sum_v P(X = v)^2 with a plug-in standard error
- Chi-square goodness of fit against a uniform or given law (scipy.stats)
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Dict, Hashable, Iterable, Optional, Sequence, Tuple

import numpy as np
from scipy import stats as sps

from core.errors import InputError

Z95 = 1.959963984540054


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi


def wilson_interval(successes: int, trials: int, z: float = Z95) -> Interval:
    """
    Wilson score interval. With zero successes the upper end is the exact
    one-sided bound 1 - 0.05**(1/trials) (about 3/trials).
    """
    if trials <= 0:
        return Interval(0.0, 1.0)
    if successes == 0:
        return Interval(0.0, 1.0 - 0.05 ** (1.0 / trials))
    p = successes / trials
    denom = 1.0 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    lo, hi = max(0.0, centre - half), min(1.0, centre + half)
    # guard against rounding pushing p_hat outside at the extremes
    return Interval(min(lo, p), max(hi, p))


def binomial_sigma(p: float, trials: int) -> float:
    return math.sqrt(max(p * (1 - p), 0.0) / trials) if trials > 0 else float("inf")


# -------------------------------------------------------------
# Collision estimator
# -------------------------------------------------------------
@dataclass(frozen=True)
class CollisionEstimate:
    samples: int
    collision_hat: float
    sigma: float
    max_atom_hat: float
    distinct: int


def collision_estimate(values: Iterable[Hashable]) -> CollisionEstimate:
    """
    Unbiased U-statistic for sum_v p_v^2: equal unordered pairs / C(N, 2).

    sigma uses the U-statistic variance
        (4(N-2)/(N(N-1))) (S3 - S2^2) + (2/(N(N-1))) (S2 - S2^2)
    with S2, S3 replaced by their unbiased sample estimates.
    """
    counts = Counter(values)
    n = sum(counts.values())
    if n < 2:
        return CollisionEstimate(n, float("nan"), float("inf"), 1.0 if n else float("nan"), len(counts))
    c = np.fromiter(counts.values(), dtype=np.float64)
    pairs = n * (n - 1) / 2.0
    s2 = float(np.sum(c * (c - 1)) / 2.0 / pairs)
    if n >= 3:
        s3 = float(np.sum(c * (c - 1) * (c - 2)) / (n * (n - 1) * (n - 2)))
    else:
        s3 = s2 * s2
    var = 4.0 * (n - 2) / (n * (n - 1)) * max(s3 - s2 * s2, 0.0) + 2.0 / (n * (n - 1)) * max(s2 - s2 * s2, 0.0)
    return CollisionEstimate(
        samples=n,
        collision_hat=s2,
        sigma=math.sqrt(var),
        max_atom_hat=float(c.max()) / n,
        distinct=len(counts),
    )


# -------------------------------------------------------------
# Goodness of fit
# -------------------------------------------------------------
@dataclass(frozen=True)
class ChiSquareResult:
    statistic: float
    p_value: float
    dof: int
    states: int

    def passes(self, alpha: float) -> bool:
        return self.p_value >= alpha


def chi_square_uniform(counts: Dict[Hashable, int], states: Sequence[Hashable]) -> ChiSquareResult:
    """Chi-square of observed counts against the uniform law on `states`."""
    observed = np.array([counts.get(s, 0) for s in states], dtype=np.float64)
    unknown = sum(v for k, v in counts.items()) - observed.sum()
    if unknown:
        raise InputError(f"{int(unknown)} observations fall outside the state space")
    stat, pval = sps.chisquare(observed)
    return ChiSquareResult(float(stat), float(pval), len(states) - 1, len(states))


def chi_square_expected(observed: Sequence[float], expected_probs: Sequence[float]) -> ChiSquareResult:
    obs = np.asarray(observed, dtype=np.float64)
    probs = np.asarray(expected_probs, dtype=np.float64)
    keep = probs > 0
    exp = probs[keep] / probs[keep].sum() * obs.sum()
    stat, pval = sps.chisquare(obs[keep], exp)
    return ChiSquareResult(float(stat), float(pval), int(keep.sum()) - 1, int(keep.sum()))


def z_score(observed: float, expected: float, sigma: float) -> Optional[float]:
    if sigma <= 0 or not math.isfinite(sigma):
        return None
    return (observed - expected) / sigma


def shape_exponent(d: int, j_size: int, n: int) -> Tuple[float, float]:
    """(-d|J| ln(n/(d|J|)), exp of it) with every constant set to 1."""
    dj = d * j_size
    if dj <= 0 or dj >= n:
        return 0.0, 1.0
    e = -dj * math.log(n / dj)
    return e, math.exp(e)
