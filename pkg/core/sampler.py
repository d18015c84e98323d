"""
sampler.py

Random d-regular digraphs, uniform on the class of all of them, plus the
conditional class with "frozen" columns and exhaustive enumeration oracles.

Responsibilities:
- Configuration model with whole-matching rejection (exactly uniform)
- Hold-on-invalid switch chain (uniform is stationary; proposal is symmetric)
- Column-restricted switch chain for frozen column sets, with a max-flow
  completion check before any step
- Row-by-row backtracking enumeration and a profile-memoized exact count
- Method selection for the harness ("auto")

This module MUST NOT:
- Compute ranks or properties
- Write files
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Tuple

import networkx as nx
import numpy as np

from core.errors import CapExceededError, ConfigError, InfeasibleError, InputError, SamplerBudgetError
from core.graph import Digraph, circulant, complement, mask_of, members
from core.logging import get_logger
from core.rng import make_rng

logger = get_logger("sampler")

METHODS = ("auto", "configuration", "switch")
DEFAULT_BURN_IN_FACTOR = 20
DEFAULT_RETRY_BUDGET = 100_000
DEFAULT_ENUMERATE_CAP = 6
_STEP_BATCH = 1 << 16


# -------------------------------------------------------------
# Data structures
# -------------------------------------------------------------
def default_burn_in(n: int, d: int, factor: float = DEFAULT_BURN_IN_FACTOR) -> int:
    """factor * n*d * ln(n*d + 1) proposed moves."""
    return int(math.ceil(factor * n * d * math.log(n * d + 1)))


@dataclass
class ChainConfig:
    """Switch-chain settings; serialized inside run manifests."""

    burn_in_steps: int = 0
    thinning: int = 0
    seed: int = 0
    method: str = "auto"
    burn_in_factor: float = DEFAULT_BURN_IN_FACTOR

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ConfigError(f"sampler method must be one of {METHODS}, got {self.method!r}")
        if self.burn_in_steps < 0:
            raise ConfigError("burn_in_steps must be nonnegative")
        if self.thinning < 0:
            raise ConfigError("thinning must be nonnegative (0 = n*d)")

    def burn_in(self, n: int, d: int) -> int:
        """Configured burn-in, never below the default floor."""
        return max(int(self.burn_in_steps), default_burn_in(n, d, self.burn_in_factor))

    def thinning_for(self, n: int, d: int) -> int:
        return int(self.thinning) if self.thinning > 0 else n * d

    def to_dict(self) -> Dict[str, object]:
        return {
            "burn_in_steps": int(self.burn_in_steps),
            "thinning": int(self.thinning),
            "seed": str(int(self.seed)),
            "method": self.method,
            "burn_in_factor": self.burn_in_factor,
        }

    @classmethod
    def from_dict(cls, raw: Mapping[str, object]) -> "ChainConfig":
        return cls(
            burn_in_steps=int(raw.get("burn_in_steps", 0)),
            thinning=int(raw.get("thinning", 0)),
            seed=int(raw.get("seed", 0)),
            method=str(raw.get("method", "auto")),
            burn_in_factor=float(raw.get("burn_in_factor", DEFAULT_BURN_IN_FACTOR)),
        )


@dataclass(frozen=True)
class FrozenColumnSet:
    """Columns whose supports (in-neighbourhoods) are fixed."""

    n: int
    d: int
    f_supports: Mapping[int, frozenset] = field(default_factory=dict)

    def __post_init__(self) -> None:
        supports = {int(j): frozenset(int(i) for i in rows) for j, rows in dict(self.f_supports).items()}
        for j, rows in supports.items():
            if not 0 <= j < self.n:
                raise InputError(f"frozen column {j} out of range [0, {self.n})")
            if len(rows) != self.d:
                raise InputError(f"frozen column {j} must have exactly {self.d} rows, got {len(rows)}")
            if any(not 0 <= i < self.n for i in rows):
                raise InputError(f"frozen column {j} has a row outside [0, {self.n})")
        object.__setattr__(self, "f_supports", supports)
        loads = self.row_loads()
        over = [i for i, load in enumerate(loads) if load > self.d]
        if over:
            raise InfeasibleError(
                f"rows {over} already hold more than d={self.d} frozen ones",
                meta={"rows": over},
            )

    @property
    def i_set(self) -> frozenset:
        return frozenset(self.f_supports)

    def row_loads(self) -> List[int]:
        loads = [0] * self.n
        for rows in self.f_supports.values():
            for i in rows:
                loads[i] += 1
        return loads

    def matches(self, g: Digraph) -> bool:
        return all(frozenset(g.in_adj[j]) == rows for j, rows in self.f_supports.items())

    @classmethod
    def from_graph(cls, g: Digraph, columns: Iterable[int]) -> "FrozenColumnSet":
        return cls(g.n, g.d, {int(j): frozenset(g.in_adj[int(j)]) for j in columns})

    def to_dict(self) -> Dict[str, object]:
        return {
            "n": self.n,
            "d": self.d,
            "f_supports": {str(j): sorted(rows) for j, rows in sorted(self.f_supports.items())},
        }

    @classmethod
    def from_dict(cls, raw: Mapping[str, object]) -> "FrozenColumnSet":
        supports = {int(j): frozenset(rows) for j, rows in dict(raw.get("f_supports", {})).items()}
        return cls(int(raw["n"]), int(raw["d"]), supports)


# -------------------------------------------------------------
# Configuration model
# -------------------------------------------------------------
def configuration_acceptance(d: int) -> float:
    """Asymptotic probability that a random stub matching has no double edge."""
    return math.exp(-((d - 1) ** 2) / 2.0)


def sample_configuration(
    n: int, d: int, rng: np.random.Generator, retry_budget: int = DEFAULT_RETRY_BUDGET
) -> Digraph:
    """Exactly uniform sample: uniform stub matching, rejected unless simple."""
    if not 1 <= d <= n:
        raise InputError(f"need 1 <= d <= n, got n={n}, d={d}")
    owners = np.repeat(np.arange(n, dtype=np.int64), d)
    total = n * d
    for attempt in range(1, retry_budget + 1):
        heads = rng.permutation(total) // d
        codes = owners * n + heads
        if np.unique(codes).size == total:
            rows = heads.reshape(n, d)
            if attempt > 1:
                logger.debug("configuration_accepted", extra={"meta": {"n": n, "d": d, "attempts": attempt}})
            return Digraph(n, d, tuple(tuple(int(j) for j in r) for r in rows))
    raise SamplerBudgetError(
        f"configuration model found no simple graph in {retry_budget} matchings at n={n}, d={d}; "
        "use the switch chain (method='switch') for this degree",
        meta={"n": n, "d": d, "retry_budget": retry_budget,
              "estimated_acceptance": configuration_acceptance(d)},
    )


# -------------------------------------------------------------
# Switch chain
# -------------------------------------------------------------
class SwitchChain:
    """
    Mutable chain state. Confined to one worker.

    Each step draws two edge slots uniformly (among slots whose column is not
    frozen), proposes the switching, applies it when valid and holds
    otherwise.
    """

    def __init__(self, start: Digraph, rng: np.random.Generator, frozen_columns: Iterable[int] = ()):
        self.n = start.n
        self.d = start.d
        self.rng = rng
        self.frozen = frozenset(int(j) for j in frozen_columns)
        self.rows: List[int] = list(start.out_bits)
        # Only slots in free columns ever move.
        self.tails: List[int] = []
        self.heads: List[int] = []
        for i, row in enumerate(start.out_adj):
            for j in row:
                if j not in self.frozen:
                    self.tails.append(i)
                    self.heads.append(j)
        self.steps = 0
        self.accepted = 0

    def run(self, steps: int) -> int:
        """Advance `steps` proposals; returns the number of accepted moves."""
        m = len(self.heads)
        self.steps += steps
        if m < 2 or steps <= 0:
            return 0
        rows, tails, heads = self.rows, self.tails, self.heads
        accepted = 0
        remaining = steps
        while remaining > 0:
            batch = min(remaining, _STEP_BATCH)
            remaining -= batch
            draws = self.rng.integers(0, m, size=(batch, 2)).tolist()
            for a, b in draws:
                i1 = tails[a]
                i2 = tails[b]
                if i1 == i2:
                    continue
                j1 = heads[a]
                j2 = heads[b]
                if j1 == j2:
                    continue
                r1 = rows[i1]
                r2 = rows[i2]
                if (r1 >> j2) & 1 or (r2 >> j1) & 1:
                    continue
                flip = (1 << j1) | (1 << j2)
                rows[i1] = r1 ^ flip
                rows[i2] = r2 ^ flip
                heads[a] = j2
                heads[b] = j1
                accepted += 1
        self.accepted += accepted
        return accepted

    def snapshot(self) -> Digraph:
        return Digraph(self.n, self.d, tuple(tuple(members(b)) for b in self.rows))


def _chain_start(n: int, d: int, start: Optional[Digraph]) -> Digraph:
    if start is None:
        return circulant(n, d)
    if (start.n, start.d) != (n, d):
        raise InputError(f"start graph has (n,d)=({start.n},{start.d}), expected ({n},{d})")
    return start


def sample_switch_chain(
    n: int,
    d: int,
    cfg: ChainConfig,
    rng: np.random.Generator,
    start: Optional[Digraph] = None,
) -> Digraph:
    """Run the chain for the configured burn-in and return its state."""
    chain = SwitchChain(_chain_start(n, d, start), rng)
    chain.run(cfg.burn_in(n, d))
    return chain.snapshot()


def stream_switch_chain(
    n: int,
    d: int,
    cfg: ChainConfig,
    rng: np.random.Generator,
    count: int,
    start: Optional[Digraph] = None,
    frozen: Optional["FrozenColumnSet"] = None,
) -> Iterator[Digraph]:
    """Burn in once, then yield `count` states separated by cfg.thinning proposals."""
    if frozen is not None and frozen.f_supports:
        start = _completion_start(n, d, frozen, start)
        chain = SwitchChain(start, rng, frozen.i_set)
    else:
        chain = SwitchChain(_chain_start(n, d, start), rng)
    chain.run(cfg.burn_in(n, d))
    thin = cfg.thinning_for(n, d)
    for k in range(count):
        if k:
            chain.run(thin)
        yield chain.snapshot()
    logger.debug(
        "chain_stream_done",
        extra={"meta": {"n": n, "d": d, "steps": chain.steps, "accepted": chain.accepted}},
    )


# -------------------------------------------------------------
# Frozen columns
# -------------------------------------------------------------
def complete_frozen(frozen: FrozenColumnSet) -> Digraph:
    """
    One graph whose frozen columns match `frozen`, built from a max-flow on
    rows -> free columns; raises InfeasibleError if none exists.
    """
    n, d = frozen.n, frozen.d
    free_cols = [j for j in range(n) if j not in frozen.f_supports]
    loads = frozen.row_loads()

    rows: List[List[int]] = [[] for _ in range(n)]
    for j, supp in frozen.f_supports.items():
        for i in supp:
            rows[i].append(j)

    if free_cols:
        net = nx.DiGraph()
        for i in range(n):
            if d - loads[i] > 0:
                net.add_edge("s", ("r", i), capacity=d - loads[i])
                for j in free_cols:
                    net.add_edge(("r", i), ("c", j), capacity=1)
        for j in free_cols:
            net.add_edge(("c", j), "t", capacity=d)
        need = d * len(free_cols)
        value, flow = nx.maximum_flow(net, "s", "t") if net.number_of_edges() else (0, {})
        if value != need:
            raise InfeasibleError(
                f"frozen columns {sorted(frozen.i_set)} admit no d-regular completion "
                f"(max-flow {value} < {need})",
                meta={"i_set": sorted(frozen.i_set), "flow": value, "need": need},
            )
        for i in range(n):
            for (tag, j), units in flow.get(("r", i), {}).items():
                if units:
                    rows[i].append(j)
    elif any(load != d for load in loads):
        raise InfeasibleError("every column is frozen but some row sum differs from d")

    return Digraph(n, d, tuple(tuple(r) for r in rows))


def check_feasible(frozen: FrozenColumnSet) -> bool:
    try:
        complete_frozen(frozen)
    except InfeasibleError:
        return False
    return True


def _completion_start(n: int, d: int, frozen: FrozenColumnSet, start: Optional[Digraph]) -> Digraph:
    if (frozen.n, frozen.d) != (n, d):
        raise InputError(f"frozen set is for (n,d)=({frozen.n},{frozen.d}), expected ({n},{d})")
    if start is not None and frozen.matches(start):
        return start
    return complete_frozen(frozen)


def sample_conditional(
    n: int,
    d: int,
    frozen: FrozenColumnSet,
    cfg: ChainConfig,
    rng: np.random.Generator,
) -> Digraph:
    """
    A graph whose frozen columns equal frozen.f_supports, from the switch
    chain restricted to moves with both columns outside i_set. With no frozen
    columns this is exactly sample_switch_chain.
    """
    if not frozen.f_supports:
        return sample_switch_chain(n, d, cfg, rng)
    start = _completion_start(n, d, frozen, None)
    chain = SwitchChain(start, rng, frozen.i_set)
    chain.run(cfg.burn_in(n, d))
    return chain.snapshot()


# -------------------------------------------------------------
# Method selection
# -------------------------------------------------------------
def choose_method(n: int, d: int, requested: str = "auto") -> str:
    """
    Resolve "auto" into one of: complete, configuration,
    configuration_complement, switch.
    """
    if requested not in METHODS:
        raise ConfigError(f"unknown sampler method {requested!r}")
    if d == n:
        return "complete"
    if requested == "configuration":
        return "configuration"
    if requested == "switch":
        return "switch"
    small = min(d, n - d)
    if small <= 4 or configuration_acceptance(small) >= 0.01:
        return "configuration" if small == d else "configuration_complement"
    return "switch"


def sample_graph(
    n: int,
    d: int,
    cfg: ChainConfig,
    rng: np.random.Generator,
    retry_budget: int = DEFAULT_RETRY_BUDGET,
) -> Tuple[Digraph, str]:
    """One independent uniform sample and the method that produced it."""
    method = choose_method(n, d, cfg.method)
    if method == "complete":
        return circulant(n, n), method
    if method == "configuration":
        return sample_configuration(n, d, rng, retry_budget), method
    if method == "configuration_complement":
        return complement(sample_configuration(n, n - d, rng, retry_budget)), method
    return sample_switch_chain(n, d, cfg, rng), method


def sample_many(
    n: int,
    d: int,
    count: int,
    cfg: ChainConfig,
    seed: int,
    frozen: Optional[FrozenColumnSet] = None,
    retry_budget: int = DEFAULT_RETRY_BUDGET,
) -> Iterator[Digraph]:
    """
    `count` independent samples for an estimator, deterministic in `seed`.

    Sample k comes from stream (seed, k) whatever the method: chain methods
    (and every frozen set) run a fresh burn-in per sample, so counts drawn
    here are binomial in `count`.
    """
    for unit in sampling_plan(n, d, count, cfg, frozen=frozen):
        yield from draw_unit(n, d, unit, cfg, seed, frozen=frozen, retry_budget=retry_budget)


@dataclass(frozen=True)
class SampleUnit:
    """One independently seeded slice of a sample_many call."""

    key: int
    count: int = 1


def sampling_plan(
    n: int,
    d: int,
    count: int,
    cfg: ChainConfig,
    frozen: Optional[FrozenColumnSet] = None,
) -> List[SampleUnit]:
    """
    Split `count` samples into units whose streams do not depend on each
    other, so workers can draw them in any order.
    """
    choose_method(n, d, cfg.method)
    if frozen is not None and (frozen.n, frozen.d) != (n, d):
        raise InputError(f"frozen set is for (n,d)=({frozen.n},{frozen.d}), expected ({n},{d})")
    return [SampleUnit(k) for k in range(count)]


def draw_unit(
    n: int,
    d: int,
    unit: SampleUnit,
    cfg: ChainConfig,
    seed: int,
    frozen: Optional[FrozenColumnSet] = None,
    retry_budget: int = DEFAULT_RETRY_BUDGET,
) -> Iterator[Digraph]:
    for k in range(unit.key, unit.key + unit.count):
        rng = make_rng(seed, k)
        if frozen is not None and frozen.f_supports:
            yield sample_conditional(n, d, frozen, cfg, rng)
        else:
            yield sample_graph(n, d, cfg, rng, retry_budget)[0]


# -------------------------------------------------------------
# Enumeration oracles
# -------------------------------------------------------------
@lru_cache(maxsize=None)
def _count_profile(profile: Tuple[int, ...], rows_left: int, d: int) -> int:
    """Ways to fill rows_left rows of d ones given sorted remaining column capacities."""
    if rows_left == 0:
        return 1 if not any(profile) else 0
    if any(c > rows_left for c in profile):
        return 0
    groups: Dict[int, int] = {}
    for c in profile:
        groups[c] = groups.get(c, 0) + 1
    values = sorted(v for v in groups if v > 0)
    total = 0

    def place(idx: int, left: int, ways: int, taken: Dict[int, int]) -> None:
        nonlocal total
        if idx == len(values):
            if left:
                return
            new = []
            for v, mult in groups.items():
                k = taken.get(v, 0)
                new.extend([v - 1] * k)
                new.extend([v] * (mult - k))
            total += ways * _count_profile(tuple(sorted(new)), rows_left - 1, d)
            return
        v = values[idx]
        for k in range(0, min(groups[v], left) + 1):
            taken[v] = k
            place(idx + 1, left - k, ways * math.comb(groups[v], k), taken)
        taken.pop(v, None)

    place(0, d, 1, {})
    return total


def count_all(n: int, d: int) -> int:
    """|M_{n,d}| without materializing it."""
    if not 1 <= d <= n:
        raise InputError(f"need 1 <= d <= n, got n={n}, d={d}")
    return _count_profile(tuple([d] * n), n, d)


def enumerate_all(n: int, d: int, cap: int = DEFAULT_ENUMERATE_CAP) -> Iterator[Digraph]:
    """Every element of M_{n,d} exactly once, in lexicographic row order."""
    if not 1 <= d <= n:
        raise InputError(f"need 1 <= d <= n, got n={n}, d={d}")
    if n > cap:
        estimate = count_all(n, d) if n <= 12 else None
        raise CapExceededError(
            f"enumerate_all refused: n={n} exceeds cap {cap}"
            + (f" ({estimate} graphs)" if estimate is not None else ""),
            estimated_cost=estimate,
            meta={"n": n, "d": d, "cap": cap},
        )
    caps = [d] * n
    rows: List[Tuple[int, ...]] = []

    def backtrack(i: int) -> Iterator[Digraph]:
        if i == n:
            yield Digraph(n, d, tuple(rows))
            return
        rows_left = n - i
        forced = [j for j in range(n) if caps[j] == rows_left]
        if len(forced) > d:
            return
        optional = [j for j in range(n) if 0 < caps[j] < rows_left]
        for extra in itertools.combinations(optional, d - len(forced)):
            choice = tuple(sorted(forced + list(extra)))
            for j in choice:
                caps[j] -= 1
            rows.append(choice)
            yield from backtrack(i + 1)
            rows.pop()
            for j in choice:
                caps[j] += 1

    yield from backtrack(0)


def enumerate_conditional(n: int, d: int, frozen: FrozenColumnSet, cap: int = DEFAULT_ENUMERATE_CAP) -> Iterator[Digraph]:
    """enumerate_all filtered to graphs matching the frozen columns."""
    for g in enumerate_all(n, d, cap):
        if frozen.matches(g):
            yield g
