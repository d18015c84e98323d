"""
harness.py

Experiment driver for DigraphLab.

Responsibilities:
- Load and validate experiment configs (JSON or TOML by suffix)
- Split every grid point into seeded work items and fan them out over a
  bounded process pool
- Reduce partial results in work-item order, so totals do not depend on
  the worker count
- Own every output file of a run (single writer): rows.jsonl, rows.csv,
  graphs.csv, report.json, manifest.json and the run index entry
- Replay a recorded run and compare its rows byte for byte

This module MUST NOT:
- Print (DigraphLab.py owns the terminal)
- Parse command-line arguments
"""
from __future__ import annotations

import copy
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Dict, Iterator, List, Optional, Sequence, Tuple

try:
    import tomllib  # Python 3.11+
except ModuleNotFoundError:
    import tomli as tomllib  # fallback

from core import __version__
from core.config import default_config
from core.errors import (
    CapExceededError,
    ConfigError,
    InfeasibleError,
    ReplayDivergenceError,
    SamplerBudgetError,
    StorageError,
)
from core.graph import Digraph, circulant, complement, delta_vector
from core.lo_kit import (
    atom_bound,
    atom_bound_holds,
    atom_law,
    atom_probability,
    atom_probability_naive,
    atom_query,
    canonical_vector,
    erdos_bound,
    erdos_lo_max_atom,
    max_atom,
    permutation_pair_estimate,
    shuffle_class_experiment,
)
from core.logging import LogContext, get_logger
from core.manifest import RunManifest, read_manifest, utc_now, write_manifest
from core.properties import (
    default_k_max,
    expansion_check,
    independence_number,
    omega_events,
    projection_event,
    projection_query,
    summarize_delta,
    summarize_projection,
    zero_minor_search,
)
from core.rank import CERTIFIED_FALSE, HEURISTIC_TRUE, eac_event, is_singular, random_primes
from core.rng import make_rng, mix
from core.sampler import (
    ChainConfig,
    FrozenColumnSet,
    SampleUnit,
    choose_method,
    count_all,
    draw_unit,
    enumerate_all,
    sampling_plan,
)
from core.stats import binomial_sigma, wilson_interval, z_score
from core.storage import (
    RunFiles,
    append_run_index,
    canonical_json,
    make_run_id,
    sha256_text,
    write_csv,
    write_json,
    write_jsonl,
)

logger = get_logger("harness")

EXPERIMENTS = ("psing-sweep", "property-suite", "anticonc", "lo-suite", "shuffle-suite", "enumerate")

# Per-experiment parameter blocks. Keys outside these are rejected.
DEFAULT_PARAMS: Dict[str, Dict[str, Any]] = {
    "psing-sweep": {
        "eac_p": "1/3",
        "complement_audit": False,
    },
    "property-suite": {
        "epsilon": "3/10",
        "eac_p": "1/3",
        # zero-minor sizes l = ceil(alpha*n), r = ceil(beta*n)
        "zero_minor_alpha": "1/10",
        "zero_minor_beta": "1/10",
        # 0 = floor(c0*eps*n/d)
        "k_max": 0,
    },
    "anticonc": {
        "j_sizes": [1, 2],
        # number of trailing columns frozen at the circulant's supports
        "frozen_columns": 0,
        # {} = off; otherwise j_size, a, lam, s_size (0 = all rows), direction
        "projection": {},
    },
    "lo-suite": {
        "d_max": 10,
        "naive_max": 12,
        "erdos_max": 20,
        # [k, d, samples] triples
        "permutation": [[5, 10, 100_000]],
    },
    "shuffle-suite": {
        # 0 = largest witnessed score capped at 2d/3
        "q": 0,
        # "" = q/(4d)
        "epsilon": "",
        "rows": [0, 1],
    },
    "enumerate": {
        "complement_audit": False,
    },
}

_GRIDLESS = ("lo-suite",)

# Work items hold at most this many independent samples.
TASK_CHUNK = 256

_AUX_KEY = 1
_REFERENCE_LABEL = "ln^3 d / sqrt d with constant 1 (shape only, never asserted)"


# -------------------------------------------------------------
# Column schemas (rows.csv / graphs.csv)
# -------------------------------------------------------------
POINT_COLUMNS: Dict[str, List[str]] = {
    "psing-sweep": [
        "n", "d", "samples", "singular_count", "p_hat", "wilson_95_lo", "wilson_95_hi",
        "reference_bound", "rank_n_minus_1", "rank_le_n_minus_2", "eac_fail_count",
        "eac_heuristic_count", "complement_disagreements", "method", "status",
    ],
    "property-suite": [
        "n", "d", "samples", "epsilon", "freq_omega_eps", "freq_omega2", "freq_gamma",
        "freq_omega0", "freq_eac_holds", "freq_eac_certified", "freq_singular",
        "alpha_min", "alpha_max", "alpha_exact", "method", "status",
    ],
    "anticonc": [
        "kind", "n", "d", "j_size", "frozen_columns", "samples", "max_atom_hat",
        "collision_hat", "sigma", "distinct", "chained_bound", "within_chained_bound",
        "collision_decreasing", "shape_value", "hits", "frequency", "wilson_95_lo",
        "wilson_95_hi", "sampler", "status",
    ],
    "lo-suite": [
        "kind", "d", "k", "m", "max_atom", "a", "bound", "holds", "naive_agrees",
        "expected", "matches", "samples", "hits", "frequency", "exact", "z", "within_3_sigma",
    ],
    "shuffle-suite": [
        "n", "d", "samples", "witnessed", "outside_omega2", "not_witnessed",
        "cap_exceeded", "bound_checked", "bound_violations", "in_bound_regime",
        "max_zero_fraction", "status",
    ],
    "enumerate": [
        "n", "d", "count", "enumerated", "count_matches", "singular_count", "p_exact",
        "p_float", "rank_n_minus_1", "rank_le_n_minus_2", "complement_count",
        "complement_symmetric", "complement_disagreements",
    ],
}

GRAPH_COLUMNS: Dict[str, List[str]] = {
    "property-suite": [
        "n", "d", "sample", "in_omega_eps", "in_omega2", "min_SJ_ratio", "min_pair_union",
        "worst_ratio", "in_gamma", "iso_number", "alpha", "alpha_exact", "omega0_found",
        "eac_status", "singular",
    ],
    "shuffle-suite": [
        "n", "d", "sample", "outcome", "q", "epsilon", "score", "m2", "s_size",
        "class_size", "zero_count", "zero_fraction", "bound", "bound_holds",
        "in_bound_regime",
    ],
}


# -------------------------------------------------------------
# Experiment config
# -------------------------------------------------------------
def _settings_from(app_cfg: Dict[str, Any]) -> Dict[str, Any]:
    """The application settings a run depends on; recorded in the manifest."""
    return {
        "sampler": {k: app_cfg["sampler"][k] for k in ("retry_budget", "enumerate_cap")},
        "rank": dict(app_cfg["rank"]),
        "properties": dict(app_cfg["properties"]),
        "lo": dict(app_cfg["lo"]),
    }


def _merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def _fraction(value: Any, name: str) -> Fraction:
    try:
        return Fraction(str(value))
    except (ValueError, ZeroDivisionError) as e:
        raise ConfigError(f"parameter {name} must be a rational number, got {value!r}") from e


def _int(value: Any, name: str, minimum: int = 0) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ConfigError(f"parameter {name} must be an integer >= {minimum}, got {value!r}")
    return value


@dataclass
class ExperimentConfig:
    experiment: str
    grid: List[Tuple[int, int]]
    n_samples: int
    master_seed: int
    sampler: ChainConfig = field(default_factory=ChainConfig)
    params: Dict[str, Any] = field(default_factory=dict)
    settings: Dict[str, Any] = field(default_factory=dict)
    output_dir: Optional[str] = None

    def __post_init__(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment must be one of {EXPERIMENTS}, got {self.experiment!r}")
        grid = []
        for point in self.grid:
            try:
                n, d = (int(v) for v in point)
            except (TypeError, ValueError) as e:
                raise ConfigError(f"grid point {point!r} is not an (n, d) pair") from e
            if not 1 <= d <= n:
                raise ConfigError(f"grid point ({n}, {d}) needs 1 <= d <= n")
            grid.append((n, d))
        self.grid = grid
        if not grid and self.experiment not in _GRIDLESS:
            raise ConfigError(f"{self.experiment} needs a nonempty grid")
        _int(self.n_samples, "n_samples", 1)
        if not 0 <= int(self.master_seed) < 2**64:
            raise ConfigError("master_seed must be a 64-bit unsigned integer")
        self.master_seed = int(self.master_seed)

        unknown = sorted(set(self.params) - set(DEFAULT_PARAMS[self.experiment]))
        if unknown:
            raise ConfigError(f"unknown parameters for {self.experiment}: {unknown}")
        self.params = _merge(DEFAULT_PARAMS[self.experiment], self.params)
        self.settings = _merge(_settings_from(default_config()), self.settings)
        _check_params(self)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "experiment": self.experiment,
            "grid": [[n, d] for n, d in self.grid],
            "n_samples": self.n_samples,
            "master_seed": str(self.master_seed),
            "sampler": self.sampler.to_dict(),
            "params": copy.deepcopy(self.params),
            "settings": copy.deepcopy(self.settings),
            "output_dir": self.output_dir,
        }

    @classmethod
    def from_dict(cls, raw: Dict[str, Any], app_cfg: Optional[Dict[str, Any]] = None) -> "ExperimentConfig":
        """
        Build from a parsed document. Application settings fill whatever the
        document leaves out; values recorded in a manifest always win.
        """
        app = app_cfg or default_config()
        if not isinstance(raw, dict):
            raise ConfigError("experiment config must be a table/object")
        try:
            sampler_raw = {
                "method": app["sampler"]["method"],
                "burn_in_factor": app["sampler"]["burn_in_factor"],
                "thinning": app["sampler"]["thinning"],
                **dict(raw.get("sampler", {})),
            }
            return cls(
                experiment=str(raw["experiment"]),
                grid=list(raw.get("grid", [])),
                n_samples=raw.get("n_samples", 1),
                master_seed=int(raw.get("master_seed", 0)),
                sampler=ChainConfig.from_dict(sampler_raw),
                params=dict(raw.get("params", {})),
                settings=_merge(_settings_from(app), dict(raw.get("settings", {}))),
                output_dir=raw.get("output_dir") or None,
            )
        except KeyError as e:
            raise ConfigError(f"experiment config is missing {e}") from e
        except (TypeError, ValueError) as e:
            raise ConfigError(f"malformed experiment config: {e}") from e

    # convenience accessors
    def setting(self, section: str, key: str) -> Any:
        return self.settings[section][key]

    @property
    def retry_budget(self) -> int:
        return int(self.settings["sampler"]["retry_budget"])


def _check_params(cfg: ExperimentConfig) -> None:
    """Fail on bad parameter values before any work starts."""
    p = cfg.params
    exp = cfg.experiment
    if "eac_p" in p and not 0 < _fraction(p["eac_p"], "eac_p") < Fraction(1, 2):
        raise ConfigError("eac_p must lie in (0, 1/2)")
    if exp == "property-suite":
        if not 0 < _fraction(p["epsilon"], "epsilon") < 1:
            raise ConfigError("epsilon must lie in (0, 1)")
        for key in ("zero_minor_alpha", "zero_minor_beta"):
            if not 0 < _fraction(p[key], key) <= 1:
                raise ConfigError(f"{key} must lie in (0, 1]")
        _int(p["k_max"], "k_max")
    elif exp == "anticonc":
        sizes = p["j_sizes"]
        if not isinstance(sizes, list) or not sizes:
            raise ConfigError("j_sizes must be a nonempty list")
        f = _int(p["frozen_columns"], "frozen_columns")
        for js in sizes:
            _int(js, "j_sizes[]", 1)
            for n, _ in cfg.grid:
                if js + f > n:
                    raise ConfigError(f"|J|={js} plus {f} frozen columns exceeds n={n}")
        proj = p["projection"]
        if proj:
            pj = _int(proj.get("j_size", 1), "projection.j_size", 1)
            for n, _ in cfg.grid:
                if pj + f > n:
                    raise ConfigError(f"projection |J|={pj} plus {f} frozen columns exceeds n={n}")
            _int(proj.get("s_size", 0), "projection.s_size")
            if _fraction(proj.get("a", "1/2"), "projection.a") <= 0:
                raise ConfigError("projection.a must be positive")
            _fraction(proj.get("lam", "0"), "projection.lam")
            if proj.get("direction", "above") not in ("above", "below"):
                raise ConfigError("projection.direction must be 'above' or 'below'")
    elif exp == "lo-suite":
        _int(p["d_max"], "d_max", 1)
        _int(p["naive_max"], "naive_max")
        _int(p["erdos_max"], "erdos_max")
        for entry in p["permutation"]:
            if not (isinstance(entry, list) and len(entry) == 3):
                raise ConfigError("permutation entries must be [k, d, samples]")
            k, d, samples = (_int(v, "permutation[]", 1) for v in entry)
            if k > d:
                raise ConfigError(f"permutation entry needs k <= d, got {entry}")
    elif exp == "shuffle-suite":
        _int(p["q"], "q")
        if p["epsilon"] != "" and not 0 < _fraction(p["epsilon"], "epsilon") < 1:
            raise ConfigError("epsilon must lie in (0, 1)")
        rows = p["rows"]
        if not (isinstance(rows, list) and len(rows) == 2 and rows[0] != rows[1]):
            raise ConfigError("rows must be two distinct row indices")
        for n, _ in cfg.grid:
            if max(rows) >= n:
                raise ConfigError(f"rows {rows} out of range for n={n}")


def load_experiment_config(path: Path, app_cfg: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
    """Read an experiment config; .json and .toml are accepted."""
    path = Path(path)
    try:
        if path.suffix.lower() == ".json":
            with path.open("r", encoding="utf-8") as f:
                raw = json.load(f)
        elif path.suffix.lower() == ".toml":
            with path.open("rb") as f:
                raw = tomllib.load(f)
        else:
            raise ConfigError(f"experiment config must end in .json or .toml: {path}")
    except OSError as e:
        raise ConfigError(f"cannot read experiment config {path}: {e}") from e
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as e:
        raise ConfigError(f"malformed experiment config {path}: {e}") from e
    return ExperimentConfig.from_dict(raw, app_cfg)


# -------------------------------------------------------------
# Work items
# -------------------------------------------------------------
@dataclass(frozen=True)
class WorkItem:
    """A slice of one grid point: sample units drawn from `seed`."""

    index: int
    n: int
    d: int
    seed: int
    units: Tuple[SampleUnit, ...] = ()
    offset: int = 0
    tag: Tuple[Any, ...] = ()


def _plan(
    cfg: ExperimentConfig,
    index: int,
    n: int,
    d: int,
    seed: int,
    count: int,
    frozen: Optional[FrozenColumnSet] = None,
    tag: Tuple[Any, ...] = (),
) -> List[WorkItem]:
    units = sampling_plan(n, d, count, cfg.sampler, frozen=frozen)
    items: List[WorkItem] = []
    batch: List[SampleUnit] = []
    size = offset = 0
    for u in units:
        if batch and size + u.count > TASK_CHUNK:
            items.append(WorkItem(index, n, d, seed, tuple(batch), offset, tag))
            offset += size
            batch, size = [], 0
        batch.append(u)
        size += u.count
    if batch:
        items.append(WorkItem(index, n, d, seed, tuple(batch), offset, tag))
    return items


def _draw(cfg: ExperimentConfig, item: WorkItem, frozen: Optional[FrozenColumnSet] = None) -> Iterator[Tuple[int, Digraph]]:
    """(global sample index, graph) for every sample of the item."""
    k = item.offset
    for unit in item.units:
        for g in draw_unit(item.n, item.d, unit, cfg.sampler, item.seed, frozen=frozen, retry_budget=cfg.retry_budget):
            yield k, g
            k += 1


def _aux_seed(item: WorkItem) -> int:
    return mix(item.seed, _AUX_KEY)


def _item_primes(cfg: ExperimentConfig, item: WorkItem) -> List[int]:
    return random_primes(
        make_rng(_aux_seed(item), item.offset, 0),
        cfg.setting("rank", "prime_count"),
        cfg.setting("rank", "prime_low"),
        cfg.setting("rank", "prime_high"),
    )


def _fan_out(fn: Callable[[Tuple[ExperimentConfig, WorkItem]], Any], cfg: ExperimentConfig,
             items: Sequence[WorkItem], workers: int) -> List[Any]:
    """Results in item order, whatever the pool size."""
    jobs = [(cfg, it) for it in items]
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
        return list(pool.map(fn, jobs))


def _failure(e: Exception) -> Dict[str, Any]:
    return {"error": f"{type(e).__name__}: {e}"}


def _point_seed(cfg: ExperimentConfig, *keys: int) -> int:
    return mix(cfg.master_seed, *keys)


def _ceil_frac(x: Fraction, n: int) -> int:
    return max(1, -((-x.numerator * n) // x.denominator))


def _freq(count: int, total: int) -> Optional[float]:
    return count / total if total else None


# -------------------------------------------------------------
# psing-sweep
# -------------------------------------------------------------
def _psing_task(job: Tuple[ExperimentConfig, WorkItem]) -> Dict[str, Any]:
    cfg, item = job
    n = item.n
    eac_p = Fraction(str(cfg.params["eac_p"]))
    audit = bool(cfg.params["complement_audit"]) and item.d < n
    primes = _item_primes(cfg, item)
    tally = dict.fromkeys(
        ("samples", "singular", "rank_n_minus_1", "rank_le_n_minus_2", "eac_fail", "eac_heuristic",
         "complement_disagreements"), 0)
    try:
        for k, g in _draw(cfg, item):
            cert = is_singular(g, primes=primes)
            tally["samples"] += 1
            if cert.singular:
                tally["singular"] += 1
                tally["rank_n_minus_1" if cert.rank == n - 1 else "rank_le_n_minus_2"] += 1
                ev = eac_event(g, eac_p, rng=make_rng(_aux_seed(item), k),
                               budget=cfg.setting("rank", "eac_budget"), coeff=cfg.setting("rank", "eac_coeff"))
                if ev.status == CERTIFIED_FALSE:
                    tally["eac_fail"] += 1
                elif ev.status == HEURISTIC_TRUE:
                    tally["eac_heuristic"] += 1
            if audit and is_singular(complement(g), primes=primes).singular != cert.singular:
                tally["complement_disagreements"] += 1
    except (SamplerBudgetError, InfeasibleError) as e:
        return _failure(e)
    return tally


def reference_bound(d: int) -> float:
    """ln^3 d / sqrt d, constant 1."""
    return math.log(d) ** 3 / math.sqrt(d)


def _psing_row(cfg: ExperimentConfig, n: int, d: int, parts: List[Dict[str, Any]]) -> Dict[str, Any]:
    row: Dict[str, Any] = {
        "kind": "point", "n": n, "d": d,
        "method": choose_method(n, d, cfg.sampler.method),
        "reference_bound": reference_bound(d),
    }
    errors = [p["error"] for p in parts if "error" in p]
    if errors:
        row.update({"samples": 0, "singular_count": 0, "status": f"skipped: {errors[0]}"})
        return row
    total = {k: sum(p[k] for p in parts) for k in parts[0]}
    ci = wilson_interval(total["singular"], total["samples"])
    row.update({
        "samples": total["samples"],
        "singular_count": total["singular"],
        "p_hat": total["singular"] / total["samples"],
        "wilson_95_lo": ci.lo,
        "wilson_95_hi": ci.hi,
        "rank_n_minus_1": total["rank_n_minus_1"],
        "rank_le_n_minus_2": total["rank_le_n_minus_2"],
        "eac_fail_count": total["eac_fail"],
        "eac_heuristic_count": total["eac_heuristic"],
        "complement_disagreements": total["complement_disagreements"] if cfg.params["complement_audit"] else None,
        "status": "ok",
    })
    return row


def _d2_comparisons(rows: List[Dict[str, Any]]) -> List[Dict[str, Any]]:
    """At each n, does p_hat(n,2) exceed p_hat(n,d) for d >= 5 at 95%?"""
    ok = [r for r in rows if r["status"] == "ok"]
    out = []
    for base in (r for r in ok if r["d"] == 2):
        for r in ok:
            if r["n"] == base["n"] and r["d"] >= 5:
                out.append({"n": r["n"], "d": r["d"], "holds": base["wilson_95_lo"] > r["wilson_95_hi"]})
    return out


def _run_psing(cfg: ExperimentConfig, workers: int) -> Tuple[List[Dict[str, Any]], Dict[str, Any]]:
    items: List[WorkItem] = []
    for idx, (n, d) in enumerate(cfg.grid):
        items.extend(_plan(cfg, idx, n, d, _point_seed(cfg, idx), cfg.n_samples))
    results = _fan_out(_psing_task, cfg, items, workers)

    rows = []
    for idx, (n, d) in enumerate(cfg.grid):
        with LogContext(point=f"n={n},d={d}"):
            parts = [r for it, r in zip(items, results) if it.index == idx]
            row = _psing_row(cfg, n, d, parts)
            if row["status"] != "ok":
                logger.warning("point_skipped", extra={"meta": {"reason": row["status"]}})
            else:
                logger.info("point_done", extra={"meta": {"singular": row["singular_count"], "samples": row["samples"]}})
            rows.append(row)
    summary = {
        "reference_bound": _REFERENCE_LABEL,
        "skipped": sum(1 for r in rows if r["status"] != "ok"),
        "total_samples": sum(r["samples"] for r in rows),
        "d2_comparisons": _d2_comparisons(rows),
    }
    return rows, summary


# -------------------------------------------------------------
# property-suite
# -------------------------------------------------------------
def _property_task(job: Tuple[ExperimentConfig, WorkItem]) -> Dict[str, Any]:
    cfg, item = job
    n, d = item.n, item.d
    props = cfg.settings["properties"]
    eps = Fraction(str(cfg.params["epsilon"]))
    eac_p = Fraction(str(cfg.params["eac_p"]))
    k_max = min(n, cfg.params["k_max"] or default_k_max(n, d, eps, props["c0"]))
    l = min(n, _ceil_frac(Fraction(str(cfg.params["zero_minor_alpha"])), n))
    r = min(n, _ceil_frac(Fraction(str(cfg.params["zero_minor_beta"])), n))

    rows: List[Dict[str, Any]] = []
    try:
        for k, g in _draw(cfg, item):
            aux = make_rng(_aux_seed(item), k)
            om = omega_events(g, eps, j_budget=props["subset_budget"], rng=aux, c0=props["c0"],
                              samples_per_size=props["samples_per_size"])
            ex = expansion_check(g, eps, k_max, budget=props["subset_budget"], rng=aux,
                                 samples_per_size=props["samples_per_size"])
            ind = independence_number(g, exact_cap=props["independence_exact_cap"], rng=aux,
                                      restarts=props["zero_minor_restarts"])
            zm = zero_minor_search(g, l, r, mode="heuristic", rng=aux, restarts=props["zero_minor_restarts"])
            ev = eac_event(g, eac_p, rng=aux, budget=cfg.setting("rank", "eac_budget"),
                           coeff=cfg.setting("rank", "eac_coeff"))
            rows.append({
                "kind": "graph", "n": n, "d": d, "sample": k,
                "in_omega_eps": om.in_omega_eps,
                "in_omega2": om.in_omega2,
                "min_SJ_ratio": str(om.min_sj_ratio),
                "min_pair_union": om.min_pair_union,
                "worst_ratio": str(ex.worst_ratio),
                "in_gamma": ex.in_gamma,
                "iso_number": None if ex.iso_number is None else str(ex.iso_number),
                "alpha": ind.size,
                "alpha_exact": ind.exact,
                "omega0_found": zm.found,
                "eac_status": ev.status,
                "singular": ev.right_dim > 0,
            })
    except (SamplerBudgetError, InfeasibleError) as e:
        return {**_failure(e), "rows": rows}
    return {"rows": rows}


def _property_point(cfg: ExperimentConfig, n: int, d: int, graphs: List[Dict[str, Any]],
                    errors: List[str]) -> Dict[str, Any]:
    total = len(graphs)

    def freq(key: str, value: Any = True) -> Optional[float]:
        return _freq(sum(1 for g in graphs if g[key] == value), total)

    alphas = [g["alpha"] for g in graphs]
    return {
        "kind": "point", "n": n, "d": d, "samples": total,
        "epsilon": str(Fraction(str(cfg.params["epsilon"]))),
        "freq_omega_eps": freq("in_omega_eps"),
        "freq_omega2": freq("in_omega2"),
        "freq_gamma": freq("in_gamma"),
        "freq_omega0": freq("omega0_found"),
        "freq_eac_holds": _freq(sum(1 for g in graphs if g["eac_status"] != CERTIFIED_FALSE), total),
        "freq_eac_certified": _freq(sum(1 for g in graphs if g["eac_status"] != HEURISTIC_TRUE), total),
        "freq_singular": freq("singular"),
        "alpha_min": min(alphas) if alphas else None,
        "alpha_max": max(alphas) if alphas else None,
        "alpha_exact": all(g["alpha_exact"] for g in graphs),
        "method": choose_method(n, d, cfg.sampler.method),
        "status": f"skipped: {errors[0]}" if errors else "ok",
    }


def _run_property(cfg: ExperimentConfig, workers: int) -> Tuple[List[Dict[str, Any]], Dict[str, Any]]:
    items: List[WorkItem] = []
    for idx, (n, d) in enumerate(cfg.grid):
        items.extend(_plan(cfg, idx, n, d, _point_seed(cfg, idx), cfg.n_samples))
    results = _fan_out(_property_task, cfg, items, workers)

    points, graphs_all = [], []
    for idx, (n, d) in enumerate(cfg.grid):
        with LogContext(point=f"n={n},d={d}"):
            parts = [r for it, r in zip(items, results) if it.index == idx]
            graphs = [g for p in parts for g in p["rows"]]
            errors = [p["error"] for p in parts if "error" in p]
            point = _property_point(cfg, n, d, graphs, errors)
            logger.info("point_done", extra={"meta": {"samples": point["samples"], "freq_omega2": point["freq_omega2"]}})
            points.append(point)
            graphs_all.extend(graphs)
    return points + graphs_all, {"graphs": len(graphs_all), "points": len(points)}


# -------------------------------------------------------------
# anticonc
# -------------------------------------------------------------
def _frozen_for(n: int, d: int, count: int) -> Optional[FrozenColumnSet]:
    if count <= 0:
        return None
    return FrozenColumnSet.from_graph(circulant(n, d), range(n - count, n))


def _projection_for(cfg: ExperimentConfig, n: int, frozen: Optional[FrozenColumnSet]):
    proj = cfg.params["projection"]
    js = int(proj.get("j_size", 1))
    a = Fraction(str(proj.get("a", "1/2")))
    lam = Fraction(str(proj.get("lam", "0")))
    direction = proj.get("direction", "above")
    i_set = sorted(frozen.i_set) if frozen is not None else []
    j_set = list(range(js))
    rest = [c for c in range(n) if c not in i_set and c not in j_set]
    shift = 2 * a if direction == "above" else -2 * a
    y = [Fraction(0)] * n
    for c in j_set:
        y[c] = lam + shift
    for c in rest:
        y[c] = lam
    s_size = int(proj.get("s_size", 0)) or n
    return projection_query(n, i_set, j_set, rest, y, a, range(min(s_size, n)), lam=lam, direction=direction)


def _anticonc_task(job: Tuple[ExperimentConfig, WorkItem]) -> Dict[str, Any]:
    cfg, item = job
    kind, j_size = item.tag
    frozen = _frozen_for(item.n, item.d, cfg.params["frozen_columns"])
    try:
        if kind == "delta":
            js = tuple(range(j_size))
            return {"masks": [delta_vector(g, js).mask for _, g in _draw(cfg, item, frozen)]}
        q = _projection_for(cfg, item.n, frozen)
        return {"hits": sum(1 for _, g in _draw(cfg, item, frozen) if projection_event(g, q))}
    except (SamplerBudgetError, InfeasibleError) as e:
        return _failure(e)


def _run_anticonc(cfg: ExperimentConfig, workers: int) -> Tuple[List[Dict[str, Any]], Dict[str, Any]]:
    f = cfg.params["frozen_columns"]
    items: List[WorkItem] = []
    for idx, (n, d) in enumerate(cfg.grid):
        frozen = _frozen_for(n, d, f)
        for ji, js in enumerate(cfg.params["j_sizes"]):
            items.extend(_plan(cfg, idx, n, d, _point_seed(cfg, idx, 1 + ji), cfg.n_samples, frozen, ("delta", js)))
        if cfg.params["projection"]:
            items.extend(_plan(cfg, idx, n, d, _point_seed(cfg, idx, 0), cfg.n_samples, frozen, ("projection", 0)))
    results = _fan_out(_anticonc_task, cfg, items, workers)

    rows: List[Dict[str, Any]] = []
    for idx, (n, d) in enumerate(cfg.grid):
        frozen = _frozen_for(n, d, f)
        with LogContext(point=f"n={n},d={d}"):
            previous: Optional[float] = None
            for js in cfg.params["j_sizes"]:
                parts = [r for it, r in zip(items, results) if it.index == idx and it.tag == ("delta", js)]
                base = {"kind": "delta", "n": n, "d": d, "j_size": js, "frozen_columns": f}
                errors = [p["error"] for p in parts if "error" in p]
                if errors:
                    rows.append({**base, "samples": 0, "status": f"skipped: {errors[0]}"})
                    continue
                est = summarize_delta(n, d, tuple(range(js)), (m for p in parts for m in p["masks"]), frozen)
                rows.append({
                    **base,
                    "samples": est.samples,
                    "max_atom_hat": est.max_atom_hat,
                    "collision_hat": est.collision_hat,
                    "sigma": est.sigma,
                    "distinct": est.distinct,
                    "chained_bound": est.chained_bound,
                    "within_chained_bound": est.collision_hat <= est.chained_bound + 5 * est.sigma,
                    "collision_decreasing": None if previous is None else est.collision_hat < previous,
                    "shape_value": est.shape_value,
                    "advisory": dict(est.advisory),
                    "sampler": "conditional (heuristic)" if est.heuristic else "uniform",
                    "status": "ok",
                })
                previous = est.collision_hat
            if cfg.params["projection"]:
                parts = [r for it, r in zip(items, results) if it.index == idx and it.tag[0] == "projection"]
                errors = [p["error"] for p in parts if "error" in p]
                base = {"kind": "projection", "n": n, "d": d, "frozen_columns": f}
                if errors:
                    rows.append({**base, "samples": 0, "status": f"skipped: {errors[0]}"})
                    continue
                q = _projection_for(cfg, n, frozen)
                est = summarize_projection(n, d, q, sum(p["hits"] for p in parts), cfg.n_samples, frozen)
                rows.append({
                    **base,
                    "j_size": len(q.j_set),
                    "samples": est.samples,
                    "hits": est.hits,
                    "frequency": est.frequency,
                    "wilson_95_lo": est.interval.lo,
                    "wilson_95_hi": est.interval.hi,
                    "shape_value": est.shape_value,
                    "advisory": dict(est.advisory),
                    "sampler": "conditional (heuristic)" if est.heuristic else "uniform",
                    "status": "ok",
                })
    return rows, {"rows": len(rows)}


# -------------------------------------------------------------
# lo-suite
# -------------------------------------------------------------
def _lo_task(job: Tuple[ExperimentConfig, WorkItem]) -> List[Dict[str, Any]]:
    cfg, item = job
    lo = cfg.settings["lo"]
    kind = item.tag[0]
    rows: List[Dict[str, Any]] = []
    if kind == "atom":
        d = item.d
        naive = 2 * d <= cfg.params["naive_max"]
        for k in range(1, d + 1):
            v = canonical_vector(k, d)
            prob, a = max_atom(v, cap=lo["atom_exact_cap"])
            agrees = None
            if naive:
                agrees = all(
                    atom_probability(atom_query(v, k, s), cap=lo["atom_exact_cap"]) == atom_probability_naive(atom_query(v, k, s))
                    for s in atom_law(v, cap=lo["atom_exact_cap"])
                )
            rows.append({
                "kind": "atom", "d": d, "k": k,
                "max_atom": str(prob), "a": str(a),
                "bound": atom_bound(k), "holds": atom_bound_holds(prob, k),
                "naive_agrees": agrees,
            })
    elif kind == "erdos":
        for m in range(1, cfg.params["erdos_max"] + 1):
            x = [1] * m
            exact = erdos_lo_max_atom(x, cap=lo["erdos_exact_cap"])
            expected = Fraction(math.comb(m, m // 2), 2**m)
            rows.append({
                "kind": "erdos", "m": m,
                "max_atom": str(exact), "expected": str(expected), "matches": exact == expected,
                "bound": erdos_bound(x), "holds": exact * exact * m <= 1,
            })
    else:
        k, d, samples = item.tag[1:]
        est = permutation_pair_estimate(k, d, samples, rng=make_rng(item.seed))
        sigma = binomial_sigma(float(est.exact), samples)
        z = z_score(est.frequency, float(est.exact), sigma)
        rows.append({
            "kind": "permutation", "k": k, "d": d, "samples": samples,
            "hits": est.hits, "frequency": est.frequency,
            "exact": str(est.exact), "z": z,
            "within_3_sigma": est.hits == 0 if z is None else abs(z) <= 3,
            "bound": est.bound, "holds": float(est.exact) <= est.bound,
        })
    return rows


def _run_lo(cfg: ExperimentConfig, workers: int) -> Tuple[List[Dict[str, Any]], Dict[str, Any]]:
    items = [WorkItem(i, 0, d, _point_seed(cfg, i), tag=("atom",)) for i, d in enumerate(range(1, cfg.params["d_max"] + 1))]
    items.append(WorkItem(len(items), 0, 0, _point_seed(cfg, len(items)), tag=("erdos",)))
    for k, d, samples in cfg.params["permutation"]:
        items.append(WorkItem(len(items), 0, d, _point_seed(cfg, len(items)), tag=("permutation", k, d, samples)))
    rows = [r for part in _fan_out(_lo_task, cfg, items, workers) for r in part]

    violations = [r for r in rows if r.get("holds") is False and r["kind"] != "permutation"]
    if violations:
        logger.warning("lo_bound_violated", extra={"meta": {"count": len(violations)}})
    summary = {
        "atom_bound_violations": sum(1 for r in rows if r["kind"] == "atom" and not r["holds"]),
        "naive_disagreements": sum(1 for r in rows if r["kind"] == "atom" and r["naive_agrees"] is False),
        "erdos_mismatches": sum(1 for r in rows if r["kind"] == "erdos" and not r["matches"]),
    }
    return rows, summary


# -------------------------------------------------------------
# shuffle-suite
# -------------------------------------------------------------
def _shuffle_task(job: Tuple[ExperimentConfig, WorkItem]) -> Dict[str, Any]:
    cfg, item = job
    lo = cfg.settings["lo"]
    q = cfg.params["q"] or None
    eps = cfg.params["epsilon"] or None
    pair = tuple(cfg.params["rows"])
    rows: List[Dict[str, Any]] = []
    try:
        for k, g in _draw(cfg, item):
            base = {"kind": "graph", "n": item.n, "d": item.d, "sample": k}
            try:
                rep = shuffle_class_experiment(
                    g, q=q, epsilon=eps, rng=make_rng(_aux_seed(item), k), rows=pair,
                    combos=lo["shuffle_combos"], coeff=lo["shuffle_coeff"],
                    class_cap=lo["shuffle_class_cap"], strict=False,
                )
            except CapExceededError as e:
                rows.append({**base, "outcome": "cap_exceeded", "s_size": e.meta.get("s_size")})
                continue
            rows.append({**base, **rep.to_dict()})
    except (SamplerBudgetError, InfeasibleError) as e:
        return {**_failure(e), "rows": rows}
    return {"rows": rows}


def _shuffle_point(n: int, d: int, graphs: List[Dict[str, Any]], errors: List[str]) -> Dict[str, Any]:
    def count(outcome: str) -> int:
        return sum(1 for g in graphs if g["outcome"] == outcome)

    checked = [g for g in graphs if g.get("bound_holds") is not None]
    fractions = [Fraction(g["zero_fraction"]) for g in graphs if g.get("zero_fraction") is not None]
    return {
        "kind": "point", "n": n, "d": d, "samples": len(graphs),
        "witnessed": count("ok"),
        "outside_omega2": count("outside_omega2"),
        "not_witnessed": count("not_witnessed"),
        "cap_exceeded": count("cap_exceeded"),
        "bound_checked": len(checked),
        "bound_violations": sum(1 for g in checked if not g["bound_holds"]),
        "in_bound_regime": sum(1 for g in graphs if g.get("in_bound_regime")),
        "max_zero_fraction": str(max(fractions)) if fractions else None,
        "status": f"skipped: {errors[0]}" if errors else "ok",
    }


def _run_shuffle(cfg: ExperimentConfig, workers: int) -> Tuple[List[Dict[str, Any]], Dict[str, Any]]:
    items: List[WorkItem] = []
    for idx, (n, d) in enumerate(cfg.grid):
        items.extend(_plan(cfg, idx, n, d, _point_seed(cfg, idx), cfg.n_samples))
    results = _fan_out(_shuffle_task, cfg, items, workers)

    points, graphs_all = [], []
    for idx, (n, d) in enumerate(cfg.grid):
        with LogContext(point=f"n={n},d={d}"):
            parts = [r for it, r in zip(items, results) if it.index == idx]
            graphs = [g for p in parts for g in p["rows"]]
            point = _shuffle_point(n, d, graphs, [p["error"] for p in parts if "error" in p])
            logger.info("point_done", extra={"meta": {"witnessed": point["witnessed"], "samples": point["samples"]}})
            points.append(point)
            graphs_all.extend(graphs)
    return points + graphs_all, {"graphs": len(graphs_all), "points": len(points)}


# -------------------------------------------------------------
# enumerate
# -------------------------------------------------------------
def _enumerate_task(job: Tuple[ExperimentConfig, WorkItem]) -> Dict[str, Any]:
    cfg, item = job
    n, d = item.n, item.d
    cap = cfg.setting("sampler", "enumerate_cap")
    primes = _item_primes(cfg, item)
    audit = bool(cfg.params["complement_audit"]) and d < n
    tally = dict.fromkeys(("enumerated", "singular", "rank_n_minus_1", "rank_le_n_minus_2", "disagree"), 0)
    for g in enumerate_all(n, d, cap):
        tally["enumerated"] += 1
        cert = is_singular(g, primes=primes)
        if cert.singular:
            tally["singular"] += 1
            tally["rank_n_minus_1" if cert.rank == n - 1 else "rank_le_n_minus_2"] += 1
        if audit and is_singular(complement(g), primes=primes).singular != cert.singular:
            tally["disagree"] += 1
    return tally


def _run_enumerate(cfg: ExperimentConfig, workers: int) -> Tuple[List[Dict[str, Any]], Dict[str, Any]]:
    cap = cfg.setting("sampler", "enumerate_cap")
    too_big = [(n, d) for n, d in cfg.grid if n > cap]
    if too_big:
        n, d = too_big[0]
        raise CapExceededError(
            f"enumerate refused: n={n} exceeds enumerate_cap {cap}",
            estimated_cost=count_all(n, d) if n <= 12 else None,
            meta={"points": [list(p) for p in too_big]},
        )
    items = [WorkItem(idx, n, d, _point_seed(cfg, idx)) for idx, (n, d) in enumerate(cfg.grid)]
    results = _fan_out(_enumerate_task, cfg, items, workers)

    rows = []
    for (n, d), t in zip(cfg.grid, results):
        total = count_all(n, d)
        comp = count_all(n, n - d) if d < n else None
        p = Fraction(t["singular"], t["enumerated"])
        rows.append({
            "kind": "point", "n": n, "d": d,
            "count": total,
            "enumerated": t["enumerated"],
            "count_matches": total == t["enumerated"],
            "singular_count": t["singular"],
            "p_exact": str(p),
            "p_float": float(p),
            "rank_n_minus_1": t["rank_n_minus_1"],
            "rank_le_n_minus_2": t["rank_le_n_minus_2"],
            "complement_count": comp,
            "complement_symmetric": None if comp is None else comp == total,
            "complement_disagreements": t["disagree"] if cfg.params["complement_audit"] else None,
        })
    return rows, {"points": len(rows)}


_RUNNERS: Dict[str, Callable[[ExperimentConfig, int], Tuple[List[Dict[str, Any]], Dict[str, Any]]]] = {
    "psing-sweep": _run_psing,
    "property-suite": _run_property,
    "anticonc": _run_anticonc,
    "lo-suite": _run_lo,
    "shuffle-suite": _run_shuffle,
    "enumerate": _run_enumerate,
}


# -------------------------------------------------------------
# Reports
# -------------------------------------------------------------
def rows_text(rows: Sequence[Dict[str, Any]]) -> str:
    """The exact bytes of rows.jsonl (as text)."""
    return "".join(canonical_json(r) + "\n" for r in rows)


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    rows: List[Dict[str, Any]]
    summary: Dict[str, Any]
    manifest: RunManifest
    runtime_ms: int
    folder: Optional[Path] = None

    @property
    def point_rows(self) -> List[Dict[str, Any]]:
        return [r for r in self.rows if r.get("kind") != "graph"]

    @property
    def graph_rows(self) -> List[Dict[str, Any]]:
        return [r for r in self.rows if r.get("kind") == "graph"]

    def envelope(self) -> Dict[str, Any]:
        return {
            "op": self.config.experiment,
            "params": self.config.to_dict(),
            "seed": str(self.config.master_seed),
            "n_samples": self.config.n_samples,
            "result": {"rows": self.rows, "summary": self.summary},
            "runtime_ms": self.runtime_ms,
        }


def _write_run(report: ExperimentReport, runs_dir: Optional[Path], run_index: Optional[Path]) -> Path:
    cfg = report.config
    if cfg.output_dir:
        folder = Path(cfg.output_dir).expanduser()
    elif runs_dir is not None:
        folder = Path(runs_dir) / report.manifest.run_id
    else:
        raise ConfigError("no output folder: set output_dir or pass runs_dir")
    files = RunFiles(folder)

    write_jsonl(files.rows_jsonl, report.rows)
    write_csv(files.rows_csv, report.point_rows, POINT_COLUMNS[cfg.experiment])
    if cfg.experiment in GRAPH_COLUMNS:
        write_csv(files.graphs_csv, report.graph_rows, GRAPH_COLUMNS[cfg.experiment])
    write_json(files.report, report.envelope())
    write_manifest(files.manifest, report.manifest)

    if run_index is not None:
        append_run_index(run_index, {
            "run_id": report.manifest.run_id,
            "experiment": cfg.experiment,
            "folder": str(folder),
            "started_at": report.manifest.started_at,
            "finished_at": report.manifest.finished_at,
            "row_count": report.manifest.row_count,
            "rows_digest": report.manifest.rows_digest,
        })
    return folder


def run_experiment(
    cfg: ExperimentConfig,
    *,
    workers: int = 1,
    runs_dir: Optional[Path] = None,
    run_index: Optional[Path] = None,
    write: bool = True,
) -> ExperimentReport:
    """Run any experiment; with `write`, emit its run folder and index entry."""
    manifest = RunManifest(
        run_id=make_run_id(cfg.experiment),
        experiment=cfg.experiment,
        config=cfg.to_dict(),
        master_seed=cfg.master_seed,
        workers=workers,
    )
    started = time.perf_counter()
    with LogContext(run_id=manifest.run_id, experiment=cfg.experiment):
        logger.info("run_started", extra={"meta": {
            "grid": cfg.grid, "n_samples": cfg.n_samples, "workers": workers, "seed": str(cfg.master_seed),
        }})
        rows, summary = _RUNNERS[cfg.experiment](cfg, max(1, workers))
        manifest.finished_at = utc_now()
        manifest.row_count = len(rows)
        manifest.rows_digest = sha256_text(rows_text(rows))
        report = ExperimentReport(cfg, rows, summary, manifest, int((time.perf_counter() - started) * 1000))
        if write:
            report.folder = _write_run(report, runs_dir, run_index)
        logger.info("run_finished", extra={"meta": {
            "rows": len(rows), "runtime_ms": report.runtime_ms,
            "folder": str(report.folder) if report.folder else None,
        }})
    return report


def _require(cfg: ExperimentConfig, experiment: str) -> None:
    if cfg.experiment != experiment:
        raise ConfigError(f"config is for {cfg.experiment!r}, expected {experiment!r}")


def run_psing_sweep(cfg: ExperimentConfig, **kwargs: Any) -> ExperimentReport:
    _require(cfg, "psing-sweep")
    return run_experiment(cfg, **kwargs)


def run_property_suite(cfg: ExperimentConfig, **kwargs: Any) -> ExperimentReport:
    _require(cfg, "property-suite")
    return run_experiment(cfg, **kwargs)


def run_anticonc(cfg: ExperimentConfig, **kwargs: Any) -> ExperimentReport:
    _require(cfg, "anticonc")
    return run_experiment(cfg, **kwargs)


def run_lo_suite(cfg: ExperimentConfig, **kwargs: Any) -> ExperimentReport:
    _require(cfg, "lo-suite")
    return run_experiment(cfg, **kwargs)


def run_shuffle_suite(cfg: ExperimentConfig, **kwargs: Any) -> ExperimentReport:
    _require(cfg, "shuffle-suite")
    return run_experiment(cfg, **kwargs)


def run_enumerate(cfg: ExperimentConfig, **kwargs: Any) -> ExperimentReport:
    _require(cfg, "enumerate")
    return run_experiment(cfg, **kwargs)


# -------------------------------------------------------------
# Replay
# -------------------------------------------------------------
def _clip(line: Optional[str], width: int = 200) -> Optional[str]:
    if line is None or len(line) <= width:
        return line
    return line[:width] + "..."


def diff_rows(recorded: Sequence[str], replayed: Sequence[str], limit: int = 10) -> List[Dict[str, Any]]:
    """First `limit` differing rows as {row, recorded, replayed}."""
    out = []
    for i in range(max(len(recorded), len(replayed))):
        a = recorded[i] if i < len(recorded) else None
        b = replayed[i] if i < len(replayed) else None
        if a != b:
            out.append({"row": i, "recorded": _clip(a), "replayed": _clip(b)})
            if len(out) >= limit:
                break
    return out


def replay(manifest_path: Path, *, workers: int = 1) -> ExperimentReport:
    """
    Re-run a recorded experiment and verify its rows byte for byte.

    An edited config (anything but the seed) fails the shape-digest check
    in read_manifest before anything runs; a config seed that disagrees
    with the manifest seed is reported as a divergence.
    """
    manifest_path = Path(manifest_path)
    folder = manifest_path if manifest_path.is_dir() else manifest_path.parent
    recorded_manifest = read_manifest(manifest_path)
    if recorded_manifest.tool_version != __version__:
        logger.warning("replay_version_mismatch", extra={"meta": {
            "recorded": recorded_manifest.tool_version, "current": __version__,
        }})

    raw = dict(recorded_manifest.config)
    config_seed = raw.get("master_seed")
    if config_seed is not None and str(config_seed) != str(recorded_manifest.master_seed):
        raise ReplayDivergenceError(
            f"manifest of {recorded_manifest.run_id} records two master seeds "
            f"(manifest {recorded_manifest.master_seed}, config {config_seed})",
            diff=[{"row": "master_seed", "recorded": str(recorded_manifest.master_seed), "replayed": str(config_seed)}],
            meta={"run_id": recorded_manifest.run_id},
        )
    raw["master_seed"] = recorded_manifest.master_seed
    raw["output_dir"] = None
    cfg = ExperimentConfig.from_dict(raw)

    rows_file = RunFiles(folder).rows_jsonl
    try:
        recorded = rows_file.read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise StorageError(f"cannot read recorded rows {rows_file}: {e}", meta={"path": str(rows_file)}) from e

    with LogContext(replay_of=recorded_manifest.run_id):
        report = run_experiment(cfg, workers=workers, write=False)
        fresh = rows_text(report.rows).splitlines()
        diff = diff_rows(recorded, fresh)
        if diff:
            logger.error("replay_diverged", extra={"meta": {"rows_recorded": len(recorded), "rows_replayed": len(fresh)}})
            raise ReplayDivergenceError(
                f"replay of {recorded_manifest.run_id} diverged ({len(recorded)} recorded rows, "
                f"{len(fresh)} replayed; first difference at row {diff[0]['row']})",
                diff=diff,
                meta={"run_id": recorded_manifest.run_id},
            )
        logger.info("replay_identical", extra={"meta": {"rows": len(fresh)}})
    return report
