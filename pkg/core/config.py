# core/config.py
"""
Application settings for DigraphLab.

Responsibilities:
- Define default settings (sampler, rank engine, property lab, lo-kit, harness)
- Load config.toml if it exists, deep-merged over the defaults
- Create config.toml with defaults if missing
- Validate every section and normalize paths
- Write config atomically
- Resolve the worker count (flag > DL_WORKERS > config > CPU count)

This module MUST NOT:
- Run experiments
- Parse experiment configs (see core.harness)
"""
from __future__ import annotations

import copy
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Optional

try:
    import tomllib  # Python 3.11+
except ModuleNotFoundError:
    import tomli as tomllib  # fallback

import tomli_w

from core.errors import ConfigError

WORKERS_ENV = "DL_WORKERS"

DEFAULT_CONFIG: Dict[str, Any] = {
    "paths": {
        # Empty string = use the OS default resolved by core.paths
        "data_dir": "",
        "logs_dir": "",
        "runs_dir": "",
    },
    "sampler": {
        # auto | configuration | switch
        "method": "auto",
        # burn-in = burn_in_factor * n*d * ln(n*d + 1) proposed moves
        "burn_in_factor": 20,
        # 0 = n*d proposals between states of `sample --stream`
        "thinning": 0,
        "retry_budget": 100_000,
        "enumerate_cap": 6,
    },
    "rank": {
        "prime_count": 3,
        "prime_low": 2**30,
        "prime_high": 2**31,
        "eac_budget": 1000,
        "eac_coeff": 3,
    },
    "properties": {
        "subset_budget": 1_000_000,
        "samples_per_size": 10_000,
        "zero_minor_restarts": 50,
        "independence_exact_cap": 40,
        "c0": 0.1,
    },
    "lo": {
        "atom_exact_cap": 32,
        "erdos_exact_cap": 24,
        "shuffle_combos": 200,
        "shuffle_coeff": 5,
        "shuffle_class_cap": 40,
    },
    "harness": {
        # 0 = DL_WORKERS or CPU count
        "workers": 0,
        "log_level": "INFO",
    },
}

_SAMPLER_METHODS = ("auto", "configuration", "switch")


# ---------------------------------------------------------
# Helpers
# ---------------------------------------------------------
def _expand_path(p: str) -> str:
    """Expand ~ and environment variables and return absolute path."""
    return str(Path(os.path.expandvars(os.path.expanduser(p))).resolve())


def _normalize_paths(cfg: Dict[str, Any]) -> None:
    section = cfg.get("paths", {})
    for key in ("data_dir", "logs_dir", "runs_dir"):
        v = section.get(key)
        if isinstance(v, str) and v:
            section[key] = _expand_path(v)


def _require_int(section: str, key: str, value: Any, minimum: int) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ConfigError(f"[{section}] {key} must be an integer >= {minimum}, got {value!r}")
    return value


def _validate(cfg: Dict[str, Any]) -> None:
    """Validate every section in-place."""
    sampler = cfg["sampler"]
    method = str(sampler.get("method", "auto")).lower()
    if method not in _SAMPLER_METHODS:
        raise ConfigError(f"[sampler] method must be one of {_SAMPLER_METHODS}, got {method!r}")
    sampler["method"] = method
    for key, minimum in (("burn_in_factor", 0), ("thinning", 0), ("retry_budget", 1),
                         ("enumerate_cap", 1)):
        _require_int("sampler", key, sampler.get(key), minimum)

    rank = cfg["rank"]
    for key, minimum in (("prime_count", 1), ("prime_low", 3), ("prime_high", 5),
                         ("eac_budget", 0), ("eac_coeff", 1)):
        _require_int("rank", key, rank.get(key), minimum)
    if rank["prime_high"] <= rank["prime_low"]:
        raise ConfigError("[rank] prime_high must exceed prime_low")
    if rank["prime_high"] > 2**31:
        # products of two residues must fit in int64
        raise ConfigError("[rank] prime_high must not exceed 2**31")

    props = cfg["properties"]
    for key, minimum in (("subset_budget", 1), ("samples_per_size", 1),
                         ("zero_minor_restarts", 1), ("independence_exact_cap", 1)):
        _require_int("properties", key, props.get(key), minimum)
    c0 = props.get("c0")
    if not isinstance(c0, (int, float)) or isinstance(c0, bool) or c0 <= 0:
        raise ConfigError("[properties] c0 must be a positive number")

    lo = cfg["lo"]
    for key in ("atom_exact_cap", "erdos_exact_cap", "shuffle_combos", "shuffle_coeff",
                "shuffle_class_cap"):
        _require_int("lo", key, lo.get(key), 1)

    harness = cfg["harness"]
    _require_int("harness", "workers", harness.get("workers"), 0)
    level = str(harness.get("log_level", "INFO")).upper()
    if level not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
        raise ConfigError(f"[harness] unknown log_level {level!r}")
    harness["log_level"] = level


def _deep_merge(default: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    """Merge override onto default recursively."""
    result = copy.deepcopy(default)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(result.get(k), dict):
            result[k] = _deep_merge(result[k], v)
        else:
            result[k] = v
    return result


# ---------------------------------------------------------
# Public API
# ---------------------------------------------------------
def default_config() -> Dict[str, Any]:
    """A validated deep copy of DEFAULT_CONFIG."""
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    _normalize_paths(cfg)
    _validate(cfg)
    return cfg


def load_config(config_path: Path) -> Dict[str, Any]:
    """
    Load config.toml from disk.
    Returns merged config (defaults + user overrides).
    Does NOT write to disk.
    """
    config_path = Path(config_path)
    if not config_path.exists():
        return default_config()

    try:
        with config_path.open("rb") as f:
            user_cfg = tomllib.load(f)
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"Invalid TOML in {config_path}: {e}") from e

    cfg = _deep_merge(DEFAULT_CONFIG, user_cfg)
    _normalize_paths(cfg)
    _validate(cfg)
    return cfg


def write_config(config_path: Path, cfg: Dict[str, Any]) -> None:
    """
    Write config.toml atomically.
    """
    config_path = Path(config_path)
    config_path.parent.mkdir(parents=True, exist_ok=True)

    fd, tmp_name = tempfile.mkstemp(
        dir=str(config_path.parent), prefix=".config.", suffix=".toml"
    )
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(tomli_w.dumps(cfg).encode("utf-8"))
            f.flush()
            os.fsync(f.fileno())
        Path(tmp_name).replace(config_path)
    finally:
        if os.path.exists(tmp_name):
            try:
                os.unlink(tmp_name)
            except OSError:
                pass


def ensure_config(config_dir: Path) -> Dict[str, Any]:
    """
    Ensure config.toml exists in config_dir.
    If missing → create with defaults.
    Returns loaded config dict.
    """
    config_dir = Path(config_dir)
    config_dir.mkdir(parents=True, exist_ok=True)
    config_path = config_dir / "config.toml"

    if not config_path.exists():
        cfg = default_config()
        write_config(config_path, cfg)
        return cfg

    return load_config(config_path)


def apply_config_to_paths(paths, cfg: Dict[str, Any]):
    """
    Override data/logs/runs locations using config.
    config_dir is NOT overridden (bootstrap invariant).
    """
    section = cfg.get("paths", {})
    if section.get("data_dir"):
        paths.data_dir = Path(section["data_dir"]).expanduser().resolve()
        paths.logs_dir = paths.data_dir / "logs"
        paths.runs_dir = paths.data_dir / "runs"
    if section.get("logs_dir"):
        paths.logs_dir = Path(section["logs_dir"]).expanduser().resolve()
    if section.get("runs_dir"):
        paths.runs_dir = Path(section["runs_dir"]).expanduser().resolve()
    return paths


def resolve_workers(cfg: Dict[str, Any], flag: Optional[int] = None) -> int:
    """Worker count: --workers flag, then DL_WORKERS, then [harness] workers, then CPU count."""
    if flag is not None:
        if flag < 1:
            raise ConfigError("--workers must be >= 1")
        return flag
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            value = int(env)
        except ValueError as e:
            raise ConfigError(f"{WORKERS_ENV} must be an integer, got {env!r}") from e
        if value < 1:
            raise ConfigError(f"{WORKERS_ENV} must be >= 1")
        return value
    configured = cfg.get("harness", {}).get("workers", 0)
    if configured:
        return int(configured)
    return os.cpu_count() or 1
