# core/manifest.py
"""
Run manifests for DigraphLab.

Every run folder carries manifest.json:
{
  "run_id": "psing-sweep-20261017-101500-000123",
  "tool_version": "0.4.0",
  "experiment": "psing-sweep",
  "config": {... echoed ExperimentConfig ...},
  "shape_digest": "<sha256 of the config minus seed, output_dir, workers>",
  "master_seed": "12345",
  "workers": 4,
  "started_at": "...", "finished_at": "...",
  "row_count": 3,
  "rows_digest": "<sha256 of rows.jsonl>",
  "environment": {"python": "...", "numpy": "...", "platform": "..."}
}

API
- shape_digest(config) -> str
- RunManifest.to_dict / RunManifest.from_dict
- write_manifest(path, manifest) / read_manifest(path)
"""
from __future__ import annotations

import platform
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np

from core import __version__
from core.errors import ConfigError, StorageError
from core.storage import canonical_json, read_json, sha256_text, write_json

# config keys that may differ between a run and its replay
VOLATILE_KEYS = ("master_seed", "output_dir", "workers")


def shape_digest(config: Dict[str, Any]) -> str:
    """sha256 of the canonical config with the volatile keys removed."""
    shape = {k: v for k, v in config.items() if k not in VOLATILE_KEYS}
    return sha256_text(canonical_json(shape))


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


def environment() -> Dict[str, str]:
    return {
        "python": platform.python_version(),
        "numpy": np.__version__,
        "platform": platform.platform(),
    }


@dataclass
class RunManifest:
    run_id: str
    experiment: str
    config: Dict[str, Any]
    master_seed: int
    workers: int
    tool_version: str = __version__
    started_at: str = field(default_factory=utc_now)
    finished_at: Optional[str] = None
    row_count: int = 0
    rows_digest: str = ""
    environment: Dict[str, str] = field(default_factory=environment)

    @property
    def shape_digest(self) -> str:
        return shape_digest(self.config)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "run_id": self.run_id,
            "tool_version": self.tool_version,
            "experiment": self.experiment,
            "config": self.config,
            "shape_digest": self.shape_digest,
            "master_seed": str(self.master_seed),
            "workers": self.workers,
            "started_at": self.started_at,
            "finished_at": self.finished_at,
            "row_count": self.row_count,
            "rows_digest": self.rows_digest,
            "environment": dict(self.environment),
        }

    @classmethod
    def from_dict(cls, raw: Dict[str, Any]) -> "RunManifest":
        try:
            m = cls(
                run_id=str(raw["run_id"]),
                experiment=str(raw["experiment"]),
                config=dict(raw["config"]),
                master_seed=int(raw["master_seed"]),
                workers=int(raw.get("workers", 1)),
                tool_version=str(raw.get("tool_version", "")),
                started_at=str(raw.get("started_at", "")),
                finished_at=raw.get("finished_at"),
                row_count=int(raw.get("row_count", 0)),
                rows_digest=str(raw.get("rows_digest", "")),
                environment=dict(raw.get("environment", {})),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"manifest is missing or has a malformed field: {e}") from e
        recorded = raw.get("shape_digest")
        if recorded and recorded != m.shape_digest:
            # config edited after the run: shape no longer matches its digest
            raise ConfigError(
                "manifest config does not match its recorded shape digest "
                "(parameters other than the seed were altered)",
                meta={"recorded": recorded, "actual": m.shape_digest},
            )
        return m


def write_manifest(path: Path, manifest: RunManifest) -> Path:
    return write_json(path, manifest.to_dict())


def read_manifest(path: Path) -> RunManifest:
    path = Path(path)
    if path.is_dir():
        path = path / "manifest.json"
    if not path.exists():
        raise StorageError(f"manifest not found: {path}", meta={"path": str(path)})
    return RunManifest.from_dict(read_json(path))
