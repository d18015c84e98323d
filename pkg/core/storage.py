# core/storage.py
"""
storage.py

File-system utilities for DigraphLab.

Responsibilities:
- Atomic writes (temp file in the target directory + rename)
- Canonical JSON (sorted keys, compact separators) and its sha256
- Graph files in the "n d" + neighbour-lines text format
- Run folders: runs_dir/<run_id>/{manifest.json, report.json, rows.csv, rows.jsonl[, graphs.csv]}
- Append-only JSONL run index, written under the file lock
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import tempfile
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

from core.errors import StorageError
from core.graph import Digraph, format_graph, parse_graph
from core.locks import file_lock, lock_path_for
from core.logging import get_logger

logger = get_logger("storage")

MANIFEST_FILE = "manifest.json"
REPORT_FILE = "report.json"
ROWS_CSV = "rows.csv"
ROWS_JSONL = "rows.jsonl"
GRAPHS_CSV = "graphs.csv"


# -------------------------------------------------------------
# Data structures
# -------------------------------------------------------------
@dataclass
class RunFiles:
    folder: Path

    @property
    def manifest(self) -> Path:
        return self.folder / MANIFEST_FILE

    @property
    def report(self) -> Path:
        return self.folder / REPORT_FILE

    @property
    def rows_csv(self) -> Path:
        return self.folder / ROWS_CSV

    @property
    def rows_jsonl(self) -> Path:
        return self.folder / ROWS_JSONL

    @property
    def graphs_csv(self) -> Path:
        return self.folder / GRAPHS_CSV


# -------------------------------------------------------------
# Canonical JSON
# -------------------------------------------------------------
def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def make_run_id(experiment: str, ts: Optional[datetime] = None) -> str:
    """<experiment>-YYYYmmdd-HHMMSS-ffffff (UTC)."""
    ts = ts or datetime.now(timezone.utc)
    return f"{experiment}-{ts.strftime('%Y%m%d-%H%M%S-%f')}"


# -------------------------------------------------------------
# Atomic write
# -------------------------------------------------------------
def atomic_write(dest: Path, data: bytes) -> Path:
    """Write bytes to `dest` atomically. Returns dest."""
    dest = Path(dest)
    tmp_path = None
    try:
        dest.parent.mkdir(parents=True, exist_ok=True)
        with tempfile.NamedTemporaryFile(dir=str(dest.parent), prefix=f".{dest.name}.", delete=False) as tmp:
            tmp_path = Path(tmp.name)
            tmp.write(data)
            tmp.flush()
            os.fsync(tmp.fileno())
        tmp_path.replace(dest)
        return dest
    except OSError as e:
        if tmp_path is not None and tmp_path.exists():
            try:
                tmp_path.unlink()
            except OSError:
                pass
        raise StorageError(f"cannot write {dest}: {e}", meta={"path": str(dest)}) from e


def write_text(dest: Path, text: str) -> Path:
    return atomic_write(dest, text.encode("utf-8"))


def write_json(dest: Path, obj: Any, indent: Optional[int] = 2) -> Path:
    return write_text(dest, json.dumps(obj, indent=indent, sort_keys=True, ensure_ascii=False) + "\n")


def write_jsonl(dest: Path, rows: Iterable[Dict[str, Any]]) -> Path:
    """One canonical JSON object per line."""
    return write_text(dest, "".join(canonical_json(r) + "\n" for r in rows))


def write_csv(dest: Path, rows: Sequence[Dict[str, Any]], columns: Sequence[str]) -> Path:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(columns), extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: _csv_cell(r.get(k)) for k in columns})
    return write_text(dest, buf.getvalue())


def _csv_cell(v: Any) -> Any:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple, dict)):
        return canonical_json(v)
    return "" if v is None else v


def read_json(path: Path) -> Any:
    path = Path(path)
    try:
        with path.open("r", encoding="utf-8") as f:
            return json.load(f)
    except OSError as e:
        raise StorageError(f"cannot read {path}: {e}", meta={"path": str(path)}) from e
    except json.JSONDecodeError as e:
        raise StorageError(f"malformed JSON in {path}: {e}", meta={"path": str(path)}) from e


def read_jsonl(path: Path) -> List[Dict[str, Any]]:
    path = Path(path)
    if not path.exists():
        return []
    out = []
    with path.open("r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                out.append(json.loads(line))
    return out


# -------------------------------------------------------------
# Graph files
# -------------------------------------------------------------
def save_graph(dest: Path, g: Digraph) -> Path:
    return write_text(dest, format_graph(g))


def load_graph(path: Path) -> Digraph:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise StorageError(f"cannot read graph file {path}: {e}", meta={"path": str(path)}) from e
    return parse_graph(text)


# -------------------------------------------------------------
# Run folders and index
# -------------------------------------------------------------
def run_files(runs_dir: Path, run_id: str) -> RunFiles:
    return RunFiles(Path(runs_dir) / run_id)


def append_run_index(index_path: Path, entry: Dict[str, Any]) -> None:
    """Append one JSON line to the run index while holding its lock."""
    index_path = Path(index_path)
    index_path.parent.mkdir(parents=True, exist_ok=True)
    with file_lock(lock_path_for(index_path)):
        with index_path.open("a", encoding="utf-8") as f:
            f.write(canonical_json(entry) + "\n")
            f.flush()
            try:
                os.fsync(f.fileno())
            except OSError:
                pass
    logger.debug("run_indexed", extra={"meta": {"index": str(index_path), "run_id": entry.get("run_id")}})


def list_runs(index_path: Path) -> List[Dict[str, Any]]:
    return read_jsonl(index_path)
