"""Shared fixtures: small hand-built graphs and throwaway application paths."""
from __future__ import annotations

import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parent.parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from core.graph import Digraph, circulant  # noqa: E402
from core.logging import shutdown_logger  # noqa: E402
from core.paths import get_app_paths  # noqa: E402


@pytest.fixture
def identity3() -> Digraph:
    return Digraph.from_rows([[0], [1], [2]])


@pytest.fixture
def circ52() -> Digraph:
    """Rows {i, i+1} mod 5."""
    return circulant(5, 2)


@pytest.fixture
def singular42() -> Digraph:
    # rows 0 and 1 are equal
    return Digraph.from_rows([[0, 1], [0, 1], [2, 3], [2, 3]])


@pytest.fixture
def app_paths(tmp_path, monkeypatch):
    monkeypatch.setenv("DL_CONFIG_DIR", str(tmp_path / "config"))
    monkeypatch.setenv("DL_DATA_DIR", str(tmp_path / "data"))
    monkeypatch.setenv("DL_RUNS_DIR", str(tmp_path / "runs"))
    monkeypatch.delenv("DL_DEV", raising=False)
    monkeypatch.delenv("DL_WORKERS", raising=False)
    return get_app_paths(ensure=True)


@pytest.fixture(autouse=True)
def _fresh_logger():
    yield
    shutdown_logger()
