"""
core/paths.py

Resolve where DigraphLab keeps its settings, logs and experiment runs.

- Does not create directories unless ensure=True
- DL_DEV=1 forces a project-local .dl_dev directory
- DL_CONFIG_DIR / DL_DATA_DIR / DL_RUNS_DIR override individual locations
- Pure: does not import config.py (config may relocate data/logs/runs later)
"""
from __future__ import annotations

import os
import platform
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional

APP_NAME = "DigraphLab"

_DEFAULT_DEV_FOLDER = ".dl_dev"


@dataclass
class AppPaths:
    app_name: str
    os_name: str
    home: Path
    project_root: Path
    config_dir: Path
    data_dir: Path
    logs_dir: Path
    runs_dir: Path

    @property
    def config_file(self) -> Path:
        return self.config_dir / "config.toml"

    @property
    def run_index(self) -> Path:
        return self.runs_dir / "runs.jsonl"

    def as_dict(self) -> Dict[str, str]:
        return {k: str(v) for k, v in self.__dict__.items() if isinstance(v, (Path, str))}

    def ensure(self) -> "AppPaths":
        for p in (self.config_dir, self.data_dir, self.logs_dir, self.runs_dir):
            p.mkdir(parents=True, exist_ok=True)
        return self


def _truthy_env(name: str) -> bool:
    v = os.environ.get(name)
    if not v:
        return False
    return v.strip().lower() in ("1", "true", "yes", "on")


def _expand_env_override(var: str) -> Optional[Path]:
    v = os.environ.get(var)
    if not v:
        return None
    return Path(v).expanduser().resolve()


def get_app_paths(app_name: str = APP_NAME, *, ensure: bool = False) -> AppPaths:
    """
    Resolve default OS paths for the lab.

    DL_DEV=1 → project-local .dl_dev directory (handy for experiments kept
    next to a checkout).
    """
    home = Path.home()
    os_name = platform.system().lower()
    project_root = Path.cwd().expanduser().resolve()

    cfg_override = _expand_env_override("DL_CONFIG_DIR")
    data_override = _expand_env_override("DL_DATA_DIR")
    runs_override = _expand_env_override("DL_RUNS_DIR")

    if _truthy_env("DL_DEV"):
        base = project_root / _DEFAULT_DEV_FOLDER
        config_dir = cfg_override or (base / "config")
        data_dir = data_override or (base / "data")
    elif os_name == "windows":
        appdata = Path(os.environ.get("APPDATA", home / "AppData" / "Roaming"))
        localappdata = Path(os.environ.get("LOCALAPPDATA", home / "AppData" / "Local"))
        config_dir = cfg_override or (appdata / app_name)
        data_dir = data_override or (localappdata / app_name)
    else:
        xdg_config = Path(os.environ.get("XDG_CONFIG_HOME", home / ".config"))
        xdg_data = Path(os.environ.get("XDG_DATA_HOME", home / ".local" / "share"))
        config_dir = cfg_override or (xdg_config / app_name)
        data_dir = data_override or (xdg_data / app_name)

    runs_dir = runs_override or (Path(data_dir) / "runs")
    logs_dir = Path(data_dir) / "logs"

    paths = AppPaths(
        app_name=app_name,
        os_name=os_name,
        home=home,
        project_root=project_root,
        config_dir=Path(config_dir).expanduser().resolve(),
        data_dir=Path(data_dir).expanduser().resolve(),
        logs_dir=logs_dir.expanduser().resolve(),
        runs_dir=Path(runs_dir).expanduser().resolve(),
    )
    if ensure:
        paths.ensure()
    return paths
