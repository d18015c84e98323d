"""
logging.py

Centralized logging utilities for DigraphLab.

Provides:
- JsonLineFormatter: compact JSONL formatter for structured logs
- init_logger: initialise the root "digraphlab" logger with rotating JSONL files
- get_logger: convenience to fetch child loggers ("digraphlab.sampler", ...)
- read_jsonl_tail: read the last N JSON objects from a JSONL log file
- LogContext: context manager injecting run/point identifiers into every record

Design notes:
- Each record contains: ts (ISO UTC), level, logger, msg, pid, thread and
  optional meta (pass `extra={"meta": {...}}`) and exc fields.
- ERROR+ records are duplicated into 'digraphlab.error.jsonl'.
- Library modules log; only the entry script prints.
"""
from __future__ import annotations

import contextvars
import json
import logging
import logging.handlers
import os
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional

ROOT_LOGGER = "digraphlab"
DEFAULT_LOG_FILENAME = "digraphlab.jsonl"
ERROR_LOG_FILENAME = "digraphlab.error.jsonl"
DEFAULT_MAX_BYTES = 5 * 1024 * 1024
DEFAULT_BACKUP_COUNT = 3

_log_context: contextvars.ContextVar[Dict[str, Any]] = contextvars.ContextVar(
    "log_context", default={}
)


class LogContext:
    """
    Inject key-value pairs into all logs within the block.

    Usage:
        with LogContext(run_id="a1b2", point="n=40,d=4"):
            logger.info("point_started")   # carries run_id and point
    """

    def __init__(self, **kwargs: Any):
        self.new_ctx = kwargs
        self.token: Optional[contextvars.Token] = None

    def __enter__(self) -> "LogContext":
        ctx = _log_context.get().copy()
        ctx.update(self.new_ctx)
        self.token = _log_context.set(ctx)
        return self

    def __exit__(self, exc_type, exc_val, exc_tb) -> None:
        if self.token is not None:
            _log_context.reset(self.token)
            self.token = None


def _json_default(obj: Any) -> Any:
    # Fractions, numpy scalars, paths and sets all end up here.
    if hasattr(obj, "item"):
        return obj.item()
    if isinstance(obj, (set, frozenset)):
        return sorted(obj)
    return str(obj)


class JsonLineFormatter(logging.Formatter):
    def format(self, record: logging.LogRecord) -> str:
        entry: Dict[str, Any] = {
            "ts": datetime.fromtimestamp(record.created, tz=timezone.utc).isoformat(),
            "level": record.levelname,
            "logger": record.name,
            "msg": record.getMessage(),
            "pid": os.getpid(),
            "thread": record.threadName,
        }

        ctx = _log_context.get()
        if ctx:
            entry.update(ctx)

        if record.levelno == logging.DEBUG:
            entry["func"] = record.funcName
            entry["line"] = record.lineno

        meta = getattr(record, "meta", None)
        if meta:
            entry["meta"] = meta

        if record.exc_info:
            entry["exc"] = self.formatException(record.exc_info)

        return json.dumps(entry, ensure_ascii=False, default=_json_default)


def _make_rotating_handler(log_file: Path, level: int) -> logging.Handler:
    handler = logging.handlers.RotatingFileHandler(
        filename=str(log_file),
        maxBytes=DEFAULT_MAX_BYTES,
        backupCount=DEFAULT_BACKUP_COUNT,
        encoding="utf-8",
    )
    handler.setFormatter(JsonLineFormatter())
    handler.setLevel(level)
    return handler


def init_logger(logs_dir: Path, console: bool = True, level: str = "INFO") -> logging.Logger:
    """Initialize the root logger. Idempotent."""
    logger = logging.getLogger(ROOT_LOGGER)
    if logger.handlers:
        return logger

    logs_dir = Path(logs_dir)
    logs_dir.mkdir(parents=True, exist_ok=True)

    logger.setLevel(logging.DEBUG)
    logger.propagate = False

    logger.addHandler(_make_rotating_handler(logs_dir / DEFAULT_LOG_FILENAME, logging.DEBUG))
    logger.addHandler(_make_rotating_handler(logs_dir / ERROR_LOG_FILENAME, logging.ERROR))

    if console:
        console_h = logging.StreamHandler()
        console_h.setFormatter(logging.Formatter("[%(levelname)s] %(message)s"))
        console_h.setLevel(getattr(logging, str(level).upper(), logging.INFO))
        logger.addHandler(console_h)

    return logger


def shutdown_logger() -> None:
    """Detach and close every handler of the root logger (used between runs and in tests)."""
    logger = logging.getLogger(ROOT_LOGGER)
    for h in list(logger.handlers):
        logger.removeHandler(h)
        try:
            h.close()
        except Exception:
            pass


def get_logger(child: Optional[str] = None) -> logging.Logger:
    """Get the 'digraphlab' logger or a child (e.g. 'digraphlab.rank')."""
    name = f"{ROOT_LOGGER}.{child}" if child else ROOT_LOGGER
    return logging.getLogger(name)


def read_jsonl_tail(log_file: Path, max_lines: int = 200) -> List[Dict[str, Any]]:
    """Read up to `max_lines` JSON objects from the end of a JSONL file.

    Reads backwards in blocks; malformed lines are skipped.
    """
    log_file = Path(log_file)
    if not log_file.exists() or max_lines <= 0:
        return []

    block_size = 4096
    lines: List[bytes] = []
    with log_file.open("rb") as f:
        f.seek(0, 2)
        remaining = f.tell()
        buffer = b""
        while remaining > 0 and len(lines) <= max_lines:
            read_size = min(block_size, remaining)
            remaining -= read_size
            f.seek(remaining)
            buffer = f.read(read_size) + buffer
            parts = buffer.split(b"\n")
            buffer = parts[0]
            lines = parts[1:] + lines
        if remaining == 0 and buffer:
            lines = [buffer] + lines

    results: List[Dict[str, Any]] = []
    lines = [ln.strip() for ln in lines if ln.strip()]
    for raw in lines[-max_lines:]:
        try:
            results.append(json.loads(raw.decode("utf-8", errors="replace")))
        except json.JSONDecodeError:
            continue
    return results


def global_exception_hook(exctype, value, tb):
    """
    Catch any unhandled exception (bug) and log it before exiting.
    """
    import sys
    import traceback

    if issubclass(exctype, KeyboardInterrupt):
        sys.__excepthook__(exctype, value, tb)
        return

    logger = get_logger("crash_handler")
    logger.critical("Uncaught Exception", exc_info=(exctype, value, tb))

    sys.stderr.write("!!! CRITICAL CRASH LOGGED !!!\n")
    traceback.print_exception(exctype, value, tb)
    sys.exit(1)
