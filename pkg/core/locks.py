# core/locks.py
"""
Advisory file lock for DigraphLab's shared run index.

Provides:
- file_lock(path, timeout=10.0, poll_interval=0.1)
    Exclusive lock via fcntl on POSIX, msvcrt on Windows, and a
    process-local RLock where neither exists.
- lock_path_for(path) -> sibling "<name>.lock"

Usage:
    with file_lock(lock_path_for(index_path)):
        with index_path.open("a") as f:
            f.write(line)
"""
from __future__ import annotations

import errno
import threading
import time
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator, Optional

try:
    import fcntl
    _HAS_FCNTL = True
except ImportError:
    _HAS_FCNTL = False

try:
    import msvcrt
    _HAS_MSVCRT = True
except ImportError:
    _HAS_MSVCRT = False

_FALLBACK_LOCK = threading.RLock()


def _deadline(timeout: Optional[float]) -> Optional[float]:
    return time.monotonic() + float(timeout) if timeout and timeout > 0 else None


def _try_lock(fh) -> bool:
    try:
        if _HAS_FCNTL:
            fcntl.flock(fh.fileno(), fcntl.LOCK_EX | fcntl.LOCK_NB)
        else:
            fh.seek(0)
            msvcrt.locking(fh.fileno(), msvcrt.LK_NBLCK, 1)
        return True
    except OSError as e:
        if _HAS_FCNTL and e.errno not in (errno.EACCES, errno.EAGAIN):
            raise
        return False


def _unlock(fh) -> None:
    try:
        if _HAS_FCNTL:
            fcntl.flock(fh.fileno(), fcntl.LOCK_UN)
        else:
            fh.seek(0)
            msvcrt.locking(fh.fileno(), msvcrt.LK_UNLCK, 1)
    except OSError:
        pass


@contextmanager
def file_lock(lock_path: Path, timeout: float = 10.0, poll_interval: float = 0.1) -> Iterator[None]:
    """
    Hold an exclusive lock on `lock_path` (created if missing) for the block.

    Raises TimeoutError if the lock is not acquired within `timeout` seconds.
    """
    lock_path = Path(lock_path)
    lock_path.parent.mkdir(parents=True, exist_ok=True)
    deadline = _deadline(timeout)

    if not (_HAS_FCNTL or _HAS_MSVCRT):
        # process-local only
        if not _FALLBACK_LOCK.acquire(timeout=timeout if timeout and timeout > 0 else -1):
            raise TimeoutError(f"Timeout acquiring in-process lock for {lock_path}")
        try:
            yield
        finally:
            _FALLBACK_LOCK.release()
        return

    with open(str(lock_path), "a+b") as fh:
        while not _try_lock(fh):
            if deadline is not None and time.monotonic() > deadline:
                raise TimeoutError(f"Timeout acquiring file lock {lock_path}")
            time.sleep(poll_interval)
        try:
            yield
        finally:
            _unlock(fh)


def lock_path_for(path: Path) -> Path:
    """runs.jsonl -> runs.jsonl.lock"""
    p = Path(path)
    return p.with_name(p.name + ".lock")
