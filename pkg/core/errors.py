"""
errors.py

Exception hierarchy for DigraphLab.

Every failure the lab raises on purpose derives from LabError so the CLI can
map it to an exit code in one place. Invalid switching moves are NOT errors
(see core.graph.SwitchResult): Markov-chain callers treat them as "hold".
"""
from __future__ import annotations

from typing import Any, Dict, Optional


class LabError(Exception):
    """Base class for all DigraphLab errors."""

    exit_code = 1

    def __init__(self, message: str, *, meta: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.meta: Dict[str, Any] = dict(meta or {})


class InputError(LabError, ValueError):
    """A precondition of an operation was violated."""

    exit_code = 2


class GraphError(InputError):
    """A Digraph invariant does not hold, or graph text is malformed."""


class ConfigError(LabError):
    """Application settings or an experiment config are invalid."""

    exit_code = 2


class InfeasibleError(LabError):
    """A frozen column set admits no d-regular completion."""

    exit_code = 3


class ReplayDivergenceError(LabError):
    """A replayed run produced rows different from the recorded ones."""

    exit_code = 4

    def __init__(self, message: str, *, diff: Optional[list] = None, meta=None):
        super().__init__(message, meta=meta)
        self.diff = list(diff or [])


class SamplerBudgetError(LabError):
    """The configuration model exhausted its retry budget."""

    exit_code = 5


class CapExceededError(LabError):
    """An exact computation was refused because it exceeds its size cap."""

    exit_code = 5

    def __init__(self, message: str, *, estimated_cost: Optional[int] = None, meta=None):
        super().__init__(message, meta=meta)
        self.estimated_cost = estimated_cost


class StorageError(LabError):
    """A run file could not be read or written; the message names the path."""
