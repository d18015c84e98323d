"""JSONL logging: record fields, context injection, error duplication, tail reads."""
from __future__ import annotations

import logging
from fractions import Fraction

from core.logging import (
    DEFAULT_LOG_FILENAME,
    ERROR_LOG_FILENAME,
    LogContext,
    get_logger,
    init_logger,
    read_jsonl_tail,
    shutdown_logger,
)


def _flush():
    for h in logging.getLogger("digraphlab").handlers:
        h.flush()


def test_records_carry_meta_and_context(tmp_path):
    init_logger(tmp_path, console=False)
    log = get_logger("sampler")
    with LogContext(run_id="r1", point="n=5,d=2"):
        log.info("chain_started", extra={"meta": {"p": Fraction(1, 3), "cols": {2, 1}}})
    log.info("outside")
    _flush()

    entries = read_jsonl_tail(tmp_path / DEFAULT_LOG_FILENAME)
    first, second = entries[-2], entries[-1]
    assert first["msg"] == "chain_started"
    assert first["logger"] == "digraphlab.sampler"
    assert first["run_id"] == "r1" and first["point"] == "n=5,d=2"
    assert first["meta"] == {"p": "1/3", "cols": [1, 2]}
    assert "run_id" not in second


def test_errors_are_duplicated(tmp_path):
    init_logger(tmp_path, console=False)
    get_logger("harness").info("fine")
    get_logger("harness").error("broken", extra={"meta": {"code": 5}})
    _flush()
    errors = read_jsonl_tail(tmp_path / ERROR_LOG_FILENAME)
    assert [e["msg"] for e in errors] == ["broken"]
    assert errors[0]["meta"] == {"code": 5}


def test_init_logger_is_idempotent(tmp_path):
    a = init_logger(tmp_path, console=False)
    count = len(a.handlers)
    b = init_logger(tmp_path / "other", console=False)
    assert a is b
    assert len(b.handlers) == count
    shutdown_logger()
    assert not logging.getLogger("digraphlab").handlers


def test_read_jsonl_tail_skips_garbage(tmp_path):
    path = tmp_path / "log.jsonl"
    lines = ['{"msg": %d}' % i for i in range(500)]
    lines.insert(250, "not json")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    tail = read_jsonl_tail(path, max_lines=3)
    assert [e["msg"] for e in tail] == [497, 498, 499]
    assert len(read_jsonl_tail(path, max_lines=1000)) == 500
    assert read_jsonl_tail(tmp_path / "missing.jsonl") == []
