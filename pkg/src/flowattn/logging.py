"""Structured JSON logging configuration module.

This module configures the root logger for flowattn runs. Records are
emitted as JSON objects through ``python-json-logger`` so run logs can be
diffed and grepped when checking reproducibility; any ``extra=`` fields
passed at the call site land in the JSON object.

License:
    Apache 2.0
"""

from __future__ import annotations

import logging
import sys

from pythonjsonlogger import jsonlogger


_JSON_FIELDS = "%(asctime)s %(levelname)s %(name)s %(message)s"
_TEXT_FIELDS = "%(asctime)s %(levelname)-7s %(name)s: %(message)s"


def build_formatter(json_format: bool = True) -> logging.Formatter:
    """Return the formatter used by :func:`setup_logging`.

    Args:
        json_format: Emit JSON objects when True, plain text otherwise.

    Returns:
        A configured ``logging.Formatter``.
    """
    if json_format:
        return jsonlogger.JsonFormatter(
            _JSON_FIELDS,
            rename_fields={"asctime": "timestamp", "levelname": "level", "name": "logger"},
        )
    return logging.Formatter(_TEXT_FIELDS)


def setup_logging(level: str = "INFO", json_format: bool = True) -> None:
    """Configure the root logger to output structured logs on stderr.

    Existing root handlers are cleared to avoid duplicate entries when the
    CLI is invoked repeatedly in one process (as the tests do). Stderr is
    used so that stdout stays reserved for reports.

    Args:
        level: The logging level to set (DEBUG, INFO, WARNING, ERROR, CRITICAL).
        json_format: Emit JSON objects when True, plain text otherwise.

    Raises:
        ValueError: If an invalid logging level is provided.

    Example:
        >>> setup_logging("DEBUG")
        >>> logging.getLogger("flowattn").info("run started", extra={"frames": 8})
    """
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(build_formatter(json_format))

    root_logger = logging.getLogger()
    root_logger.setLevel(level.upper())

    if root_logger.hasHandlers():
        root_logger.handlers.clear()

    root_logger.addHandler(handler)


__all__ = ["build_formatter", "setup_logging"]
