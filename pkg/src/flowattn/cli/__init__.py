"""The ``flowattn`` command line."""

from __future__ import annotations

from .app import build_parser, run


__all__ = ["build_parser", "run"]
