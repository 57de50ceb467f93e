"""flowattn main entrypoint module.

Console-script target of the ``flowattn`` command; ``python -m flowattn.main``
works as well.

License:
    Apache 2.0
"""

from __future__ import annotations

import sys

from .cli.app import run


def main() -> None:
    """Run the command line and exit with its status."""
    sys.exit(run())


__all__ = ["main"]

if __name__ == "__main__":
    main()
