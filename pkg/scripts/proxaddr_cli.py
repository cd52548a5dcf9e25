#!/usr/bin/env python3
"""Entry point for the proxaddr command line, runnable from a checkout."""
import sys
from pathlib import Path

ROOT_DIR = Path(__file__).resolve().parents[1]
if str(ROOT_DIR) not in sys.path:
    sys.path.insert(0, str(ROOT_DIR))

from proxaddr.cli.main import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())
