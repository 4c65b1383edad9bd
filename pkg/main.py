#!/usr/bin/env python
"""
Command-line entry point.

Usage:
    python main.py fit --data d.csv --kernel k.json --out ghat.json
    python main.py divergence --ghat ghat.json --g0 g0.json
    python main.py slope --records rates.jsonl --metric nchisq
"""

import sys
from pathlib import Path

# Add src to path
sys.path.insert(0, str(Path(__file__).parent))

from src.cli import dispatch


def main(argv=None) -> int:
    return dispatch(argv)


if __name__ == "__main__":
    sys.exit(main())
