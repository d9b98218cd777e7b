#!/usr/bin/env python3
"""
Run the benchmark harness from a checkout, e.g.

    python scripts/run_benchmark.py run --config smoothed_biweight_prp
    python scripts/run_benchmark.py certify --config certify_smoothed_biweight
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from ncg.cli import cli_main  # noqa: E402


if __name__ == "__main__":
    sys.exit(cli_main(sys.argv[1:]))
