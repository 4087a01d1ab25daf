#!/usr/bin/env python3
"""Run the full benchmark table: 16 seeds per object over all nine objects.

Equivalent to `skygrasp batch --archetypes --seeds 16 --out results/`.
"""

import sys

from skygrasp.cli import main

if __name__ == "__main__":
    args = ["batch", "--archetypes", "--seeds", "16", "--out", "results"]
    sys.exit(main(args + sys.argv[1:]))
