#!/usr/bin/env python3
"""Run one experiment config and write its artifacts.

Usage: python scripts/run_experiment.py configs/two_mode.json [--seed N]
Equivalent to `mresgld run <config>`.
"""

import sys

from mresgld.cli import main

if __name__ == "__main__":
    sys.exit(main(["run", *sys.argv[1:]]))
