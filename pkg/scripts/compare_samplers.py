#!/usr/bin/env python3
"""Mode-coverage comparison on the two-mode inversion.

Runs the replica pair (multi-variance swaps, coarse high chain) and a
single low-temperature SGLD chain started at one mode under the same
budget, then prints the fraction of post-burn-in samples captured by
each analytic mode.  The single chain stays trapped where it started;
the pair visits both modes.
"""

import argparse
import json

from mresgld.experiments import ExperimentConfig, run_experiment
from mresgld.inverse import two_mode_centers


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--config", default="configs/two_mode.json")
    parser.add_argument("--seed", type=int, default=None)
    args = parser.parse_args()

    with open(args.config) as fh:
        base = json.load(fh)
    if args.seed is not None:
        base["seed"] = args.seed

    modes = two_mode_centers()
    print(f"analytic modes: {modes[0]} and {modes[1]}")

    pair_cfg = ExperimentConfig.from_dict(base)
    pair = run_experiment(pair_cfg)
    print(
        f"replica pair:  mode fractions "
        f"[{pair.metrics['mode_0_fraction']:.3f}, {pair.metrics['mode_1_fraction']:.3f}] "
        f"({pair.metrics['swap_count']} swaps / {pair.metrics['swap_attempts']} attempts)"
    )

    single = dict(base)
    single["sampler"] = "sgld"
    single["init_low"] = list(modes[0])
    single_cfg = ExperimentConfig.from_dict(single)
    res = run_experiment(single_cfg)
    print(
        f"single chain:  mode fractions "
        f"[{res.metrics['mode_0_fraction']:.3f}, {res.metrics['mode_1_fraction']:.3f}] "
        f"(started at mode 0)"
    )


if __name__ == "__main__":
    main()
