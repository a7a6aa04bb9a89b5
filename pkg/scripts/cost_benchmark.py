#!/usr/bin/env python3
"""Per-step forward-solve cost: coarse high chain vs fine/fine pair.

The replica pair with a coarse-mesh high chain should spend well under
85% of the forward-solve time of a pair running both chains on the fine
mesh, at equal step counts.
"""

import argparse
import json

from mresgld.experiments import ExperimentConfig, run_experiment


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--config", default="configs/two_mode.json")
    parser.add_argument("--steps", type=int, default=1500)
    args = parser.parse_args()

    with open(args.config) as fh:
        base = json.load(fh)
    base["steps"] = args.steps

    times = {}
    for sampler in ("mresgld", "resgld"):
        cfg = dict(base)
        cfg["sampler"] = sampler
        result = run_experiment(ExperimentConfig.from_dict(cfg))
        times[sampler] = result.metrics["solve_time_per_step"]
        print(f"{sampler:>8}: {times[sampler] * 1e3:.3f} ms solve time per step")
    ratio = times["mresgld"] / times["resgld"]
    print(f"ratio: {ratio:.3f} (target < 0.85)")


if __name__ == "__main__":
    main()
