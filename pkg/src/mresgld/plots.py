"""Static SVG figures for experiment outputs.

Scatter plots of posterior samples with the analytic solution geometry
overlaid, training-error curves for the PINN experiments, and a z-score
bar chart for the swap-factor unbiasedness grid.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from mresgld.experiments import ExperimentResult
from mresgld.inverse import (
    INFINITE_MODE_CENTER,
    SENSOR_RADIUS,
    two_mode_centers,
)


def write_figures(result: ExperimentResult, out_dir: str) -> list[str]:
    """Write the figures appropriate to the experiment; return file paths."""
    experiment = result.config.experiment
    if experiment in ("two_mode", "infinite_mode"):
        return [_scatter_figure(result, out_dir)]
    if experiment in ("qgd_forward", "qgd_inverse", "nonlinear_inverse"):
        return [_convergence_figure(result, out_dir)]
    if experiment == "swap_unbiasedness":
        return [_zscore_figure(result, out_dir)]
    return [_double_well_figure(result, out_dir)]


def _post_burn_in(result: ExperimentResult) -> list[list]:
    burn = result.config.burn_in_index(len(result.samples))
    return result.samples[burn:]


def _scatter_figure(result: ExperimentResult, out_dir: str) -> str:
    rows = _post_burn_in(result)
    k1 = [r[1] for r in rows]
    k2 = [r[2] for r in rows]
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.scatter(k1, k2, s=4, alpha=0.4, label="post-burn-in samples")
    theta = np.linspace(0, 2 * np.pi, 200)
    if result.config.experiment == "two_mode":
        for cx, cy in ((0.5, 0.3), (0.5, 0.6)):
            ax.plot(
                cx + SENSOR_RADIUS * np.cos(theta),
                cy + SENSOR_RADIUS * np.sin(theta),
                "k--",
                lw=0.7,
            )
        modes = two_mode_centers()
        ax.scatter(
            modes[:, 0], modes[:, 1], marker="*", s=160, color="red", label="modes"
        )
    else:
        cx, cy = INFINITE_MODE_CENTER
        ax.plot(
            cx + SENSOR_RADIUS * np.cos(theta),
            cy + SENSOR_RADIUS * np.sin(theta),
            "r--",
            lw=1.2,
            label="solution circle",
        )
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1)
    ax.set_xlabel("$k_1$")
    ax.set_ylabel("$k_2$")
    ax.set_title(f"{result.config.experiment} ({result.config.sampler})")
    ax.legend(loc="upper right", fontsize=8)
    path = os.path.join(out_dir, "samples.svg")
    fig.savefig(path)
    plt.close(fig)
    return path


def _convergence_figure(result: ExperimentResult, out_dir: str) -> str:
    steps = [r[0] for r in result.samples]
    errs = [r[2] for r in result.samples]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogy(steps, errs, lw=1.0, label=result.config.sampler)
    burn = result.config.burn_in_index(len(result.samples))
    if 0 < burn < len(steps):
        ax.axvline(steps[burn], color="gray", ls=":", lw=0.8, label="burn-in")
    ax.set_xlabel("step")
    ax.set_ylabel("relative $L_2$ error")
    ax.set_title(result.config.experiment)
    ax.legend(fontsize=8)
    path = os.path.join(out_dir, "convergence.svg")
    fig.savefig(path)
    plt.close(fig)
    return path


def _zscore_figure(result: ExperimentResult, out_dir: str) -> str:
    zs = [r[-1] for r in result.samples]
    labels = [
        f"t{r[0]:g}/{r[1]:g} s{r[2]:g}/{r[3]:g} a{r[4]:g}" for r in result.samples
    ]
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.bar(range(len(zs)), zs)
    ax.axhline(4, color="red", ls="--", lw=0.8)
    ax.axhline(-4, color="red", ls="--", lw=0.8)
    ax.set_xticks(range(len(zs)))
    ax.set_xticklabels(labels, rotation=90, fontsize=6)
    ax.set_ylabel("z score")
    ax.set_title("swap-factor Monte-Carlo bias per grid cell")
    fig.tight_layout()
    path = os.path.join(out_dir, "zscores.svg")
    fig.savefig(path)
    plt.close(fig)
    return path


def _double_well_figure(result: ExperimentResult, out_dir: str) -> str:
    rows = _post_burn_in(result)
    xs = np.array([r[1] for r in rows])
    tau = result.config.tau_low
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(xs, bins=60, density=True, alpha=0.6, label="samples")
    grid = np.linspace(-2.0, 2.0, 400)
    density = np.exp(-((grid**2 - 1.0) ** 2) / tau)
    density /= np.trapezoid(density, grid)
    ax.plot(grid, density, "r-", lw=1.2, label="target density")
    ax.set_xlabel("x")
    ax.set_ylabel("density")
    ax.set_title(f"double well, tau={tau:g}")
    ax.legend(fontsize=8)
    path = os.path.join(out_dir, "histogram.svg")
    fig.savefig(path)
    plt.close(fig)
    return path
