"""End-to-end experiment runners shared by the CLI and the test suite.

Each runner consumes an ``ExperimentConfig`` and produces an
``ExperimentResult`` holding sample rows (later serialized to CSV), the
swap log, scalar metrics and a structured report.  All randomness flows
from the single config seed, so a rerun with the same config reproduces
the sample rows byte for byte.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from mresgld.inverse import (
    INFINITE_MODE_CENTER,
    InverseProblem,
    ModeDiagnostics,
    PosteriorEnergy,
    calibrate_coarse_sigma,
    make_infinite_mode_problem,
    make_two_mode_problem,
    mode_coverage,
    two_mode_centers,
)
from mresgld.pinn import (
    DenseNetwork,
    PinnEnergyModel,
    build_nonlinear_inverse,
    build_qgd_forward,
    build_qgd_inverse,
    calibrate_coarse_pinn_sigma,
    relative_error,
)
from mresgld.replica import (
    SwapConfig,
    SwapRecord,
    run_replica_pair,
    swap_factor_exact,
    swap_factor_multi_variance,
)
from mresgld.sampler import ChainConfig, EnergyModel, run_chain

EXPERIMENTS = (
    "two_mode",
    "infinite_mode",
    "qgd_forward",
    "qgd_inverse",
    "nonlinear_inverse",
    "swap_unbiasedness",
    "double_well",
)

SAMPLERS = ("sgld", "resgld", "mresgld")


class ConfigError(ValueError):
    """Raised when an experiment configuration fails validation."""


@dataclass
class ExperimentConfig:
    """One experiment run: problem, sampler and chain hyperparameters.

    ``sigma2`` is only used when ``auto_calibrate`` is off; otherwise the
    coarse estimator's standard deviation is measured at startup.
    """

    experiment: str
    sampler: str = "mresgld"
    tau_low: float = 50.0
    tau_high: float = 500.0
    step_size_low: float = 2e-6
    step_size_high: float = 4e-7
    steps: int = 5000
    swap_interval: int = 2
    intensity: float = 2e6
    a1: float = 0.5
    a2: float = 0.5
    sigma1: float = 0.0
    sigma2: float = 0.0
    auto_calibrate: bool = True
    burn_in_fraction: float = 0.5
    seed: int = 0
    thinning: int = 1
    init_low: Optional[list] = None
    init_high: Optional[list] = None
    comment: str = ""

    def __post_init__(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(
                f"unknown experiment {self.experiment!r}; expected one of {EXPERIMENTS}"
            )
        if self.sampler not in SAMPLERS:
            raise ConfigError(
                f"unknown sampler {self.sampler!r}; expected one of {SAMPLERS}"
            )
        if self.steps < 1:
            raise ConfigError(f"steps must be >= 1, got {self.steps}")
        if self.swap_interval < 1:
            raise ConfigError(f"swap_interval must be >= 1, got {self.swap_interval}")
        if self.thinning < 1:
            raise ConfigError(f"thinning must be >= 1, got {self.thinning}")
        if self.steps < self.thinning:
            raise ConfigError(
                f"steps ({self.steps}) below thinning ({self.thinning}) "
                "would produce no samples"
            )
        if not (0.0 <= self.burn_in_fraction < 1.0):
            raise ConfigError(
                f"burn_in_fraction must lie in [0, 1), got {self.burn_in_fraction}"
            )
        if self.tau_low <= 0 or self.tau_high <= 0:
            raise ConfigError("temperatures must be positive")
        if self.tau_low > self.tau_high:
            raise ConfigError("tau_low must not exceed tau_high")
        if self.step_size_low <= 0 or self.step_size_high <= 0:
            raise ConfigError("step sizes must be positive")
        if self.sigma1 < 0 or self.sigma2 < 0:
            raise ConfigError("sigma1 and sigma2 must be nonnegative")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        """Build a config from a parsed JSON document, rejecting unknown keys."""
        if not isinstance(data, dict):
            raise ConfigError("config document must be a JSON object")
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "experiment" not in data:
            raise ConfigError("config must name an experiment")
        try:
            return cls(**data)
        except TypeError as err:
            raise ConfigError(str(err)) from err

    def burn_in_index(self, n_rows: int) -> int:
        return int(math.floor(n_rows * self.burn_in_fraction))


@dataclass
class ExperimentResult:
    """Everything one experiment produced, before any file is written."""

    config: ExperimentConfig
    sample_columns: list[str]
    samples: list[list]
    swap_log: list[SwapRecord] = field(default_factory=list)
    metrics: dict = field(default_factory=dict)
    report: dict = field(default_factory=dict)


class DoubleWellEnergy(EnergyModel):
    """Exact 1-d double well U(x) = (x^2 - 1)^2 with wells at +-1."""

    def energy(self, position: np.ndarray) -> float:
        x = float(np.asarray(position).ravel()[0])
        return (x * x - 1.0) ** 2

    def gradient(self, position: np.ndarray) -> np.ndarray:
        x = np.asarray(position, dtype=float)
        return 4.0 * x * (x * x - 1.0)


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Dispatch on the experiment id."""
    if config.experiment in ("two_mode", "infinite_mode"):
        return _run_inversion(config)
    if config.experiment in ("qgd_forward", "qgd_inverse", "nonlinear_inverse"):
        return _run_pinn(config)
    if config.experiment == "swap_unbiasedness":
        return run_swap_unbiasedness(config)
    return _run_double_well(config)


# -- pollution-source inversion ------------------------------------------------


def _inversion_problem(config: ExperimentConfig) -> tuple[InverseProblem, dict]:
    if config.experiment == "two_mode":
        problem = make_two_mode_problem()
        geometry = {"mode_centers": two_mode_centers()}
    else:
        problem = make_infinite_mode_problem()
        geometry = {"circle_center": INFINITE_MODE_CENTER}
    return problem, geometry


def _run_inversion(config: ExperimentConfig) -> ExperimentResult:
    t_start = time.perf_counter()
    problem, geometry = _inversion_problem(config)

    sigma2 = config.sigma2
    t0 = time.perf_counter()
    if config.auto_calibrate and config.sampler == "mresgld":
        sigma2 = calibrate_coarse_sigma(
            problem, rng=np.random.default_rng(config.seed)
        )
    calibrate_time = time.perf_counter() - t0

    model_low = PosteriorEnergy(problem, "fine", assigned_sigma=config.sigma1)
    if config.sampler == "mresgld":
        model_high = PosteriorEnergy(problem, "coarse", assigned_sigma=sigma2)
    else:
        model_high = PosteriorEnergy(problem, "fine", assigned_sigma=config.sigma1)

    init_low = np.asarray(
        config.init_low if config.init_low is not None else [0.5, 0.45], dtype=float
    )
    init_high = np.asarray(
        config.init_high if config.init_high is not None else [0.5, 0.5], dtype=float
    )

    chain_low = ChainConfig(
        temperature=config.tau_low,
        step_size=config.step_size_low,
        estimator_sigma=config.sigma1,
    )
    rng = np.random.default_rng(config.seed)
    t0 = time.perf_counter()
    if config.sampler == "sgld":
        trajectory = run_chain(
            init_low, chain_low, model_low, config.steps, rng, config.thinning
        )
        swap_log: list[SwapRecord] = []
        swap_count = attempt_count = 0
        high_rejects = 0
    else:
        chain_high = ChainConfig(
            temperature=config.tau_high,
            step_size=config.step_size_high,
            estimator_sigma=sigma2,
        )
        swap_cfg = SwapConfig(
            tau_low=config.tau_low,
            tau_high=config.tau_high,
            intensity=config.intensity,
            a1=config.a1,
            a2=config.a2,
            sigma1=config.sigma1,
            sigma2=sigma2,
        )
        result = run_replica_pair(
            init_low,
            init_high,
            model_low,
            model_high,
            swap_cfg,
            chain_low,
            chain_high,
            config.steps,
            config.swap_interval,
            rng,
            config.thinning,
        )
        trajectory = result.trajectory_low
        swap_log = result.swap_log
        swap_count = result.final.swap_count
        attempt_count = result.final.attempt_count
        high_rejects = result.final.chain_high.reject_count
    sample_time = time.perf_counter() - t0

    columns = ["step", "k1", "k2", "energy"]
    rows = [
        [s.step_count, s.position[0], s.position[1], s.last_energy]
        for s in trajectory
    ]

    burn = config.burn_in_index(len(rows))
    post = np.array([[r[1], r[2]] for r in rows[burn:]])
    diag = ModeDiagnostics(samples=post, **geometry)
    coverage = mode_coverage(diag)

    metrics = {
        "n_samples": len(rows),
        "n_post_burn_in": len(post),
        "swap_count": swap_count,
        "swap_attempts": attempt_count,
        "low_reject_count": trajectory[-1].reject_count,
        "high_reject_count": high_rejects,
        "fine_solve_count": model_low.solve_count,
        "fine_solve_time": model_low.solve_time,
        "high_solve_count": model_high.solve_count,
        "high_solve_time": model_high.solve_time,
        "solve_time_per_step": (model_low.solve_time + model_high.solve_time)
        / config.steps,
        "posterior_mean_k1": float(post[:, 0].mean()),
        "posterior_mean_k2": float(post[:, 1].mean()),
    }
    if "mode_fractions" in coverage:
        for i, frac in enumerate(coverage["mode_fractions"]):
            metrics[f"mode_{i}_fraction"] = frac
    if "angular_coverage" in coverage:
        metrics["angular_coverage"] = coverage["angular_coverage"]
        metrics["on_circle_fraction"] = coverage["on_circle_fraction"]

    report = _base_report(config)
    report["sigma2_used"] = sigma2
    report["sensor_snap_distance"] = problem.sensor_snap_distance
    report["timings"] = {
        "calibrate": calibrate_time,
        "sample": sample_time,
        "total": time.perf_counter() - t_start,
    }
    report["metrics"] = metrics
    return ExperimentResult(
        config=config,
        sample_columns=columns,
        samples=rows,
        swap_log=swap_log,
        metrics=metrics,
        report=report,
    )


# -- Bayesian PINN training ----------------------------------------------------


def _pinn_builder(experiment: str):
    return {
        "qgd_forward": build_qgd_forward,
        "qgd_inverse": build_qgd_inverse,
        "nonlinear_inverse": build_nonlinear_inverse,
    }[experiment]


def _run_pinn(config: ExperimentConfig) -> ExperimentResult:
    t_start = time.perf_counter()
    build = _pinn_builder(config.experiment)
    rng = np.random.default_rng(config.seed)
    init_rng = np.random.default_rng(config.seed + 1)

    net_fine, colloc_fine, spec, pde = build("fine", rng=init_rng)
    _, colloc_coarse, _, _ = build("coarse", rng=np.random.default_rng(0))
    has_slot = net_fine.inverse_slot

    sigma2 = config.sigma2
    t0 = time.perf_counter()
    if config.auto_calibrate and config.sampler == "mresgld":
        sigma2 = calibrate_coarse_pinn_sigma(
            colloc_fine,
            colloc_coarse,
            spec,
            pde,
            net_fine.widths,
            inverse_slot=has_slot,
            rng=np.random.default_rng(config.seed),
        )
    calibrate_time = time.perf_counter() - t0

    model_low = PinnEnergyModel(
        colloc_fine,
        spec,
        pde,
        net_fine.widths,
        inverse_slot=has_slot,
        assigned_sigma=config.sigma1,
    )
    if config.sampler == "mresgld":
        model_high = PinnEnergyModel(
            colloc_coarse,
            spec,
            pde,
            net_fine.widths,
            inverse_slot=has_slot,
            assigned_sigma=sigma2,
        )
    else:
        model_high = model_low

    init = net_fine.params.copy()
    chain_low = ChainConfig(
        temperature=config.tau_low,
        step_size=config.step_size_low,
        estimator_sigma=config.sigma1,
    )
    t0 = time.perf_counter()
    if config.sampler == "sgld":
        trajectory = run_chain(
            init, chain_low, model_low, config.steps, rng, config.thinning
        )
        swap_log: list[SwapRecord] = []
        swap_count = attempt_count = 0
    else:
        chain_high = ChainConfig(
            temperature=config.tau_high,
            step_size=config.step_size_high,
            estimator_sigma=sigma2,
        )
        swap_cfg = SwapConfig(
            tau_low=config.tau_low,
            tau_high=config.tau_high,
            intensity=config.intensity,
            a1=config.a1,
            a2=config.a2,
            sigma1=config.sigma1,
            sigma2=sigma2,
        )
        result = run_replica_pair(
            init,
            init.copy(),
            model_low,
            model_high,
            swap_cfg,
            chain_low,
            chain_high,
            config.steps,
            config.swap_interval,
            rng,
            config.thinning,
        )
        trajectory = result.trajectory_low
        swap_log = result.swap_log
        swap_count = result.final.swap_count
        attempt_count = result.final.attempt_count
    sample_time = time.perf_counter() - t0

    columns = ["step", "energy", "relative_error"]
    if has_slot:
        columns.append("alpha")
    rows = []
    for s in trajectory:
        net = DenseNetwork(
            widths=net_fine.widths, inverse_slot=has_slot, params=s.position
        )
        row = [s.step_count, s.last_energy, relative_error(net, pde)]
        if has_slot:
            row.append(net.slot_value)
        rows.append(row)

    burn = config.burn_in_index(len(rows))
    errs = np.array([r[2] for r in rows[burn:]])
    metrics = {
        "n_samples": len(rows),
        "n_post_burn_in": len(errs),
        "swap_count": swap_count,
        "swap_attempts": attempt_count,
        "relative_error_mean": float(errs.mean()),
        "relative_error_var": float(errs.var()),
        "relative_error_final": rows[-1][2],
    }
    if has_slot:
        alphas = np.array([r[3] for r in rows[burn:]])
        metrics["alpha_mean"] = float(alphas.mean())
        metrics["alpha_var"] = float(alphas.var())
        metrics["alpha_final"] = rows[-1][3]

    report = _base_report(config)
    report["sigma2_used"] = sigma2
    report["timings"] = {
        "calibrate": calibrate_time,
        "sample": sample_time,
        "total": time.perf_counter() - t_start,
    }
    report["metrics"] = metrics
    return ExperimentResult(
        config=config,
        sample_columns=columns,
        samples=rows,
        swap_log=swap_log,
        metrics=metrics,
        report=report,
    )


# -- swap-factor unbiasedness grid ----------------------------------------------

UNBIASEDNESS_TAU_PAIRS = ((1.0, 2.0), (1.0, 10.0))
UNBIASEDNESS_SIGMA_PAIRS = ((0.0, 0.0), (0.3, 1.0), (1.0, 1.0))
UNBIASEDNESS_A1_VALUES = (0.3, 0.5, 0.7)


def _unbiasedness_cell(
    tau_pair: tuple[float, float],
    sigma_pair: tuple[float, float],
    a1: float,
    n_draws: int,
    rng: np.random.Generator,
    negate_second_term: bool = False,
    u_low: float = 1.3,
    u_high: float = 0.4,
) -> dict:
    """Monte-Carlo mean of the noisy swap factor vs the exact one.

    The noise model matches the estimators' structure: both estimators
    see the same underlying shocks at each position, scaled by their own
    sigma, so estimator i's energy difference is dU + sqrt(2) * sigma_i * W
    with one shared W.
    """
    sigma1, sigma2 = sigma_pair
    cfg = SwapConfig(
        tau_low=tau_pair[0],
        tau_high=tau_pair[1],
        a1=a1,
        a2=1.0 - a1,
        sigma1=sigma1,
        sigma2=sigma2,
        max_factor=1e300,
    )
    xi1 = rng.standard_normal(n_draws)
    xi2 = rng.standard_normal(n_draws)
    draws = np.empty(n_draws)
    for i in range(n_draws):
        draws[i] = swap_factor_multi_variance(
            u_low + sigma1 * xi1[i],
            u_high + sigma1 * xi2[i],
            u_low + sigma2 * xi1[i],
            u_high + sigma2 * xi2[i],
            cfg,
            negate_second_term=negate_second_term,
        )
    exact = swap_factor_exact(u_low, u_high, cfg)
    mc_mean = float(draws.mean())
    se = float(draws.std(ddof=1) / np.sqrt(n_draws))
    if se <= 1e-12 * max(1.0, abs(exact)):
        # Degenerate (noise-free) cell: a z-score would divide float
        # round-off by ~1e-18, so compare the means directly instead.
        z = 0.0 if abs(mc_mean - exact) <= 1e-9 * abs(exact) else math.inf
    else:
        z = (mc_mean - exact) / se
    return {
        "tau_low": tau_pair[0],
        "tau_high": tau_pair[1],
        "sigma1": sigma1,
        "sigma2": sigma2,
        "a1": a1,
        "mc_mean": mc_mean,
        "exact": exact,
        "std_error": se,
        "z_score": z,
    }


def run_swap_unbiasedness(
    config: ExperimentConfig,
    n_draws: int = 100_000,
    negate_second_term: bool = False,
) -> ExperimentResult:
    """Monte-Carlo unbiasedness check over the full parameter grid.

    A single shared draw function is consistent with
    ``swap_factor_multi_variance``; see ``_unbiasedness_cell``.
    """
    t_start = time.perf_counter()
    rng = np.random.default_rng(config.seed)
    rows = []
    columns = [
        "tau_low",
        "tau_high",
        "sigma1",
        "sigma2",
        "a1",
        "mc_mean",
        "exact",
        "std_error",
        "z_score",
    ]
    cells = []
    for tau_pair in UNBIASEDNESS_TAU_PAIRS:
        for sigma_pair in UNBIASEDNESS_SIGMA_PAIRS:
            for a1 in UNBIASEDNESS_A1_VALUES:
                cell = _unbiasedness_cell(
                    tau_pair,
                    sigma_pair,
                    a1,
                    n_draws,
                    rng,
                    negate_second_term=negate_second_term,
                )
                cells.append(cell)
                rows.append([cell[c] for c in columns])

    z_scores = np.array([c["z_score"] for c in cells])
    metrics = {
        "n_cells": len(cells),
        "n_draws": n_draws,
        "max_abs_z": float(np.max(np.abs(z_scores))),
        "all_within_4": bool(np.all(np.abs(z_scores) <= 4.0)),
    }
    report = _base_report(config)
    report["negate_second_term"] = negate_second_term
    report["timings"] = {"total": time.perf_counter() - t_start}
    report["metrics"] = metrics
    report["cells"] = cells
    return ExperimentResult(
        config=config,
        sample_columns=columns,
        samples=rows,
        metrics=metrics,
        report=report,
    )


# -- double well -----------------------------------------------------------------


def _run_double_well(config: ExperimentConfig) -> ExperimentResult:
    t_start = time.perf_counter()
    model = DoubleWellEnergy()
    rng = np.random.default_rng(config.seed)
    init_low = np.asarray(
        config.init_low if config.init_low is not None else [-1.0], dtype=float
    )
    init_high = np.asarray(
        config.init_high if config.init_high is not None else [1.0], dtype=float
    )
    chain_low = ChainConfig(
        temperature=config.tau_low, step_size=config.step_size_low
    )
    if config.sampler == "sgld":
        trajectory = run_chain(
            init_low, chain_low, model, config.steps, rng, config.thinning
        )
        swap_log: list[SwapRecord] = []
        swap_count = attempt_count = 0
    else:
        chain_high = ChainConfig(
            temperature=config.tau_high, step_size=config.step_size_high
        )
        swap_cfg = SwapConfig(
            tau_low=config.tau_low,
            tau_high=config.tau_high,
            intensity=config.intensity,
            a1=config.a1,
            a2=config.a2,
        )
        result = run_replica_pair(
            init_low,
            init_high,
            model,
            model,
            swap_cfg,
            chain_low,
            chain_high,
            config.steps,
            config.swap_interval,
            rng,
            config.thinning,
        )
        trajectory = result.trajectory_low
        swap_log = result.swap_log
        swap_count = result.final.swap_count
        attempt_count = result.final.attempt_count

    columns = ["step", "x", "energy"]
    rows = [
        [s.step_count, float(s.position[0]), s.last_energy] for s in trajectory
    ]
    burn = config.burn_in_index(len(rows))
    xs = np.array([r[1] for r in rows[burn:]])
    metrics = {
        "n_samples": len(rows),
        "n_post_burn_in": len(xs),
        "swap_count": swap_count,
        "swap_attempts": attempt_count,
        "mean_x": float(xs.mean()),
        "var_x": float(xs.var()),
        "fraction_left_well": float(np.mean(xs < 0.0)),
        "fraction_right_well": float(np.mean(xs > 0.0)),
    }
    report = _base_report(config)
    report["timings"] = {"total": time.perf_counter() - t_start}
    report["metrics"] = metrics
    return ExperimentResult(
        config=config,
        sample_columns=columns,
        samples=rows,
        swap_log=swap_log,
        metrics=metrics,
        report=report,
    )


def _base_report(config: ExperimentConfig) -> dict:
    return {"experiment": config.experiment, "config": asdict(config)}
