"""Two-chain replica exchange with noisy, possibly multi-variance swap factors.

Three swap-factor estimators are provided:

- ``swap_factor_exact``: exp(tau_delta * (U1 - U2)) for exact energies,
  tau_delta = 1/tau_low - 1/tau_high.
- ``swap_factor_single_variance``: the bias-corrected factor when both
  chains share one energy estimator with standard deviation sigma.
- ``swap_factor_multi_variance``: the unbiased factor when each chain has
  its own estimator (sigma1, sigma2) weighted by a1 + a2 = 1; the
  correction term is (a1*sigma1 + a2*sigma2)^2 * tau_delta.

The two estimator differences combine with a PLUS sign; the variant with
the second term negated is kept behind a flag purely so tests can
demonstrate that it is biased whenever sigma1 != sigma2.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from mresgld.sampler import ChainConfig, ChainState, EnergyModel, sgld_step


@dataclass
class SwapConfig:
    """Parameters of the swap rule between the low and high temperature chains."""

    tau_low: float
    tau_high: float
    intensity: float = 1.0
    a1: float = 0.5
    a2: float = 0.5
    sigma1: float = 0.0
    sigma2: float = 0.0
    max_factor: float = 1e12

    def __post_init__(self) -> None:
        if self.tau_low <= 0 or self.tau_high <= 0:
            raise ValueError("temperatures must be positive")
        if self.tau_low > self.tau_high:
            raise ValueError(
                f"tau_low ({self.tau_low}) must not exceed tau_high ({self.tau_high})"
            )
        if self.intensity <= 0:
            raise ValueError("intensity must be positive")
        if not (0.0 < self.a1 < 1.0) or not (0.0 < self.a2 < 1.0):
            raise ValueError("a1 and a2 must lie in (0, 1)")
        if abs(self.a1 + self.a2 - 1.0) > 1e-12:
            raise ValueError(f"a1 + a2 must equal 1, got {self.a1 + self.a2}")
        if self.sigma1 < 0 or self.sigma2 < 0:
            raise ValueError("sigma1 and sigma2 must be nonnegative")

    @property
    def tau_delta(self) -> float:
        return 1.0 / self.tau_low - 1.0 / self.tau_high


def _clamped_exp(exponent: float, max_factor: float) -> float:
    """exp() with overflow clamped; the clamp never changes a swap decision."""
    if exponent > math.log(max_factor):
        return max_factor
    return math.exp(exponent)


def swap_factor_exact(u1: float, u2: float, cfg: SwapConfig) -> float:
    """Swap factor for exact energies of the low (u1) and high (u2) chains."""
    return _clamped_exp(cfg.tau_delta * (u1 - u2), cfg.max_factor)


def swap_factor_single_variance(
    uhat1: float, uhat2: float, sigma: float, cfg: SwapConfig
) -> float:
    """Bias-corrected swap factor when both chains share one estimator."""
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    td = cfg.tau_delta
    return _clamped_exp(td * (uhat1 - uhat2 - td * sigma**2), cfg.max_factor)


def swap_factor_multi_variance(
    uhat1_low: float,
    uhat1_high: float,
    uhat2_low: float,
    uhat2_high: float,
    cfg: SwapConfig,
    negate_second_term: bool = False,
) -> float:
    """Unbiased swap factor with a separate estimator per chain.

    Arguments are estimator 1 (low chain's model) at the low/high chain
    positions, then estimator 2 (high chain's model) at the same two
    positions.  ``negate_second_term`` flips the sign of the a2 term; it
    exists only to let tests document that the negated form is biased.
    """
    td = cfg.tau_delta
    sign = -1.0 if negate_second_term else 1.0
    combined = cfg.a1 * (uhat1_low - uhat1_high) + sign * cfg.a2 * (
        uhat2_low - uhat2_high
    )
    correction = (cfg.a1 * cfg.sigma1 + cfg.a2 * cfg.sigma2) ** 2 * td
    return _clamped_exp(td * (combined - correction), cfg.max_factor)


@dataclass
class ReplicaPairState:
    """Paired chain state plus swap counters."""

    chain_low: ChainState
    chain_high: ChainState
    swap_count: int = 0
    attempt_count: int = 0


@dataclass
class SwapRecord:
    """One row of the swap log."""

    step: int
    s_hat: float
    u1_low: float
    u1_high: float
    u2_low: float
    u2_high: float
    swapped: bool


def attempt_swap(
    pair: ReplicaPairState,
    cfg: SwapConfig,
    step_size: float,
    model_low: EnergyModel,
    model_high: EnergyModel,
    rng: np.random.Generator,
    step: int = 0,
) -> tuple[ReplicaPairState, SwapRecord]:
    """Attempt one position exchange with probability min(1, r * eta * S_hat).

    Each chain's own-position energy is taken from its cached
    ``last_energy``; the two cross evaluations (each model at the other
    chain's position) are computed here, so one attempt costs two extra
    energy evaluations.  Only positions are exchanged: temperatures and
    energy models stay attached to their chains.
    """
    u1_low = pair.chain_low.last_energy
    u2_high = pair.chain_high.last_energy
    u1_high = float(model_low.energy(pair.chain_high.position))
    u2_low = float(model_high.energy(pair.chain_low.position))

    s_hat = swap_factor_multi_variance(u1_low, u1_high, u2_low, u2_high, cfg)
    prob = min(1.0, cfg.intensity * step_size * s_hat)
    swapped = rng.uniform() < prob

    low = pair.chain_low
    high = pair.chain_high
    if swapped:
        # Cross energies were just computed; reuse them for the caches.
        low = ChainState(
            position=high.position.copy(),
            step_count=low.step_count,
            last_energy=u1_high,
            reject_count=low.reject_count,
        )
        high = ChainState(
            position=pair.chain_low.position.copy(),
            step_count=pair.chain_high.step_count,
            last_energy=u2_low,
            reject_count=pair.chain_high.reject_count,
        )
    new_pair = ReplicaPairState(
        chain_low=low,
        chain_high=high,
        swap_count=pair.swap_count + (1 if swapped else 0),
        attempt_count=pair.attempt_count + 1,
    )
    record = SwapRecord(
        step=step,
        s_hat=s_hat,
        u1_low=u1_low,
        u1_high=u1_high,
        u2_low=u2_low,
        u2_high=u2_high,
        swapped=swapped,
    )
    return new_pair, record


@dataclass
class ReplicaRunResult:
    """Thinned trajectories of both chains plus the swap log."""

    trajectory_low: list[ChainState]
    trajectory_high: list[ChainState]
    swap_log: list[SwapRecord] = field(default_factory=list)
    final: Optional[ReplicaPairState] = None


def run_replica_pair(
    init_low: np.ndarray,
    init_high: np.ndarray,
    model_low: EnergyModel,
    model_high: EnergyModel,
    cfg: SwapConfig,
    chain_cfg_low: ChainConfig,
    chain_cfg_high: ChainConfig,
    n_steps: int,
    swap_interval: int,
    rng: np.random.Generator,
    thinning: int = 1,
) -> ReplicaRunResult:
    """Drive the paired chains: SGLD steps with periodic swap attempts.

    Both chains advance one SGLD step per iteration; every
    ``swap_interval`` steps a swap is attempted.  Three independent
    random streams (one per chain, one for swap decisions) are spawned
    from ``rng`` so the chains stay decoupled between swap barriers.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be positive")
    if swap_interval < 1:
        raise ValueError("swap_interval must be positive")

    seq = rng.spawn(3)
    rng_low, rng_high, rng_swap = seq[0], seq[1], seq[2]

    low = ChainState(position=np.asarray(init_low, dtype=float).copy())
    high = ChainState(position=np.asarray(init_high, dtype=float).copy())
    low.last_energy = float(model_low.energy(low.position))
    high.last_energy = float(model_high.energy(high.position))
    pair = ReplicaPairState(chain_low=low, chain_high=high)

    traj_low: list[ChainState] = []
    traj_high: list[ChainState] = []
    swap_log: list[SwapRecord] = []

    for k in range(n_steps):
        new_low = sgld_step(pair.chain_low, chain_cfg_low, model_low, rng_low)
        new_high = sgld_step(pair.chain_high, chain_cfg_high, model_high, rng_high)
        pair = ReplicaPairState(
            chain_low=new_low,
            chain_high=new_high,
            swap_count=pair.swap_count,
            attempt_count=pair.attempt_count,
        )
        if (k + 1) % swap_interval == 0:
            pair, record = attempt_swap(
                pair,
                cfg,
                chain_cfg_low.step_size_at(k),
                model_low,
                model_high,
                rng_swap,
                step=k + 1,
            )
            swap_log.append(record)
        if (k + 1) % thinning == 0:
            traj_low.append(pair.chain_low.copy())
            traj_high.append(pair.chain_high.copy())

    return ReplicaRunResult(
        trajectory_low=traj_low,
        trajectory_high=traj_high,
        swap_log=swap_log,
        final=pair,
    )


def write_swap_log(records: list[SwapRecord], path: str) -> None:
    """Serialize the swap log as CSV (floats at 9 significant digits)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["step", "s_hat", "u1_low", "u1_high", "u2_low", "u2_high", "swapped"]
        )
        for r in records:
            writer.writerow(
                [
                    r.step,
                    f"{r.s_hat:.9g}",
                    f"{r.u1_low:.9g}",
                    f"{r.u1_high:.9g}",
                    f"{r.u2_low:.9g}",
                    f"{r.u2_high:.9g}",
                    int(r.swapped),
                ]
            )
