"""Single-chain stochastic gradient Langevin dynamics.

The update rule is

    x' = x - eta * grad(x) + sqrt(2 * eta * tau) * eps,    eps ~ N(0, I),

where ``eta`` is the step size and ``tau`` the temperature.  With tau = 0
and an exact gradient this reduces to plain gradient descent; with tau > 0
the long-run samples follow exp(-U(x)/tau).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np


class SamplerError(RuntimeError):
    """Raised when a step cannot be completed (non-finite gradient, bad config)."""


class EnergyModel:
    """Noisy energy oracle consumed by the sampler.

    Subclasses provide ``energy`` (a noisy evaluation of U), ``gradient``
    (a noisy evaluation of grad U) and ``sigma`` (the assumed standard
    deviation of ``energy`` around the true U, constant for one run).
    """

    def energy(self, position: np.ndarray) -> float:
        raise NotImplementedError

    def gradient(self, position: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def sigma(self) -> float:
        return 0.0

    def in_domain(self, position: np.ndarray) -> bool:
        """Whether ``position`` lies in the model's support.

        Steps proposing an out-of-domain position are rejected (position
        retained, rejection counted) so a bounded prior is respected.
        """
        return True


@dataclass
class ChainConfig:
    """Temperature, step size and assumed energy-estimator noise of one chain.

    ``step_size_schedule`` maps the step index to a step size; it defaults
    to the constant ``step_size``.
    """

    temperature: float
    step_size: float
    estimator_sigma: float = 0.0
    step_size_schedule: Optional[Callable[[int], float]] = None

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise SamplerError(f"temperature must be >= 0, got {self.temperature}")
        if self.step_size <= 0:
            raise SamplerError(f"step_size must be positive, got {self.step_size}")
        if self.estimator_sigma < 0:
            raise SamplerError(
                f"estimator_sigma must be >= 0, got {self.estimator_sigma}"
            )

    def step_size_at(self, k: int) -> float:
        if self.step_size_schedule is None:
            return self.step_size
        return self.step_size_schedule(k)


@dataclass
class ChainState:
    """Current position of one chain plus bookkeeping counters."""

    position: np.ndarray
    step_count: int = 0
    last_energy: float = float("nan")
    reject_count: int = 0

    def copy(self) -> "ChainState":
        return ChainState(
            position=self.position.copy(),
            step_count=self.step_count,
            last_energy=self.last_energy,
            reject_count=self.reject_count,
        )


def sgld_step(
    state: ChainState,
    config: ChainConfig,
    model: EnergyModel,
    rng: np.random.Generator,
) -> ChainState:
    """Advance one SGLD step and refresh the cached energy.

    The cached ``last_energy`` is reused by swap decisions so the
    (possibly expensive) energy model is not re-evaluated there.

    Raises
    ------
    SamplerError
        If the gradient at the current position is non-finite.
    """
    position = np.asarray(state.position, dtype=float)
    grad = np.asarray(model.gradient(position), dtype=float)
    if not np.all(np.isfinite(grad)):
        raise SamplerError(
            f"non-finite gradient at position {position.tolist()} "
            f"(step {state.step_count})"
        )
    eta = config.step_size_at(state.step_count)
    noise = rng.standard_normal(position.shape)
    proposal = position - eta * grad + np.sqrt(2.0 * eta * config.temperature) * noise

    if not model.in_domain(proposal):
        # Bounded support: keep the position, count the rejection.
        return ChainState(
            position=position,
            step_count=state.step_count + 1,
            last_energy=state.last_energy,
            reject_count=state.reject_count + 1,
        )

    energy = float(model.energy(proposal))
    return ChainState(
        position=proposal,
        step_count=state.step_count + 1,
        last_energy=energy,
        reject_count=state.reject_count,
    )


def run_chain(
    init: np.ndarray,
    config: ChainConfig,
    model: EnergyModel,
    n_steps: int,
    rng: np.random.Generator,
    thinning: int = 1,
) -> list[ChainState]:
    """Run a single SGLD chain, returning thinned state snapshots.

    The trajectory holds ``floor(n_steps / thinning)`` snapshots (every
    ``thinning``-th state).  Identical seeds produce identical output.
    """
    if n_steps < 1:
        raise SamplerError("n_steps must be positive")
    if thinning < 1:
        raise SamplerError("thinning must be positive")
    state = ChainState(position=np.asarray(init, dtype=float).copy())
    trajectory: list[ChainState] = []
    for k in range(n_steps):
        try:
            state = sgld_step(state, config, model, rng)
        except SamplerError as err:
            raise SamplerError(f"step {k}: {err}") from err
        if (k + 1) % thinning == 0:
            trajectory.append(state.copy())
    return trajectory


def spawn_generators(seed: int, n: int) -> list[np.random.Generator]:
    """Independent child generators from one seed (one stream per chain)."""
    seq = np.random.SeedSequence(seed)
    return [np.random.default_rng(child) for child in seq.spawn(n)]
