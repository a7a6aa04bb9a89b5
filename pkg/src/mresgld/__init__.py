"""Multi-variance replica exchange stochastic gradient Langevin dynamics.

Two tempered SGLD chains with position swaps, where each chain may carry
its own energy estimator (different fidelity, different variance).  Used
here for Bayesian PDE source inversion and Bayesian PINN training.
"""

from mresgld.sampler import ChainConfig, ChainState, EnergyModel, run_chain, sgld_step
from mresgld.replica import (
    ReplicaPairState,
    SwapConfig,
    attempt_swap,
    run_replica_pair,
    swap_factor_exact,
    swap_factor_multi_variance,
    swap_factor_single_variance,
)

__all__ = [
    "ChainConfig",
    "ChainState",
    "EnergyModel",
    "ReplicaPairState",
    "SwapConfig",
    "attempt_swap",
    "run_chain",
    "run_replica_pair",
    "sgld_step",
    "swap_factor_exact",
    "swap_factor_multi_variance",
    "swap_factor_single_variance",
]
