"""Bayesian physics-informed neural networks trained by Langevin sampling."""

from mresgld.pinn.network import (
    DenseNetwork,
    forward,
    init_network,
    input_derivatives,
    param_count,
)
from mresgld.pinn.problems import (
    CollocationSet,
    PinnLossSpec,
    ResidualDefinition,
    build_nonlinear_inverse,
    build_qgd_forward,
    build_qgd_inverse,
    relative_error,
)
from mresgld.pinn.energy import (
    PinnEnergyModel,
    calibrate_coarse_pinn_sigma,
    pinn_energy,
    pinn_gradient,
)

__all__ = [
    "CollocationSet",
    "DenseNetwork",
    "PinnEnergyModel",
    "PinnLossSpec",
    "ResidualDefinition",
    "build_nonlinear_inverse",
    "build_qgd_forward",
    "build_qgd_inverse",
    "calibrate_coarse_pinn_sigma",
    "forward",
    "init_network",
    "input_derivatives",
    "param_count",
    "pinn_energy",
    "pinn_gradient",
    "relative_error",
]
