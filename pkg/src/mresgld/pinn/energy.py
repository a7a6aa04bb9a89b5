"""Bayesian PINN energy: negative log posterior over network parameters.

The likelihood factorizes over PDE-residual, solution-data and boundary
points, each Gaussian with its own noise level; a standard normal prior
on all parameters (including the trainable coefficient slot) adds
||params||^2 / 2, averaged by the point count like the likelihood
terms.  Parameter gradients are reverse-mode derivatives of
the full energy, differentiating through the nested forward-mode input
derivatives inside the residual.
"""

from __future__ import annotations

from typing import Optional

import jax
import jax.numpy as jnp
import numpy as np

from mresgld.pinn.network import DenseNetwork, init_network, mlp_apply
from mresgld.pinn.problems import CollocationSet, PinnLossSpec, ResidualDefinition
from mresgld.sampler import EnergyModel


def _split_params(flat: jnp.ndarray, trainable_alpha: bool, fixed_alpha):
    if trainable_alpha:
        return flat[:-1], flat[-1]
    return flat, fixed_alpha


def _build_energy_fn(
    colloc: CollocationSet,
    spec: PinnLossSpec,
    pde: ResidualDefinition,
    widths: tuple[int, ...],
):
    """Pure-jax energy of the flat parameter vector, with term breakdown."""
    interior = jnp.asarray(colloc.interior)
    interior_f = jnp.asarray(colloc.interior_f)
    boundary = jnp.asarray(colloc.boundary)
    boundary_values = jnp.asarray(colloc.boundary_values)
    initial = jnp.asarray(colloc.initial)
    initial_u = jnp.asarray(colloc.initial_u)
    initial_v = jnp.asarray(colloc.initial_v)
    observations = jnp.asarray(colloc.observations)
    observed_values = jnp.asarray(colloc.observed_values)

    # Likelihood terms below are per-point averages, so the prior is
    # averaged by the total point count as well: otherwise its relative
    # weight grows with the parameter count until it dominates the fit
    # (weight decay crushes the network) and pulls any trainable
    # coefficient toward zero.  This also keeps coarse- and fine-
    # collocation energies on a common scale.
    n_points = (
        len(colloc.interior)
        + len(colloc.boundary)
        + len(colloc.initial)
        + len(colloc.observations)
    )

    T = pde.time_scale
    trainable = pde.trainable_alpha
    fixed_alpha = pde.alpha
    kind = pde.kind

    def u_of(core, x):
        return mlp_apply(core, widths, x)

    def derivs(core, x):
        # u plus first/second derivatives along each input coordinate,
        # nested jvp = second-order duals.
        def f(z):
            return u_of(core, z)

        ex = jnp.array([1.0, 0.0])
        et = jnp.array([0.0, 1.0])

        def dx(z):
            return jax.jvp(f, (z,), (ex,))[1]

        def dt(z):
            return jax.jvp(f, (z,), (et,))[1]

        u = f(x)
        u_x = dx(x)
        u_xx = jax.jvp(dx, (x,), (ex,))[1]
        u_t = dt(x)
        u_tt = jax.jvp(dt, (x,), (et,))[1]
        return u, u_x, u_xx, u_t, u_tt

    def residual(core, alpha, x, f_val):
        u, _, u_xx, u_t, u_tt = derivs(core, x)
        if kind == "qgd":
            return u_t / T + alpha * u_tt / T**2 - u_xx - f_val
        return -u_xx + alpha * u**2 - f_val

    v_residual = jax.vmap(residual, in_axes=(None, None, 0, 0))
    v_apply = jax.vmap(u_of, in_axes=(None, 0))

    def v_time_derivative(core, xs):
        def dt_only(x):
            _, _, _, u_t, _ = derivs(core, x)
            return u_t / T

        return jax.vmap(dt_only)(xs)

    def terms(flat):
        core, alpha = _split_params(flat, trainable, fixed_alpha)
        out = {}
        r = v_residual(core, alpha, interior, interior_f)
        out["residual"] = jnp.mean(r**2) / (2.0 * spec.sigma_f**2)

        misfits = []
        if observations.shape[0] > 0:
            misfits.append(v_apply(core, observations) - observed_values)
        if initial.shape[0] > 0:
            misfits.append(v_apply(core, initial) - initial_u)
        if misfits:
            m = jnp.concatenate(misfits)
            out["data"] = jnp.mean(m**2) / (2.0 * spec.sigma_u**2)
        else:
            out["data"] = jnp.asarray(0.0)

        if initial_v.shape[0] > 0:
            dv = v_time_derivative(core, initial) - initial_v
            out["initial_velocity"] = jnp.mean(dv**2) / (2.0 * spec.sigma_u**2)
        else:
            out["initial_velocity"] = jnp.asarray(0.0)

        if boundary.shape[0] > 0:
            b = v_apply(core, boundary) - boundary_values
            out["boundary"] = jnp.mean(b**2) / (2.0 * spec.sigma_b**2)
        else:
            out["boundary"] = jnp.asarray(0.0)

        out["prior"] = 0.5 * jnp.sum(flat**2) / n_points
        return out

    def energy(flat):
        t = terms(flat)
        return (
            t["residual"]
            + t["data"]
            + t["initial_velocity"]
            + t["boundary"]
            + t["prior"]
        )

    return energy, terms


class _EnergyCore:
    """Compiled energy/gradient pair for one problem bundle."""

    def __init__(
        self,
        colloc: CollocationSet,
        spec: PinnLossSpec,
        pde: ResidualDefinition,
        widths: tuple[int, ...],
    ):
        energy, terms = _build_energy_fn(colloc, spec, pde, widths)
        self.energy = jax.jit(energy)
        self.gradient = jax.jit(jax.grad(energy))
        self.terms = jax.jit(terms)


_CORE_CACHE: dict = {}


def _cache_key(
    colloc: CollocationSet,
    spec: PinnLossSpec,
    pde: ResidualDefinition,
    widths: tuple[int, ...],
) -> tuple:
    """Content-based key so identical problems reuse compiled cores."""
    arrays = (
        colloc.interior,
        colloc.interior_f,
        colloc.boundary,
        colloc.boundary_values,
        colloc.initial,
        colloc.initial_u,
        colloc.initial_v,
        colloc.observations,
        colloc.observed_values,
    )
    digest = tuple(hash(np.asarray(a).tobytes()) for a in arrays)
    return (
        pde.kind,
        pde.alpha,
        pde.time_scale,
        pde.t_final,
        widths,
        spec.sigma_u,
        spec.sigma_f,
        spec.sigma_b,
        spec.w1,
        spec.w2,
        spec.w3,
        digest,
    )


def _core_for(
    colloc: CollocationSet,
    spec: PinnLossSpec,
    pde: ResidualDefinition,
    widths: tuple[int, ...],
) -> _EnergyCore:
    key = _cache_key(colloc, spec, pde, widths)
    core = _CORE_CACHE.get(key)
    if core is None:
        core = _EnergyCore(colloc, spec, pde, widths)
        _CORE_CACHE[key] = core
    return core


def pinn_energy(
    net: DenseNetwork,
    colloc: CollocationSet,
    spec: PinnLossSpec,
    pde: ResidualDefinition,
    breakdown: bool = False,
):
    """Energy of the network parameters; optionally the per-term breakdown."""
    core = _core_for(colloc, spec, pde, net.widths)
    flat = jnp.asarray(net.params)
    value = float(core.energy(flat))
    if not np.isfinite(value):
        raise FloatingPointError("non-finite PINN energy")
    if breakdown:
        return value, {k: float(v) for k, v in core.terms(flat).items()}
    return value


def pinn_gradient(
    net: DenseNetwork,
    colloc: CollocationSet,
    spec: PinnLossSpec,
    pde: ResidualDefinition,
) -> np.ndarray:
    """Reverse-mode gradient of the energy with respect to all parameters."""
    core = _core_for(colloc, spec, pde, net.widths)
    return np.asarray(core.gradient(jnp.asarray(net.params)))


def predict(net: DenseNetwork, grid: np.ndarray) -> np.ndarray:
    """Network outputs on a batch of input points."""
    core_params = net.params[:-1] if net.inverse_slot else net.params
    fn = jax.vmap(lambda x: mlp_apply(jnp.asarray(core_params), net.widths, x))
    return np.asarray(fn(jnp.asarray(np.atleast_2d(grid))))


class PinnEnergyModel(EnergyModel):
    """EnergyModel over flat network parameters for one collocation fidelity."""

    def __init__(
        self,
        colloc: CollocationSet,
        spec: PinnLossSpec,
        pde: ResidualDefinition,
        widths: tuple[int, ...],
        inverse_slot: bool = False,
        assigned_sigma: float = 0.0,
    ):
        self.colloc = colloc
        self.spec = spec
        self.pde = pde
        self.widths = widths
        self.inverse_slot = inverse_slot
        self.assigned_sigma = assigned_sigma
        self._core = _core_for(colloc, spec, pde, widths)

    def sigma(self) -> float:
        return self.assigned_sigma

    def energy(self, position: np.ndarray) -> float:
        value = float(self._core.energy(jnp.asarray(position)))
        if not np.isfinite(value):
            raise FloatingPointError("non-finite PINN energy")
        return value

    def gradient(self, position: np.ndarray) -> np.ndarray:
        return np.asarray(self._core.gradient(jnp.asarray(position)))


def calibrate_coarse_pinn_sigma(
    colloc_fine: CollocationSet,
    colloc_coarse: CollocationSet,
    spec: PinnLossSpec,
    pde: ResidualDefinition,
    widths: tuple[int, ...],
    inverse_slot: bool = False,
    n_nets: int = 20,
    rng: Optional[np.random.Generator] = None,
) -> float:
    """RMS spread of the coarse-collocation energy around the fine one.

    Evaluated on random networks; used as the high temperature chain's
    assigned estimator standard deviation.
    """
    rng = rng or np.random.default_rng(0)
    fine = _core_for(colloc_fine, spec, pde, widths)
    coarse = _core_for(colloc_coarse, spec, pde, widths)
    gaps = []
    for _ in range(n_nets):
        net = init_network(widths, rng=rng, inverse_slot=inverse_slot)
        flat = jnp.asarray(net.params)
        gaps.append(float(coarse.energy(flat)) - float(fine.energy(flat)))
    return float(np.sqrt(np.mean(np.asarray(gaps) ** 2)))
