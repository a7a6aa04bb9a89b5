"""Small dense tanh network with exact input derivatives.

Parameters live in one flat vector (weights and biases layer by layer,
optionally followed by a single trainable scalar for inverse problems).
Input derivatives up to second order are computed with nested
forward-mode differentiation (second-order dual numbers), which is exact
to machine precision for the smooth tanh network.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Optional

import jax
import jax.numpy as jnp
import numpy as np

jax.config.update("jax_enable_x64", True)

DEFAULT_WIDTHS = (2, 32, 32, 32, 1)


def param_count(widths: tuple[int, ...], inverse_slot: bool = False) -> int:
    """Flat parameter count: sum of (fan_in + 1) * fan_out, plus the slot."""
    n = sum((widths[i] + 1) * widths[i + 1] for i in range(len(widths) - 1))
    return n + (1 if inverse_slot else 0)


@dataclass
class DenseNetwork:
    """Fully connected tanh network with flat parameters.

    ``inverse_slot`` appends one scalar to the flat vector; inverse
    problems use it as the trainable PDE coefficient.
    """

    widths: tuple[int, ...] = DEFAULT_WIDTHS
    inverse_slot: bool = False
    params: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self) -> None:
        expected = param_count(self.widths, self.inverse_slot)
        if self.params.size == 0:
            self.params = np.zeros(expected)
        if self.params.size != expected:
            raise ValueError(
                f"expected {expected} parameters for widths {self.widths}"
                f"{' + slot' if self.inverse_slot else ''}, got {self.params.size}"
            )

    @property
    def slot_value(self) -> Optional[float]:
        return float(self.params[-1]) if self.inverse_slot else None


def init_network(
    widths: tuple[int, ...] = DEFAULT_WIDTHS,
    rng: Optional[np.random.Generator] = None,
    inverse_slot: bool = False,
    slot_init: float = 0.5,
) -> DenseNetwork:
    """Gaussian init with std 1/sqrt(fan_in) for weights, zero biases."""
    rng = rng or np.random.default_rng(0)
    chunks = []
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        W = rng.standard_normal((fan_in, fan_out)) / np.sqrt(fan_in)
        b = np.zeros(fan_out)
        chunks.append(W.ravel())
        chunks.append(b)
    if inverse_slot:
        chunks.append(np.array([slot_init]))
    return DenseNetwork(
        widths=widths, inverse_slot=inverse_slot, params=np.concatenate(chunks)
    )


def unflatten(flat: jnp.ndarray, widths: tuple[int, ...]) -> list:
    """Split a flat vector into (W, b) pairs; ignores a trailing slot."""
    layers = []
    pos = 0
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        W = flat[pos : pos + fan_in * fan_out].reshape(fan_in, fan_out)
        pos += fan_in * fan_out
        b = flat[pos : pos + fan_out]
        pos += fan_out
        layers.append((W, b))
    return layers


def mlp_apply(flat: jnp.ndarray, widths: tuple[int, ...], x: jnp.ndarray):
    """Scalar network output for one input point (jax-traceable)."""
    layers = unflatten(flat, widths)
    h = x
    for W, b in layers[:-1]:
        h = jnp.tanh(h @ W + b)
    W, b = layers[-1]
    out = h @ W + b
    return out[0]


@lru_cache(maxsize=32)
def _derivative_fn(widths: tuple[int, ...], n_inputs: int):
    """Jitted map point -> (u, first derivatives, second derivatives).

    Returns u, du/dx_i and d2u/dx_i^2 for each input coordinate, using
    nested jvp (forward-over-forward, i.e. second-order duals).
    """

    def derivs(flat, x):
        def u_fn(z):
            return mlp_apply(flat, widths, z)

        u = u_fn(x)
        firsts = []
        seconds = []
        for i in range(n_inputs):
            v = jnp.zeros(n_inputs).at[i].set(1.0)

            def d1(z, v=v):
                return jax.jvp(u_fn, (z,), (v,))[1]

            firsts.append(d1(x))
            seconds.append(jax.jvp(d1, (x,), (v,))[1])
        return u, jnp.stack(firsts), jnp.stack(seconds)

    return jax.jit(derivs)


def forward(net: DenseNetwork, x: np.ndarray) -> float:
    """Standard dense forward pass at one input point."""
    x = np.asarray(x, dtype=float)
    if x.shape != (net.widths[0],):
        raise ValueError(
            f"input dimension {x.shape} does not match first layer {net.widths[0]}"
        )
    core = net.params[:-1] if net.inverse_slot else net.params
    return float(mlp_apply(jnp.asarray(core), net.widths, jnp.asarray(x)))


def input_derivatives(
    net: DenseNetwork, x: np.ndarray, orders: Iterable[str] = ("u", "u_x", "u_xx")
) -> dict[str, float]:
    """Derivatives of the network output with respect to its inputs.

    Supported keys: ``u``, ``u_x``, ``u_xx`` (first input coordinate) and
    ``u_t``, ``u_tt`` (second input coordinate).  Requested orders above
    two are rejected.
    """
    known = {"u", "u_x", "u_xx", "u_t", "u_tt"}
    orders = list(orders)
    unknown = set(orders) - known
    if unknown:
        raise ValueError(f"unsupported derivative request: {sorted(unknown)}")
    x = np.asarray(x, dtype=float)
    core = net.params[:-1] if net.inverse_slot else net.params
    fn = _derivative_fn(net.widths, net.widths[0])
    u, first, second = fn(jnp.asarray(core), jnp.asarray(x))
    table = {
        "u": float(u),
        "u_x": float(first[0]),
        "u_xx": float(second[0]),
    }
    if net.widths[0] >= 2:
        table["u_t"] = float(first[1])
        table["u_tt"] = float(second[1])
    return {k: table[k] for k in orders}
