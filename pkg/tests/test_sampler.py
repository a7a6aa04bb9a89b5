"""Unit tests for the single-chain Langevin sampler."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mresgld.sampler import (
    ChainConfig,
    ChainState,
    EnergyModel,
    SamplerError,
    run_chain,
    sgld_step,
    spawn_generators,
)


class Quadratic(EnergyModel):
    """U(x) = c * ||x||^2."""

    def __init__(self, c=1.0):
        self.c = c

    def energy(self, position):
        return float(self.c * np.sum(position**2))

    def gradient(self, position):
        return 2.0 * self.c * np.asarray(position, dtype=float)


class BoxedQuadratic(Quadratic):
    def in_domain(self, position):
        return bool(np.all(np.abs(position) <= 1.0))


class BadGradient(EnergyModel):
    def energy(self, position):
        return 0.0

    def gradient(self, position):
        return np.array([np.nan])


def test_zero_temperature_is_gradient_descent():
    # x' = (1 - 2 eta c) x exactly, for as many steps as we like.
    model = Quadratic(c=1.0)
    cfg = ChainConfig(temperature=0.0, step_size=0.1)
    x0 = np.array([1.0, -2.0])
    traj = run_chain(x0, cfg, model, 10, np.random.default_rng(0))
    expected = x0 * 0.8**10
    np.testing.assert_allclose(traj[-1].position, expected, rtol=1e-12)


def test_last_energy_cached():
    model = Quadratic()
    cfg = ChainConfig(temperature=0.5, step_size=0.05)
    state = sgld_step(
        ChainState(position=np.array([0.3])), cfg, model, np.random.default_rng(1)
    )
    assert state.last_energy == pytest.approx(model.energy(state.position))


def test_out_of_domain_proposal_rejected():
    model = BoxedQuadratic()
    cfg = ChainConfig(temperature=50.0, step_size=1.0)  # huge noise: escapes box
    state = ChainState(position=np.array([0.9]))
    rng = np.random.default_rng(2)
    for _ in range(20):
        state = sgld_step(state, cfg, model, rng)
        assert np.all(np.abs(state.position) <= 1.0)
    assert state.reject_count > 0
    assert state.step_count == 20


def test_non_finite_gradient_raises_with_step_index():
    cfg = ChainConfig(temperature=1.0, step_size=0.1)
    with pytest.raises(SamplerError, match="step 0"):
        run_chain(np.array([0.0]), cfg, BadGradient(), 5, np.random.default_rng(0))


def test_step_size_schedule_is_used():
    model = Quadratic()
    cfg = ChainConfig(
        temperature=0.0,
        step_size=0.1,
        step_size_schedule=lambda k: 0.1 if k == 0 else 0.2,
    )
    traj = run_chain(np.array([1.0]), cfg, model, 2, np.random.default_rng(0))
    # step 0 uses 0.1 -> 0.8, step 1 uses 0.2 -> 0.8 * 0.6
    assert traj[-1].position[0] == pytest.approx(0.8 * 0.6, rel=1e-12)


def test_determinism():
    model = Quadratic()
    cfg = ChainConfig(temperature=1.0, step_size=0.05)
    a = run_chain(np.array([1.0]), cfg, model, 100, np.random.default_rng(42))
    b = run_chain(np.array([1.0]), cfg, model, 100, np.random.default_rng(42))
    assert all(
        np.array_equal(x.position, y.position) for x, y in zip(a, b)
    )


def test_invalid_configs_rejected():
    with pytest.raises(SamplerError):
        ChainConfig(temperature=-1.0, step_size=0.1)
    with pytest.raises(SamplerError):
        ChainConfig(temperature=1.0, step_size=0.0)
    with pytest.raises(SamplerError):
        ChainConfig(temperature=1.0, step_size=0.1, estimator_sigma=-1.0)


@given(
    n_steps=st.integers(min_value=1, max_value=200),
    thinning=st.integers(min_value=1, max_value=20),
)
@settings(max_examples=30, deadline=None)
def test_trajectory_length_matches_thinning(n_steps, thinning):
    model = Quadratic()
    cfg = ChainConfig(temperature=0.1, step_size=0.01)
    traj = run_chain(
        np.array([0.5]), cfg, model, n_steps, np.random.default_rng(0), thinning
    )
    assert len(traj) == n_steps // thinning


@given(seed=st.integers(min_value=0, max_value=2**31))
@settings(max_examples=20, deadline=None)
def test_spawned_generators_are_independent_and_reproducible(seed):
    a = spawn_generators(seed, 3)
    b = spawn_generators(seed, 3)
    draws_a = [g.standard_normal(4) for g in a]
    draws_b = [g.standard_normal(4) for g in b]
    for x, y in zip(draws_a, draws_b):
        np.testing.assert_array_equal(x, y)
    # distinct streams differ from each other
    assert not np.array_equal(draws_a[0], draws_a[1])


def test_stationary_variance_tracks_temperature():
    # Ornstein-Uhlenbeck check at one temperature; the full three-point
    # sweep lives in the acceptance suite.
    model = Quadratic(c=0.5)  # U = x^2 / 2, grad = x
    tau = 0.5
    cfg = ChainConfig(temperature=tau, step_size=0.01)
    traj = run_chain(
        np.array([0.0]), cfg, model, 60_000, np.random.default_rng(5), thinning=5
    )
    xs = np.array([s.position[0] for s in traj[len(traj) // 5 :]])
    assert xs.var() == pytest.approx(tau, rel=0.1)
