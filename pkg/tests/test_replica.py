"""Unit tests for swap factors and the replica-pair driver."""

import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mresgld.replica import (
    SwapConfig,
    attempt_swap,
    run_replica_pair,
    swap_factor_exact,
    swap_factor_multi_variance,
    swap_factor_single_variance,
    write_swap_log,
)
from mresgld.sampler import ChainConfig, ChainState, EnergyModel


class Quadratic(EnergyModel):
    def energy(self, position):
        return float(np.sum(position**2))

    def gradient(self, position):
        return 2.0 * np.asarray(position, dtype=float)


def default_cfg(**kw):
    base = dict(tau_low=1.0, tau_high=10.0)
    base.update(kw)
    return SwapConfig(**base)


# -- config validation ---------------------------------------------------------


def test_temperature_ordering_enforced():
    with pytest.raises(ValueError):
        SwapConfig(tau_low=2.0, tau_high=1.0)


def test_weights_must_sum_to_one():
    with pytest.raises(ValueError):
        SwapConfig(tau_low=1.0, tau_high=2.0, a1=0.6, a2=0.6)


def test_negative_sigma_rejected():
    with pytest.raises(ValueError):
        SwapConfig(tau_low=1.0, tau_high=2.0, sigma1=-0.1)


def test_tau_delta():
    cfg = default_cfg()
    assert cfg.tau_delta == pytest.approx(1.0 - 0.1)


# -- reduction identities --------------------------------------------------------


@given(
    u1=st.floats(-20, 20),
    u2=st.floats(-20, 20),
    sigma=st.floats(0, 3),
    a1=st.floats(0.05, 0.95),
)
@settings(max_examples=300, deadline=None)
def test_multi_variance_reduces_to_single_variance(u1, u2, sigma, a1):
    # Equal sigmas and shared energy draws: the multi-variance factor must
    # coincide with the single-estimator corrected factor.
    cfg = default_cfg(a1=a1, a2=1.0 - a1, sigma1=sigma, sigma2=sigma)
    multi = swap_factor_multi_variance(u1, u2, u1, u2, cfg)
    single = swap_factor_single_variance(u1, u2, sigma, cfg)
    assert multi == pytest.approx(single, rel=1e-12)


@given(u1=st.floats(-20, 20), u2=st.floats(-20, 20))
@settings(max_examples=300, deadline=None)
def test_single_variance_reduces_to_exact_at_zero_sigma(u1, u2):
    cfg = default_cfg()
    assert swap_factor_single_variance(u1, u2, 0.0, cfg) == pytest.approx(
        swap_factor_exact(u1, u2, cfg), rel=1e-12
    )


def test_exact_factor_closed_form():
    cfg = default_cfg()
    assert swap_factor_exact(3.0, 1.0, cfg) == pytest.approx(
        math.exp(cfg.tau_delta * 2.0), rel=1e-12
    )


def test_overflow_clamped_to_max_factor():
    cfg = default_cfg(max_factor=1e12)
    assert swap_factor_exact(1e6, 0.0, cfg) == 1e12


@given(
    u=st.floats(-5, 5),
    bump=st.floats(0.1, 5),
    a1=st.floats(0.05, 0.95),
)
@settings(max_examples=100, deadline=None)
def test_swap_factor_increases_with_low_chain_energy(u, bump, a1):
    # Higher energy at the low chain's position makes a swap more attractive.
    cfg = default_cfg(a1=a1, a2=1.0 - a1, sigma1=0.2, sigma2=0.7, max_factor=1e300)
    lo = swap_factor_multi_variance(u, 0.0, u, 0.0, cfg)
    hi = swap_factor_multi_variance(u + bump, 0.0, u + bump, 0.0, cfg)
    assert hi > lo


# -- swap mechanics ----------------------------------------------------------------


def test_attempt_swap_exchanges_positions_and_caches():
    model = Quadratic()
    low = ChainState(position=np.array([2.0]), last_energy=4.0)
    high = ChainState(position=np.array([0.5]), last_energy=0.25)
    from mresgld.replica import ReplicaPairState

    pair = ReplicaPairState(chain_low=low, chain_high=high)
    # Low chain sits at much higher energy -> factor large; huge intensity
    # forces acceptance.
    cfg = default_cfg(intensity=1e12)
    new_pair, record = attempt_swap(
        pair, cfg, 0.1, model, model, np.random.default_rng(0), step=7
    )
    assert record.swapped
    assert new_pair.chain_low.position[0] == 0.5
    assert new_pair.chain_high.position[0] == 2.0
    # Cached energies follow the exchanged positions.
    assert new_pair.chain_low.last_energy == pytest.approx(0.25)
    assert new_pair.chain_high.last_energy == pytest.approx(4.0)
    assert new_pair.swap_count == 1 and new_pair.attempt_count == 1


def test_swap_probability_zero_never_swaps():
    model = Quadratic()
    from mresgld.replica import ReplicaPairState

    # Low chain already at the lower energy: factor ~ exp(negative), and a
    # tiny intensity drives the probability to ~0.
    pair = ReplicaPairState(
        chain_low=ChainState(position=np.array([0.1]), last_energy=0.01),
        chain_high=ChainState(position=np.array([3.0]), last_energy=9.0),
    )
    cfg = default_cfg(intensity=1e-12)
    new_pair, record = attempt_swap(
        pair, cfg, 0.1, model, model, np.random.default_rng(0)
    )
    assert not record.swapped
    assert new_pair.chain_low.position[0] == 0.1


def test_attempt_count_matches_interval():
    model = Quadratic()
    cfg = default_cfg()
    res = run_replica_pair(
        np.array([1.0]),
        np.array([-1.0]),
        model,
        model,
        cfg,
        ChainConfig(temperature=1.0, step_size=0.01),
        ChainConfig(temperature=10.0, step_size=0.01),
        n_steps=100,
        swap_interval=7,
        rng=np.random.default_rng(0),
    )
    assert res.final.attempt_count == 100 // 7
    assert len(res.swap_log) == 100 // 7
    assert res.final.swap_count <= res.final.attempt_count


def test_replica_pair_deterministic():
    model = Quadratic()
    cfg = default_cfg()
    kwargs = dict(
        n_steps=200,
        swap_interval=5,
    )
    runs = []
    for _ in range(2):
        res = run_replica_pair(
            np.array([1.0]),
            np.array([-1.0]),
            model,
            model,
            cfg,
            ChainConfig(temperature=1.0, step_size=0.01),
            ChainConfig(temperature=10.0, step_size=0.01),
            rng=np.random.default_rng(11),
            **kwargs,
        )
        runs.append([s.position[0] for s in res.trajectory_low])
    assert runs[0] == runs[1]


def test_double_well_pair_matches_target_density():
    # Low chain with swaps should reproduce exp(-U/tau) on the double well
    # within a coarse total-variation tolerance.
    from mresgld.experiments import DoubleWellEnergy

    model = DoubleWellEnergy()
    tau = 0.5
    cfg = SwapConfig(tau_low=tau, tau_high=2.0, intensity=1.0)
    res = run_replica_pair(
        np.array([-1.0]),
        np.array([1.0]),
        model,
        model,
        cfg,
        ChainConfig(temperature=tau, step_size=0.01),
        ChainConfig(temperature=2.0, step_size=0.01),
        n_steps=60_000,
        swap_interval=5,
        rng=np.random.default_rng(123),
        thinning=5,
    )
    xs = np.array([s.position[0] for s in res.trajectory_low])
    xs = xs[len(xs) // 4 :]
    edges = np.linspace(-2.5, 2.5, 41)
    hist, _ = np.histogram(xs, bins=edges, density=False)
    empirical = hist / hist.sum()
    centers = 0.5 * (edges[:-1] + edges[1:])
    target = np.exp(-((centers**2 - 1.0) ** 2) / tau)
    target /= target.sum()
    tv = 0.5 * np.abs(empirical - target).sum()
    assert tv < 0.1


def test_write_swap_log_format(tmp_path):
    from mresgld.replica import SwapRecord

    path = tmp_path / "swaplog.csv"
    records = [
        SwapRecord(
            step=10,
            s_hat=1.23456789123,
            u1_low=1.0,
            u1_high=2.0,
            u2_low=3.0,
            u2_high=4.0,
            swapped=True,
        )
    ]
    write_swap_log(records, str(path))
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["step", "s_hat", "u1_low", "u1_high", "u2_low", "u2_high", "swapped"]
    assert rows[1][1] == "1.23456789"  # 9 significant digits
    assert rows[1][-1] == "1"
