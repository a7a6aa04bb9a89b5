"""Posterior energy models for the pollution-source inversion.

The unknown is the source location k in [0,1]^2 under a flat prior; the
likelihood compares sensor readings of the FEM forward solve against the
observations y:

    U(k) = ||y - observe(F(k))||^2 / obs_sigma^2.

Two fidelities share the parameter domain: a fine solver (dx = 1/50) for
the low temperature chain and a coarse one (dx = 1/25) for the high
temperature chain.  Synthetic observations come from the closed-form
solution so neither fidelity is privileged.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np

from mresgld.fem import (
    SensorSet,
    SourceParams,
    get_solver,
    snap_to_mesh,
)
from mresgld.sampler import EnergyModel

OUT_OF_BOX_ENERGY = 1e30  # sentinel for positions outside the prior box

FINE_DX = 1.0 / 50.0
COARSE_DX = 1.0 / 25.0


@dataclass
class InverseProblem:
    """Sensors, observations and discretization templates for both fidelities."""

    sensors: SensorSet
    observations: np.ndarray
    obs_sigma: float = 0.1
    source_h: float = 0.1
    source_M: float = 1.0
    fine_dx: float = FINE_DX
    coarse_dx: float = COARSE_DX
    dt: float = 0.0005
    t_final: float = 0.03

    def __post_init__(self) -> None:
        self.observations = np.asarray(self.observations, dtype=float)
        n_sensors = len(np.atleast_2d(self.sensors.locations))
        if len(self.observations) != n_sensors:
            raise ValueError(
                f"{len(self.observations)} observations for {n_sensors} sensors"
            )
        if self.obs_sigma <= 0:
            raise ValueError("obs_sigma must be positive")
        # Snap sensors to fine-mesh nodes once, up front.
        fine = get_solver(self.fine_dx, self.dt, self.t_final)
        self.sensors, self.sensor_snap_distance = snap_to_mesh(self.sensors, fine.mesh)

    def source_at(self, k: np.ndarray) -> SourceParams:
        return SourceParams(
            x0=(float(k[0]), float(k[1])), h=self.source_h, M=self.source_M
        )


class PosteriorEnergy(EnergyModel):
    """EnergyModel over source locations at one solver fidelity.

    ``assigned_sigma`` is the estimator standard deviation this model
    reports to the swap rule (sigma1 for fine, sigma2 for coarse).
    Gradients use central finite differences, batched through the cached
    solver factorization (4 forward solves per call).
    """

    def __init__(
        self,
        problem: InverseProblem,
        fidelity: Literal["fine", "coarse"] = "fine",
        assigned_sigma: float = 0.0,
        fd_step: float = 1e-3,
    ):
        if fidelity not in ("fine", "coarse"):
            raise ValueError(f"unknown fidelity {fidelity!r}")
        if assigned_sigma < 0:
            raise ValueError("assigned_sigma must be nonnegative")
        self.problem = problem
        self.fidelity = fidelity
        self.assigned_sigma = assigned_sigma
        self.fd_step = fd_step
        dx = problem.fine_dx if fidelity == "fine" else problem.coarse_dx
        self.solver = get_solver(dx, problem.dt, problem.t_final)
        self.solve_count = 0  # forward solves, for cost accounting
        self.solve_time = 0.0  # seconds spent inside forward solves
        self.one_sided_count = 0  # near-boundary gradients

    # -- EnergyModel interface -------------------------------------------

    def sigma(self) -> float:
        return self.assigned_sigma

    def in_domain(self, position: np.ndarray) -> bool:
        return bool(np.all(position >= 0.0) and np.all(position <= 1.0))

    def energy(self, position: np.ndarray) -> float:
        if not self.in_domain(position):
            return OUT_OF_BOX_ENERGY
        return float(self._energy_batch(np.atleast_2d(position))[0])

    def gradient(self, position: np.ndarray) -> np.ndarray:
        """Central finite differences; one-sided next to the prior boundary."""
        k = np.asarray(position, dtype=float)
        h = self.fd_step
        points = []
        plans = []  # (coord, lo_index, hi_index, denom) resolved after batching
        for i in range(2):
            lo = k.copy()
            hi = k.copy()
            one_sided = False
            if k[i] - h < 0.0:
                lo[i] = k[i]
                hi[i] = k[i] + h
                one_sided = True
            elif k[i] + h > 1.0:
                lo[i] = k[i] - h
                hi[i] = k[i]
                one_sided = True
            else:
                lo[i] = k[i] - h
                hi[i] = k[i] + h
            if one_sided:
                self.one_sided_count += 1
            points.extend([lo, hi])
            plans.append(hi[i] - lo[i])
        energies = self._energy_batch(np.array(points))
        grad = np.array(
            [
                (energies[1] - energies[0]) / plans[0],
                (energies[3] - energies[2]) / plans[1],
            ]
        )
        return grad

    # -- internals ---------------------------------------------------------

    def _energy_batch(self, ks: np.ndarray) -> np.ndarray:
        prob = self.problem
        sources = [prob.source_at(k) for k in ks]
        t0 = time.perf_counter()
        fields = self.solver.solve_batch(sources)
        self.solve_time += time.perf_counter() - t0
        self.solve_count += len(sources)
        sensor_vals = self._observe_batch(fields)
        resid = sensor_vals - prob.observations[None, :]
        return np.sum(resid**2, axis=1) / prob.obs_sigma**2

    def _observe_batch(self, fields: np.ndarray) -> np.ndarray:
        """Sensor readings for each column of ``fields``, shape (b, n_sensors)."""
        mesh = self.solver.mesh
        locs = np.atleast_2d(self.problem.sensors.locations)
        rows = []
        for loc in locs:
            node = mesh.nearest_node(loc)
            if np.allclose(mesh.coords[node], loc, atol=1e-12):
                rows.append(fields[node, :])
            else:
                tri, bary = mesh.containing_triangle(loc)
                verts = mesh.triangles[tri]
                rows.append(bary @ fields[verts, :])
        return np.array(rows).T


def calibrate_coarse_sigma(
    problem: InverseProblem,
    n_sources: int = 50,
    rng: Optional[np.random.Generator] = None,
) -> float:
    """Empirical RMS of the coarse-minus-fine energy gap near the solution set.

    Used as the coarse model's assigned sigma; the fine model gets 0.
    Calibration sources sit on jittered circles of the observation radius
    around each sensor, because that is where the chains spend their time:
    calibrating over the whole prior box instead yields a sigma several
    times larger (the gap grows with the energy itself), and the resulting
    variance-correction term suppresses every swap.
    """
    rng = rng or np.random.default_rng(0)
    fine = PosteriorEnergy(problem, "fine")
    coarse = PosteriorEnergy(problem, "coarse")
    centers = np.atleast_2d(problem.sensors.locations)
    angles = rng.uniform(0.0, 2.0 * np.pi, size=n_sources)
    radii = SENSOR_RADIUS + rng.normal(0.0, 0.01, size=n_sources)
    picks = rng.integers(0, len(centers), size=n_sources)
    ks = centers[picks] + radii[:, None] * np.column_stack(
        [np.cos(angles), np.sin(angles)]
    )
    ks = np.clip(ks, 0.0, 1.0)
    gaps = fine._energy_batch(ks) - coarse._energy_batch(ks)
    return float(np.sqrt(np.mean(gaps**2)))


# -- experiment configurations ------------------------------------------------

TWO_MODE_SENSORS = np.array([[0.5, 0.3], [0.5, 0.6]])
SENSOR_RADIUS = 0.2


def _closed_form_reading(h: float = 0.1, M: float = 1.0, t: float = 0.03) -> float:
    """Observation value when the source sits at distance 0.2 from a sensor."""
    alpha = 2.0 * h**2
    beta = M / (2.0 * math.pi * h**2)
    return beta * math.exp(-SENSOR_RADIUS**2 / alpha) * math.exp(-t)


def make_two_mode_problem(obs_sigma: float = 0.1) -> InverseProblem:
    """Two sensors on x = 0.5; the posterior has exactly two modes.

    Both sensors read the closed-form value for a source 0.2 away, so the
    solution set is the intersection of two radius-0.2 circles:
    (0.5 +- sqrt(0.0175), 0.45).
    """
    y = _closed_form_reading()
    return InverseProblem(
        sensors=SensorSet(locations=TWO_MODE_SENSORS.copy(), observation_time=0.03),
        observations=np.array([y, y]),
        obs_sigma=obs_sigma,
    )


def two_mode_centers() -> np.ndarray:
    """Analytic mode locations of the two-mode posterior."""
    off = math.sqrt(SENSOR_RADIUS**2 - 0.15**2)
    return np.array([[0.5 - off, 0.45], [0.5 + off, 0.45]])


def make_infinite_mode_problem(obs_sigma: float = 0.1) -> InverseProblem:
    """One sensor at (0.5, 0.3); the solution set is a circle of radius 0.2."""
    y = _closed_form_reading()
    return InverseProblem(
        sensors=SensorSet(locations=np.array([[0.5, 0.3]]), observation_time=0.03),
        observations=np.array([y]),
        obs_sigma=obs_sigma,
    )


INFINITE_MODE_CENTER = np.array([0.5, 0.3])


# -- mode diagnostics ----------------------------------------------------------


@dataclass
class ModeDiagnostics:
    """Post-burn-in samples plus the expected mode geometry."""

    samples: np.ndarray  # (n, 2) points, already past burn-in
    mode_centers: Optional[np.ndarray] = None  # (m, 2) for discrete modes
    circle_center: Optional[np.ndarray] = None  # for the circle case
    circle_radius: float = SENSOR_RADIUS
    capture_radius: float = 0.05
    n_angular_bins: int = 36


def mode_coverage(diag: ModeDiagnostics) -> dict:
    """Quantify which modes the samples reached.

    For discrete modes: fraction of samples within ``capture_radius`` of
    each center.  For the circle: fraction of angular bins containing at
    least one sample within ``capture_radius`` of the circle.
    """
    samples = np.atleast_2d(diag.samples)
    if samples.shape[0] == 0:
        raise ValueError("empty sample set")
    report: dict = {"n_samples": int(samples.shape[0])}
    if diag.mode_centers is not None:
        fractions = []
        for center in np.atleast_2d(diag.mode_centers):
            dist = np.linalg.norm(samples - center, axis=1)
            fractions.append(float(np.mean(dist <= diag.capture_radius)))
        report["mode_fractions"] = fractions
    if diag.circle_center is not None:
        rel = samples - diag.circle_center
        radial = np.abs(np.linalg.norm(rel, axis=1) - diag.circle_radius)
        on_circle = radial <= diag.capture_radius
        angles = np.arctan2(rel[on_circle, 1], rel[on_circle, 0])
        bins = np.floor(
            (angles + np.pi) / (2.0 * np.pi) * diag.n_angular_bins
        ).astype(int)
        bins = np.clip(bins, 0, diag.n_angular_bins - 1)
        covered = np.unique(bins)
        report["angular_coverage"] = float(len(covered) / diag.n_angular_bins)
        report["on_circle_fraction"] = float(np.mean(on_circle))
    return report
