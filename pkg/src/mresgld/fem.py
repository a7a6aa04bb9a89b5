"""P1 finite-element solver for the 2-D parabolic contamination problem.

The PDE is u_t = div(grad u) + f on [0,1]^2 with Dirichlet boundary data,
discretized with linear triangles on a uniform right-triangle mesh and
backward Euler in time (consistent mass matrix).

All data (initial condition, boundary values, source) come from the
manufactured solution family

    u(x, t) = beta * exp(-||x - x0||^2 / alpha) * exp(-t)

with alpha = 2 h^2 and beta = M / (2 pi h^2), which makes every forcing
term separable in time: g(x, t) = g(x, 0) * exp(-t).  The solver exploits
that separability to assemble each load vector once per source.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla


class SolverError(RuntimeError):
    """Raised when the linear solve or mesh construction fails."""


@dataclass(frozen=True)
class SourceParams:
    """Gaussian pollution source: location x0, radius h, strength M."""

    x0: tuple[float, float]
    h: float = 0.1
    M: float = 1.0

    def __post_init__(self) -> None:
        if self.h <= 0 or self.M <= 0:
            raise ValueError("h and M must be positive")
        if not (0.0 <= self.x0[0] <= 1.0 and 0.0 <= self.x0[1] <= 1.0):
            raise ValueError(f"x0 must lie in [0,1]^2, got {self.x0}")

    @property
    def alpha(self) -> float:
        return 2.0 * self.h**2

    @property
    def beta(self) -> float:
        return self.M / (2.0 * math.pi * self.h**2)


@dataclass(frozen=True)
class ParabolicProblem:
    """One forward-solve configuration: source, mesh spacing, time grid."""

    source: SourceParams
    dx: float = 1.0 / 50.0
    dt: float = 0.0005
    t_final: float = 0.03

    def __post_init__(self) -> None:
        n = 1.0 / self.dx
        if abs(n - round(n)) > 1e-9:
            raise ValueError(f"1/dx must be an integer, got dx={self.dx}")
        m = self.t_final / self.dt
        if abs(m - round(m)) > 1e-9:
            raise ValueError(
                f"t_final/dt must be an integer, got dt={self.dt}, t_final={self.t_final}"
            )


@dataclass
class SensorSet:
    """Observation locations, all read at one terminal time."""

    locations: np.ndarray  # (n_sensors, 2)
    observation_time: float = 0.03


def exact_solution(p: SourceParams, x: np.ndarray, t: float) -> np.ndarray:
    """Closed-form field beta * exp(-||x - x0||^2 / alpha) * exp(-t).

    ``x`` may be a single point (2,) or an array of points (n, 2).
    """
    x = np.asarray(x, dtype=float)
    r2 = np.sum((x - np.asarray(p.x0)) ** 2, axis=-1)
    return p.beta * np.exp(-r2 / p.alpha) * math.exp(-t)


def manufactured_source(p: SourceParams, x: np.ndarray, t: float) -> np.ndarray:
    """Source term f = u_t - laplace(u) for the closed-form field.

    With r^2 = ||x - x0||^2 this evaluates to
    u * (4/alpha - 4 r^2 / alpha^2 - 1); cross-checked against a
    finite-difference Laplacian in the test suite.
    """
    x = np.asarray(x, dtype=float)
    r2 = np.sum((x - np.asarray(p.x0)) ** 2, axis=-1)
    u = p.beta * np.exp(-r2 / p.alpha) * math.exp(-t)
    a = p.alpha
    return u * (4.0 / a - 4.0 * r2 / a**2 - 1.0)


class RectMesh:
    """Uniform right-triangle mesh on the unit square with n x n cells."""

    def __init__(self, n: int):
        if n < 2:
            raise SolverError("mesh needs at least 2 cells per side")
        self.n = n
        self.dx = 1.0 / n
        xs = np.linspace(0.0, 1.0, n + 1)
        X, Y = np.meshgrid(xs, xs, indexing="xy")
        self.coords = np.column_stack([X.ravel(), Y.ravel()])
        self.n_nodes = (n + 1) ** 2

        # Node index (i, j) -> j * (n+1) + i with i along x.
        idx = np.arange(self.n_nodes).reshape(n + 1, n + 1)
        ll = idx[:-1, :-1].ravel()  # lower-left of each cell
        lr = idx[:-1, 1:].ravel()
        ul = idx[1:, :-1].ravel()
        ur = idx[1:, 1:].ravel()
        lower = np.column_stack([ll, lr, ul])
        upper = np.column_stack([lr, ur, ul])
        self.triangles = np.vstack([lower, upper])

        on_boundary = (
            (self.coords[:, 0] == 0.0)
            | (self.coords[:, 0] == 1.0)
            | (self.coords[:, 1] == 0.0)
            | (self.coords[:, 1] == 1.0)
        )
        self.boundary_mask = on_boundary
        self.boundary_idx = np.where(on_boundary)[0]
        self.interior_idx = np.where(~on_boundary)[0]

    def nearest_node(self, point: np.ndarray) -> int:
        d2 = np.sum((self.coords - np.asarray(point)) ** 2, axis=1)
        return int(np.argmin(d2))

    def containing_triangle(self, point: np.ndarray) -> tuple[int, np.ndarray]:
        """Triangle index and barycentric coordinates of ``point``."""
        x, y = float(point[0]), float(point[1])
        if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
            raise SolverError(f"point {point} outside the mesh")
        i = min(int(x * self.n), self.n - 1)
        j = min(int(y * self.n), self.n - 1)
        xi = x * self.n - i
        eta = y * self.n - j
        cell = j * self.n + i
        if xi + eta <= 1.0:
            tri = cell  # lower triangle
            bary = np.array([1.0 - xi - eta, xi, eta])
        else:
            tri = self.n * self.n + cell  # upper triangle
            bary = np.array([1.0 - eta, xi + eta - 1.0, 1.0 - xi])
        return tri, bary


@dataclass
class FieldSolution:
    """Nodal values at the terminal time on a given mesh."""

    values: np.ndarray
    mesh: RectMesh


def _assemble_matrices(mesh: RectMesh) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """Consistent mass and stiffness matrices for P1 triangles."""
    tris = mesh.triangles
    pts = mesh.coords
    p0, p1, p2 = pts[tris[:, 0]], pts[tris[:, 1]], pts[tris[:, 2]]
    # Edge vectors and (signed) twice-areas.
    d1 = p1 - p0
    d2 = p2 - p0
    det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    area = 0.5 * np.abs(det)

    # Gradients of the three barycentric basis functions.
    b = np.stack(
        [p1[:, 1] - p2[:, 1], p2[:, 1] - p0[:, 1], p0[:, 1] - p1[:, 1]], axis=1
    )
    c = np.stack(
        [p2[:, 0] - p1[:, 0], p0[:, 0] - p2[:, 0], p1[:, 0] - p0[:, 0]], axis=1
    )
    n_tri = tris.shape[0]
    Ke = np.empty((n_tri, 3, 3))
    for a_ in range(3):
        for b_ in range(3):
            Ke[:, a_, b_] = (b[:, a_] * b[:, b_] + c[:, a_] * c[:, b_]) / (4.0 * area)
    Me_ref = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0
    Me = area[:, None, None] * Me_ref[None, :, :]

    rows = np.repeat(tris, 3, axis=1).ravel()
    cols = np.tile(tris, (1, 3)).ravel()
    K = sp.coo_matrix(
        (Ke.ravel(), (rows, cols)), shape=(mesh.n_nodes, mesh.n_nodes)
    ).tocsr()
    M = sp.coo_matrix(
        (Me.ravel(), (rows, cols)), shape=(mesh.n_nodes, mesh.n_nodes)
    ).tocsr()
    return M, K


class ParabolicSolver:
    """Backward-Euler FEM solver with cached assembly and factorization.

    The system matrix A = M + dt K is factorized once (sparse LU) and
    reused for every time step and every source, so repeated likelihood
    evaluations only rebuild load vectors.  ``solve_batch`` advances
    several sources simultaneously through the shared factorization.
    """

    def __init__(self, dx: float, dt: float, t_final: float):
        n = round(1.0 / dx)
        if abs(n * dx - 1.0) > 1e-9:
            raise SolverError(f"1/dx must be an integer, got dx={dx}")
        n_time = round(t_final / dt)
        if abs(n_time * dt - t_final) > 1e-9:
            raise SolverError("t_final/dt must be an integer")
        self.dx = dx
        self.dt = dt
        self.t_final = t_final
        self.n_time = n_time
        self.mesh = RectMesh(n)
        self.M, self.K = _assemble_matrices(self.mesh)
        A = (self.M + dt * self.K).tocsc()
        I = self.mesh.interior_idx
        B = self.mesh.boundary_idx
        self.A_II = A[np.ix_(I, I)]
        self.A_IB = A[np.ix_(I, B)].tocsr()
        try:
            self._lu = spla.splu(self.A_II.tocsc())
        except RuntimeError as err:  # pragma: no cover - singular system
            raise SolverError(
                f"factorization failed for dx={dx}, dt={dt}: {err}"
            ) from err

        # Quadrature at edge midpoints (exact for quadratics) for the load.
        tris = self.mesh.triangles
        pts = self.mesh.coords
        p0, p1, p2 = pts[tris[:, 0]], pts[tris[:, 1]], pts[tris[:, 2]]
        self._mid01 = 0.5 * (p0 + p1)
        self._mid12 = 0.5 * (p1 + p2)
        self._mid20 = 0.5 * (p2 + p0)
        self._tri_area = 0.5 * self.dx * self.dx

    def _load_vector(self, source: SourceParams) -> np.ndarray:
        """Load vector for f(., 0); time scaling is exp(-t)."""
        tris = self.mesh.triangles
        f01 = manufactured_source(source, self._mid01, 0.0)
        f12 = manufactured_source(source, self._mid12, 0.0)
        f20 = manufactured_source(source, self._mid20, 0.0)
        w = self._tri_area / 3.0
        # Basis function a is 1/2 at the two midpoints of its adjacent edges.
        contrib = np.stack(
            [
                0.5 * (f01 + f20),
                0.5 * (f01 + f12),
                0.5 * (f12 + f20),
            ],
            axis=1,
        )
        F = np.zeros(self.mesh.n_nodes)
        np.add.at(F, tris.ravel(), (w * contrib).ravel())
        return F

    def solve_batch(self, sources: list[SourceParams]) -> np.ndarray:
        """Terminal-time nodal fields for several sources, shape (n_nodes, b)."""
        if not sources:
            raise SolverError("empty source batch")
        I = self.mesh.interior_idx
        B = self.mesh.boundary_idx
        coords = self.mesh.coords

        u = np.column_stack([exact_solution(s, coords, 0.0) for s in sources])
        F0 = np.column_stack([self._load_vector(s) for s in sources])
        g0 = u[B, :]  # boundary data at t=0; scales with exp(-t)

        for step in range(1, self.n_time + 1):
            t_new = step * self.dt
            decay = math.exp(-t_new)
            rhs = self.M @ u + self.dt * decay * F0
            g_new = g0 * decay
            rhs_I = rhs[I, :] - self.A_IB @ g_new
            u_I = self._lu.solve(rhs_I)
            if not np.all(np.isfinite(u_I)):
                raise SolverError(
                    f"linear solve produced non-finite values (dx={self.dx}, dt={self.dt})"
                )
            u = np.empty_like(u)
            u[I, :] = u_I
            u[B, :] = g_new
        return u

    def solve(self, source: SourceParams) -> FieldSolution:
        values = self.solve_batch([source])[:, 0]
        return FieldSolution(values=values, mesh=self.mesh)


@lru_cache(maxsize=16)
def get_solver(dx: float, dt: float, t_final: float) -> ParabolicSolver:
    """Shared solver instances keyed by discretization parameters."""
    return ParabolicSolver(dx, dt, t_final)


def solve_forward(prob: ParabolicProblem) -> FieldSolution:
    """Solve one forward problem (cached assembly per discretization)."""
    solver = get_solver(prob.dx, prob.dt, prob.t_final)
    return solver.solve(prob.source)


def snap_to_mesh(sensors: SensorSet, mesh: RectMesh) -> tuple[SensorSet, float]:
    """Snap sensor locations to the nearest mesh nodes.

    Returns the snapped set and the largest snap distance so configs can
    report how far sensors moved.
    """
    snapped = []
    max_dist = 0.0
    for loc in np.atleast_2d(sensors.locations):
        node = mesh.nearest_node(loc)
        snapped.append(mesh.coords[node])
        max_dist = max(max_dist, float(np.linalg.norm(mesh.coords[node] - loc)))
    return (
        SensorSet(
            locations=np.array(snapped), observation_time=sensors.observation_time
        ),
        max_dist,
    )


def observe(sol: FieldSolution, sensors: SensorSet) -> np.ndarray:
    """Read the solution at the sensor locations.

    Locations coinciding with mesh nodes give the nodal value directly;
    otherwise the value is linearly interpolated within the containing
    triangle (the coarse-mesh case).
    """
    mesh = sol.mesh
    out = np.empty(len(np.atleast_2d(sensors.locations)))
    for i, loc in enumerate(np.atleast_2d(sensors.locations)):
        node = mesh.nearest_node(loc)
        if np.allclose(mesh.coords[node], loc, atol=1e-12):
            out[i] = sol.values[node]
        else:
            tri, bary = mesh.containing_triangle(loc)
            verts = mesh.triangles[tri]
            out[i] = float(bary @ sol.values[verts])
    return out


def dump_field_csv(sol: FieldSolution, path: str) -> None:
    """Write (x, y, u) nodal triples at the terminal time for plotting."""
    data = np.column_stack([sol.mesh.coords, sol.values])
    with open(path, "w") as fh:
        fh.write("x,y,u\n")
        for row in data:
            fh.write(f"{row[0]:.9g},{row[1]:.9g},{row[2]:.9g}\n")
