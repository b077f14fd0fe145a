"""Backward-Euler stepping of diffusion on the full square with the cell
reduced to a regularized point source whose amplitude is the exchange rate
integrated over the (virtual) cell circle.

The amplitude couples the source to the trace of the solution; the implicit
coupling adds a rank-one term to the system matrix, which is solved with a
Sherman-Morrison split (one reusable solve for the source column, one per
step for the right side).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .errors import ParameterError, SolverError
from .fem import (assemble_gaussian_load, assemble_mass, assemble_stiffness,
                  l2_norm, solve_spd, total_mass)
from .geometry import CellSpec, Mesh, build_square_mesh, locate_point
from .quadrature import TildeRestriction

IMPLICIT = "implicit"
EXPLICIT_LAG = "lag"
_COUPLINGS = (IMPLICIT, EXPLICIT_LAG)

STEADY_RATE_TOL = 1e-8


@dataclass
class VirtualBoundary:
    """Trapezoid quadrature on the circle where the cell boundary used to be."""

    center: tuple[float, float]
    radius: float
    points: np.ndarray    # (nq, 2)
    weights: np.ndarray   # (nq,), uniform, total 2*pi*R
    cells: np.ndarray     # (nq,) containing cell in the full mesh
    bary: np.ndarray      # (nq, 3)
    weight_vector: np.ndarray  # (n,) nodal functional: weight_vector @ u = trace integral


def build_virtual_boundary(mesh: Mesh, cell: CellSpec, n_q: int = 64) -> VirtualBoundary:
    if n_q < 16:
        raise ParameterError(f"need at least 16 quadrature points on the circle, got {n_q}")
    cx, cy = cell.center
    angles = 2.0 * math.pi * np.arange(n_q) / n_q
    pts = np.column_stack([cx + cell.radius * np.cos(angles),
                           cy + cell.radius * np.sin(angles)])
    weights = np.full(n_q, cell.circumference / n_q)
    cells = np.empty(n_q, dtype=np.int64)
    bary = np.empty((n_q, 3))
    start = None
    for i, p in enumerate(pts):
        hit = locate_point(mesh, p, start_cell=start)
        if hit is None:
            raise ParameterError(f"virtual boundary point {p} lies outside the mesh")
        cells[i], bary[i] = hit
        start = int(cells[i])
    w_vec = np.zeros(mesh.num_vertices)
    np.add.at(w_vec, mesh.cells[cells].ravel(), (weights[:, None] * bary).ravel())
    return VirtualBoundary(center=(cx, cy), radius=cell.radius, points=pts,
                           weights=weights, cells=cells, bary=bary, weight_vector=w_vec)


def trace_integral(field: np.ndarray, vb: VirtualBoundary) -> float:
    """Line integral of the interpolated field over the virtual circle."""
    return float(vb.weight_vector @ field)


def psi(field: np.ndarray, cell: CellSpec, vb: VirtualBoundary) -> float:
    """Net exchange rate: secretion at rate phi minus uptake of the trace."""
    return cell.phi * cell.circumference - cell.uptake * trace_integral(field, vb)


@dataclass(frozen=True)
class PointConfig:
    diffusion: float
    cell: CellSpec
    dt: float
    t_end: float
    side: float = 10.0
    h: float = 0.2495
    sigma: float = 0.02         # Gaussian standard deviation replacing the point mass
    n_q: int = 64
    coupling: str = IMPLICIT
    u0: float | np.ndarray | None = None
    rel_tol: float = 1e-10
    stop_when_steady: bool = True
    snapshot_times: tuple[float, ...] = ()

    def __post_init__(self):
        if not self.diffusion > 0:
            raise ParameterError(f"diffusion coefficient must be positive, got {self.diffusion}")
        if not self.dt > 0:
            raise ParameterError(f"time step must be positive, got {self.dt}")
        if self.t_end < self.dt:
            raise ParameterError(f"final time {self.t_end} must be at least one step {self.dt}")
        if not self.sigma > 0:
            raise ParameterError(f"Gaussian width must be positive, got {self.sigma}")
        if self.n_q < 16:
            raise ParameterError(f"need at least 16 circle quadrature points, got {self.n_q}")
        if self.coupling not in _COUPLINGS:
            raise ParameterError(f"coupling must be one of {_COUPLINGS}, got {self.coupling!r}")
        if not 0 < self.rel_tol < 1:
            raise ParameterError(f"solver tolerance must lie in (0, 1), got {self.rel_tol}")


@dataclass
class PointOperators:
    mesh: Mesh
    mass: sparse.csr_matrix
    stiffness: sparse.csr_matrix
    system: sparse.csr_matrix      # mass + dt * D * stiffness
    source: np.ndarray             # unit-total Gaussian load
    vb: VirtualBoundary
    source_solve: np.ndarray       # system^-1 @ source, reused by Sherman-Morrison


def build_point_operators(config: PointConfig, mesh: Mesh | None = None) -> PointOperators:
    if mesh is None:
        mesh = build_square_mesh(config.side, config.h)
    M = assemble_mass(mesh)
    K = assemble_stiffness(mesh)
    A = (M + config.dt * config.diffusion * K).tocsr()
    g = assemble_gaussian_load(mesh, config.cell.center, config.sigma)
    vb = build_virtual_boundary(mesh, config.cell, config.n_q)
    z = solve_spd(A, g, rel_tol=min(config.rel_tol, 1e-12))
    return PointOperators(mesh=mesh, mass=M, stiffness=K, system=A, source=g,
                          vb=vb, source_solve=z)


def point_step(u: np.ndarray, ops: PointOperators, config: PointConfig) -> np.ndarray:
    """One implicit Euler step; the source amplitude is taken implicitly
    (rank-one correction) or lagged one step, per ``config.coupling``."""
    cell = config.cell
    if config.coupling == EXPLICIT_LAG:
        rhs = ops.mass @ u + config.dt * psi(u, cell, ops.vb) * ops.source
        return solve_spd(ops.system, rhs, rel_tol=config.rel_tol, x0=u)

    rhs = ops.mass @ u + config.dt * cell.phi * cell.circumference * ops.source
    y = solve_spd(ops.system, rhs, rel_tol=config.rel_tol, x0=u)
    c = config.dt * cell.uptake
    w = ops.vb.weight_vector
    denom = 1.0 + c * float(w @ ops.source_solve)
    if abs(denom) < 1e-12:
        raise SolverError(f"rank-one correction is singular (denominator {denom:.3e})")
    return y - (c * float(w @ y) / denom) * ops.source_solve


@dataclass(frozen=True)
class PointRecord:
    t: float
    l2: float           # over the full square
    l2_tilde: float     # over the shared punctured domain (nan when not computed)
    mass: float
    psi: float
    steady: bool


@dataclass
class PointResult:
    records: list[PointRecord]
    snapshots: dict[float, np.ndarray]
    final: np.ndarray
    mesh: Mesh
    operators: PointOperators
    steady_time: float | None = None

    @property
    def times(self) -> np.ndarray:
        return np.array([r.t for r in self.records])


def run_point(config: PointConfig, mesh: Mesh | None = None,
              operators: PointOperators | None = None,
              restriction: TildeRestriction | None = None) -> PointResult:
    """Run to t_end (or until steady, if enabled), recording one row per step.

    When a shared-domain restriction is supplied, each row also carries the
    L2 norm over the punctured domain; otherwise that column is NaN.
    """
    ops = operators if operators is not None else build_point_operators(config, mesh)
    mesh = ops.mesh
    from .exclusion import initial_field, _snapshot_steps  # shared plumbing
    u = initial_field(config.u0, mesh)
    n_steps = int(math.floor(config.t_end / config.dt + 1e-9))
    plan = _snapshot_steps(config.snapshot_times, config.dt, n_steps)

    def l2_tilde(v):
        return restriction.l2_of_full(v) if restriction is not None else math.nan

    records = [PointRecord(t=0.0, l2=l2_norm(u, ops.mass), l2_tilde=l2_tilde(u),
                           mass=total_mass(u, ops.mass),
                           psi=psi(u, config.cell, ops.vb), steady=False)]
    snapshots: dict[float, np.ndarray] = {}
    if 0 in plan:
        snapshots[plan[0]] = u.copy()

    steady_time = None
    for n in range(1, n_steps + 1):
        u_next = point_step(u, ops, config)
        t = n * config.dt
        rate = l2_norm(u_next - u, ops.mass) / config.dt
        steady = rate < STEADY_RATE_TOL * max(1.0, l2_norm(u, ops.mass))
        records.append(PointRecord(
            t=t, l2=l2_norm(u_next, ops.mass), l2_tilde=l2_tilde(u_next),
            mass=total_mass(u_next, ops.mass),
            psi=psi(u_next, config.cell, ops.vb), steady=steady))
        u = u_next
        if n in plan:
            snapshots[plan[n]] = u.copy()
        if steady and steady_time is None:
            steady_time = t
            if config.stop_when_steady:
                break
    return PointResult(records=records, snapshots=snapshots, final=u,
                       mesh=mesh, operators=ops, steady_time=steady_time)
