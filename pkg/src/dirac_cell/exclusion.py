"""Backward-Euler stepping of diffusion on the punctured square with a
secretion/uptake flux condition on the hole boundary and no-flux outer walls.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .errors import ParameterError
from .fem import (assemble_boundary_load, assemble_boundary_mass, assemble_mass,
                  assemble_stiffness, l2_norm, h1_seminorm, solve_spd, total_mass)
from .geometry import BoundaryTag, CellSpec, Mesh, build_punctured_square_mesh

STEADY_RATE_TOL = 1e-8  # ||u_next - u|| / dt below this (relative) flags steady state


@dataclass(frozen=True)
class ExclusionConfig:
    diffusion: float
    cell: CellSpec
    dt: float
    t_end: float
    side: float = 10.0
    h: float = 0.2495
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
        if not 0 < self.rel_tol < 1:
            raise ParameterError(f"solver tolerance must lie in (0, 1), got {self.rel_tol}")


@dataclass
class ExclusionOperators:
    mesh: Mesh
    mass: sparse.csr_matrix
    stiffness: sparse.csr_matrix
    boundary_mass: sparse.csr_matrix
    boundary_load: np.ndarray
    system: sparse.csr_matrix     # mass + dt * (D * stiffness + a * boundary_mass)


def build_exclusion_operators(config: ExclusionConfig, mesh: Mesh | None = None) -> ExclusionOperators:
    if mesh is None:
        mesh = build_punctured_square_mesh(config.side, config.h, config.cell)
    M = assemble_mass(mesh)
    K = assemble_stiffness(mesh)
    Mb = assemble_boundary_mass(mesh, BoundaryTag.CELL)
    b = assemble_boundary_load(mesh, BoundaryTag.CELL, config.cell.phi)
    system = (M + config.dt * (config.diffusion * K + config.cell.uptake * Mb)).tocsr()
    return ExclusionOperators(mesh=mesh, mass=M, stiffness=K, boundary_mass=Mb,
                              boundary_load=b, system=system)


def initial_field(u0, mesh: Mesh) -> np.ndarray:
    if u0 is None:
        return np.zeros(mesh.num_vertices)
    if np.isscalar(u0):
        return np.full(mesh.num_vertices, float(u0))
    u0 = np.asarray(u0, dtype=float)
    if u0.shape != (mesh.num_vertices,):
        raise ParameterError(
            f"initial field has {u0.shape} entries, mesh has {mesh.num_vertices} vertices")
    return u0.copy()


def exclusion_step(u: np.ndarray, ops: ExclusionOperators, config: ExclusionConfig) -> np.ndarray:
    """One implicit Euler step of the boundary-exchange model."""
    rhs = ops.mass @ u + config.dt * ops.boundary_load
    return solve_spd(ops.system, rhs, rel_tol=config.rel_tol, x0=u)


@dataclass(frozen=True)
class ExclusionRecord:
    t: float
    l2: float
    h1_semi: float
    mass: float
    boundary_flux: float   # discrete exchange rate through the cell boundary
    steady: bool


@dataclass
class ExclusionResult:
    records: list[ExclusionRecord]
    snapshots: dict[float, np.ndarray]
    final: np.ndarray
    mesh: Mesh
    operators: ExclusionOperators
    steady_time: float | None = None

    @property
    def times(self) -> np.ndarray:
        return np.array([r.t for r in self.records])


def _snapshot_steps(snapshot_times, dt, n_steps) -> dict[int, float]:
    plan: dict[int, float] = {}
    for ts in snapshot_times:
        step = min(max(int(round(ts / dt)), 0), n_steps)
        plan.setdefault(step, float(ts))
    return plan


def run_exclusion(config: ExclusionConfig, mesh: Mesh | None = None,
                  operators: ExclusionOperators | None = None) -> ExclusionResult:
    """Run to t_end (or until steady, if enabled), recording one row per step.

    Rows carry the time, the L2 norm and gradient seminorm of the field, its
    total mass, and the discrete boundary exchange rate evaluated on the new
    iterate.
    """
    ops = operators if operators is not None else build_exclusion_operators(config, mesh)
    mesh = ops.mesh
    u = initial_field(config.u0, mesh)
    n_steps = int(math.floor(config.t_end / config.dt + 1e-9))
    plan = _snapshot_steps(config.snapshot_times, config.dt, n_steps)

    flux_of = lambda v: float(ops.boundary_load.sum()
                              - config.cell.uptake * (ops.boundary_mass @ v).sum())
    records = [ExclusionRecord(t=0.0, l2=l2_norm(u, ops.mass),
                               h1_semi=h1_seminorm(u, ops.stiffness),
                               mass=total_mass(u, ops.mass),
                               boundary_flux=flux_of(u), steady=False)]
    snapshots: dict[float, np.ndarray] = {}
    if 0 in plan:
        snapshots[plan[0]] = u.copy()

    steady_time = None
    for n in range(1, n_steps + 1):
        u_next = exclusion_step(u, ops, config)
        t = n * config.dt
        rate = l2_norm(u_next - u, ops.mass) / config.dt
        steady = rate < STEADY_RATE_TOL * max(1.0, l2_norm(u, ops.mass))
        records.append(ExclusionRecord(
            t=t, l2=l2_norm(u_next, ops.mass),
            h1_semi=h1_seminorm(u_next, ops.stiffness),
            mass=total_mass(u_next, ops.mass),
            boundary_flux=flux_of(u_next), steady=steady))
        u = u_next
        if n in plan:
            snapshots[plan[n]] = u.copy()
        if steady and steady_time is None:
            steady_time = t
            if config.stop_when_steady:
                break
    return ExclusionResult(records=records, snapshots=snapshots, final=u,
                           mesh=mesh, operators=ops, steady_time=steady_time)
