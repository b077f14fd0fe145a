"""Side-by-side run of the two models on a synchronized time grid, with the
point-source field restricted to the shared punctured domain for norm and
difference evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .exclusion import (ExclusionConfig, build_exclusion_operators, exclusion_step,
                        initial_field)
from .fem import l2_norm
from .geometry import CellSpec, Mesh, build_punctured_square_mesh, build_square_mesh
from .point_source import (IMPLICIT, PointConfig, build_point_operators, point_step, psi)
from .quadrature import TildeRestriction, build_tilde_restriction

STEADY_RATE_TOL = 1e-8


def restrict_to_tilde(field_full: np.ndarray, restriction: TildeRestriction) -> np.ndarray:
    """Values of a full-square field at the shared-domain quadrature points."""
    return restriction.values_from_full(field_full)


def relative_l2_difference(u_point: np.ndarray, u_excl: np.ndarray,
                           restriction: TildeRestriction) -> float:
    """Shared-domain relative L2 difference; NaN while the reference is zero."""
    denom = restriction.l2_of_tilde(u_excl)
    if denom == 0.0:
        return math.nan
    return restriction.l2_diff(u_point, u_excl) / denom


@dataclass(frozen=True)
class CompareConfig:
    diffusion: float
    cell: CellSpec
    dt: float
    t_end: float
    side: float = 10.0
    h: float = 0.2495
    sigma: float = 0.02
    n_q: int = 64
    coupling: str = IMPLICIT
    u0: float = 0.0          # shared constant initial level for both models
    rel_tol: float = 1e-10

    def exclusion(self) -> ExclusionConfig:
        return ExclusionConfig(diffusion=self.diffusion, cell=self.cell, dt=self.dt,
                               t_end=self.t_end, side=self.side, h=self.h, u0=self.u0,
                               rel_tol=self.rel_tol, stop_when_steady=False)

    def point(self) -> PointConfig:
        return PointConfig(diffusion=self.diffusion, cell=self.cell, dt=self.dt,
                           t_end=self.t_end, side=self.side, h=self.h, sigma=self.sigma,
                           n_q=self.n_q, coupling=self.coupling, u0=self.u0,
                           rel_tol=self.rel_tol, stop_when_steady=False)


@dataclass(frozen=True)
class ComparisonRecord:
    t: float
    e_l2: float          # relative L2 difference (NaN while the reference is zero)
    abs_l2: float
    abs_h1_semi: float
    l2_excl: float
    l2_point: float
    psi: float
    steady: bool


@dataclass
class ComparisonResult:
    records: list[ComparisonRecord]
    tilde_mesh: Mesh
    full_mesh: Mesh
    restriction: TildeRestriction
    final_exclusion: np.ndarray
    final_point: np.ndarray
    time_to_plateau: float | None
    plateau_value: float

    def time_to_threshold(self, threshold: float = 0.05) -> float:
        """First time at which the relative difference drops below threshold."""
        for r in self.records:
            if not math.isnan(r.e_l2) and r.e_l2 < threshold:
                return r.t
        return math.inf


@dataclass
class _SharedGeometry:
    tilde_mesh: Mesh
    full_mesh: Mesh
    restriction: TildeRestriction


def build_shared_geometry(config: CompareConfig) -> _SharedGeometry:
    tilde = build_punctured_square_mesh(config.side, config.h, config.cell)
    full = build_square_mesh(config.side, config.h)
    restriction = build_tilde_restriction(tilde, full, config.cell)
    return _SharedGeometry(tilde_mesh=tilde, full_mesh=full, restriction=restriction)


def run_comparison(config: CompareConfig,
                   geometry: _SharedGeometry | None = None) -> ComparisonResult:
    """Step both models on the identical time grid and difference them.

    Both runs go the full horizon (no early exit); each record carries a
    steady flag that fires once both models' update rates fall below the
    steady threshold.
    """
    geo = geometry if geometry is not None else build_shared_geometry(config)
    rst = geo.restriction

    e_cfg = config.exclusion()
    p_cfg = config.point()
    e_ops = build_exclusion_operators(e_cfg, geo.tilde_mesh)
    p_ops = build_point_operators(p_cfg, geo.full_mesh)

    u_e = initial_field(config.u0, geo.tilde_mesh)
    u_p = initial_field(config.u0, geo.full_mesh)
    n_steps = int(math.floor(config.t_end / config.dt + 1e-9))
    if n_steps < 1:
        raise ParameterError("comparison needs at least one time step")

    def make_record(t, u_e, u_p, steady):
        l2_e = rst.l2_of_tilde(u_e)
        l2_p = rst.l2_of_full(u_p)
        abs_l2 = rst.l2_diff(u_p, u_e)
        return ComparisonRecord(
            t=t,
            e_l2=abs_l2 / l2_e if l2_e > 0 else math.nan,
            abs_l2=abs_l2,
            abs_h1_semi=rst.h1_semi_diff(u_p, u_e),
            l2_excl=l2_e,
            l2_point=l2_p,
            psi=psi(u_p, config.cell, p_ops.vb),
            steady=steady,
        )

    records = [make_record(0.0, u_e, u_p, False)]
    time_to_plateau = None
    for n in range(1, n_steps + 1):
        u_e_next = exclusion_step(u_e, e_ops, e_cfg)
        u_p_next = point_step(u_p, p_ops, p_cfg)
        t = n * config.dt
        rate_e = l2_norm(u_e_next - u_e, e_ops.mass) / config.dt
        rate_p = l2_norm(u_p_next - u_p, p_ops.mass) / config.dt
        steady = (rate_e < STEADY_RATE_TOL * max(1.0, l2_norm(u_e, e_ops.mass))
                  and rate_p < STEADY_RATE_TOL * max(1.0, l2_norm(u_p, p_ops.mass)))
        records.append(make_record(t, u_e_next, u_p_next, steady))
        if steady and time_to_plateau is None:
            time_to_plateau = t
        u_e, u_p = u_e_next, u_p_next

    return ComparisonResult(records=records, tilde_mesh=geo.tilde_mesh,
                            full_mesh=geo.full_mesh, restriction=rst,
                            final_exclusion=u_e, final_point=u_p,
                            time_to_plateau=time_to_plateau,
                            plateau_value=records[-1].e_l2)
