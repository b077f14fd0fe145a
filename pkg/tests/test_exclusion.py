import math

import numpy as np
import pytest

from dirac_cell.errors import ParameterError
from dirac_cell.exclusion import (ExclusionConfig, build_exclusion_operators,
                                  exclusion_step, run_exclusion)
from dirac_cell.fem import l2_norm
from dirac_cell.geometry import BoundaryTag, CellSpec

CENTER = (5.0, 5.0)
RADIUS = 0.25


def polyline_length(mesh):
    edges = mesh.edges_with_tag(BoundaryTag.CELL)
    return sum(float(np.linalg.norm(mesh.vertices[j] - mesh.vertices[i]))
               for i, j in edges)


def make_config(uptake, phi=1.0, **kw):
    cell = CellSpec(center=CENTER, radius=RADIUS, phi=phi, uptake=uptake)
    defaults = dict(diffusion=1.0, cell=cell, dt=0.04, t_end=1.0)
    defaults.update(kw)
    return ExclusionConfig(**defaults)


class TestStep:
    def test_no_flux_equilibrium(self, tilde_mesh):
        cfg = make_config(uptake=0.0, phi=0.0)
        ops = build_exclusion_operators(cfg, tilde_mesh)
        u = np.full(tilde_mesh.num_vertices, 3.25)
        u_next = exclusion_step(u, ops, cfg)
        assert np.abs(u_next - u).max() < 1e-10

    def test_exact_steady_state_is_stationary(self, tilde_mesh):
        # phi - a*u vanishes identically at u = phi/a
        cfg = make_config(uptake=1.0, phi=1.0)
        ops = build_exclusion_operators(cfg, tilde_mesh)
        u = np.ones(tilde_mesh.num_vertices)
        u_next = exclusion_step(u, ops, cfg)
        assert np.abs(u_next - u).max() < 1e-8

    def test_first_step_mass_equals_injected_flux(self, tilde_mesh):
        cfg = make_config(uptake=0.0, rel_tol=1e-12)
        ops = build_exclusion_operators(cfg, tilde_mesh)
        u1 = exclusion_step(np.zeros(tilde_mesh.num_vertices), ops, cfg)
        mass = float((ops.mass @ u1).sum())
        assert abs(mass - cfg.dt * polyline_length(tilde_mesh)) < 1e-10


class TestRun:
    def test_pure_secretion_mass_growth(self, tilde_mesh):
        cfg = make_config(uptake=0.0, t_end=2.0, rel_tol=1e-12)
        res = run_exclusion(cfg, mesh=tilde_mesh)
        circumference = 2.0 * math.pi * RADIUS
        length = polyline_length(tilde_mesh)
        for rec in res.records[1:]:
            assert abs(rec.mass - circumference * rec.t) / (circumference * rec.t) < 0.02
            assert abs(rec.mass - length * rec.t) / (length * rec.t) < 1e-9

    def test_per_step_mass_balance(self, tilde_mesh):
        cfg = make_config(uptake=1.0, t_end=1.0, rel_tol=1e-12)
        res = run_exclusion(cfg, mesh=tilde_mesh)
        for prev, cur in zip(res.records, res.records[1:]):
            lhs = (cur.mass - prev.mass) / cfg.dt
            assert abs(lhs - cur.boundary_flux) <= 1e-9 * max(1.0, abs(cur.boundary_flux))

    def test_monotone_approach_to_steady_state(self, tilde_mesh):
        cfg = make_config(uptake=1.0, t_end=1.0)
        ops = build_exclusion_operators(cfg, tilde_mesh)
        u = np.zeros(tilde_mesh.num_vertices)
        target = np.ones(tilde_mesh.num_vertices)
        gaps = []
        for _ in range(20):
            gaps.append(l2_norm(u - target, ops.mass))
            u = exclusion_step(u, ops, cfg)
        assert all(b <= a + 1e-12 for a, b in zip(gaps, gaps[1:]))

    def test_nonnegativity_guard(self, tilde_mesh):
        cfg = make_config(uptake=0.0, t_end=1.0)
        res = run_exclusion(cfg, mesh=tilde_mesh)
        assert res.final.min() >= -1e-8 * res.final.max()

    def test_single_step_horizon(self, tilde_mesh):
        cfg = make_config(uptake=1.0, t_end=0.04)
        res = run_exclusion(cfg, mesh=tilde_mesh)
        assert len(res.records) == 2
        assert res.records[0].t == 0.0
        assert res.records[1].t == pytest.approx(0.04)

    def test_steady_detection_stops_early(self, tilde_mesh):
        cfg = make_config(uptake=1.0, t_end=2.0, u0=1.0)
        res = run_exclusion(cfg, mesh=tilde_mesh)
        assert res.steady_time == pytest.approx(cfg.dt)
        assert len(res.records) == 2
        assert res.records[-1].steady

    def test_steady_detection_can_be_disabled(self, tilde_mesh):
        cfg = make_config(uptake=1.0, t_end=0.2, u0=1.0, stop_when_steady=False)
        res = run_exclusion(cfg, mesh=tilde_mesh)
        assert len(res.records) == 6

    def test_snapshots_captured(self, tilde_mesh):
        cfg = make_config(uptake=1.0, t_end=0.2, snapshot_times=(0.0, 0.12),
                          stop_when_steady=False)
        res = run_exclusion(cfg, mesh=tilde_mesh)
        assert set(res.snapshots) == {0.0, 0.12}
        assert np.all(res.snapshots[0.0] == 0.0)

    def test_initial_field_variants(self, tilde_mesh):
        cfg = make_config(uptake=1.0, t_end=0.04, u0=0.5)
        res = run_exclusion(cfg, mesh=tilde_mesh)
        assert res.records[0].mass == pytest.approx(0.5 * tilde_mesh.total_area())
        with pytest.raises(ParameterError):
            run_exclusion(make_config(uptake=1.0, u0=np.ones(3)), mesh=tilde_mesh)


class TestConfigValidation:
    def test_rejects_bad_parameters(self):
        with pytest.raises(ParameterError):
            make_config(uptake=1.0, dt=0.0)
        with pytest.raises(ParameterError):
            make_config(uptake=1.0, t_end=0.01)  # below one step
        with pytest.raises(ParameterError):
            make_config(uptake=1.0, diffusion=-1.0)
        with pytest.raises(ParameterError):
            CellSpec(center=CENTER, radius=RADIUS, phi=1.0, uptake=-1.0)
