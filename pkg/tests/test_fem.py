import math

import numpy as np
import pytest
from scipy import sparse

from dirac_cell import fem
from dirac_cell.errors import OutsideDomainError, ParameterError, SolverError
from dirac_cell.geometry import (BoundaryTag, CellSpec, build_mesh,
                                 build_punctured_square_mesh, build_square_mesh)

SIDE = 10.0
CENTER = (5.0, 5.0)
RADIUS = 0.25


@pytest.fixture()
def reference_triangle():
    verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    return build_mesh(verts, np.array([[0, 1, 2]]),
                      np.array([[0, 1], [1, 2], [2, 0]]),
                      np.array([int(BoundaryTag.OUTER)] * 3))


@pytest.fixture(scope="module")
def unit_square():
    return build_square_mesh(1.0, 0.1)


class TestReferenceElement:
    def test_mass_matrix_exact(self, reference_triangle):
        # exact integral of products of linear shape functions on the element
        M = fem.assemble_mass(reference_triangle).toarray()
        area = 0.5
        expected = (area / 12.0) * np.array([[2, 1, 1], [1, 2, 1], [1, 1, 2]], dtype=float)
        assert np.abs(M - expected).max() < 1e-15

    def test_stiffness_matrix_exact(self, reference_triangle):
        K = fem.assemble_stiffness(reference_triangle).toarray()
        expected = 0.5 * np.array([[2, -1, -1], [-1, 1, 0], [-1, 0, 1]], dtype=float)
        assert np.abs(K - expected).max() < 1e-15

    def test_single_edge_boundary_mass_block(self):
        # tag just one unit edge to isolate its 2x2 contribution
        verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        mesh = build_mesh(verts, np.array([[0, 1, 2]]),
                          np.array([[0, 1], [1, 2], [2, 0]]),
                          np.array([int(BoundaryTag.CELL), int(BoundaryTag.OUTER),
                                    int(BoundaryTag.OUTER)]))
        Mb = fem.assemble_boundary_mass(mesh, BoundaryTag.CELL).toarray()
        expected = np.zeros((3, 3))
        expected[:2, :2] = (1.0 / 6.0) * np.array([[2, 1], [1, 2]])
        assert np.abs(Mb - expected).max() < 1e-15
        b = fem.assemble_boundary_load(mesh, BoundaryTag.CELL, 3.0)
        assert abs(b.sum() - 3.0) < 1e-14
        assert abs(b[2]) == 0.0


class TestGlobalAssembly:
    def test_mass_partition_of_unity(self, unit_square):
        M = fem.assemble_mass(unit_square)
        one = np.ones(unit_square.num_vertices)
        assert abs(one @ (M @ one) - 1.0) <= 1e-12

    def test_mass_total_on_punctured_mesh(self, tilde_mesh):
        M = fem.assemble_mass(tilde_mesh)
        one = np.ones(tilde_mesh.num_vertices)
        exact = SIDE ** 2 - math.pi * RADIUS ** 2
        assert abs(one @ (M @ one) - tilde_mesh.total_area()) <= 1e-10
        assert abs(one @ (M @ one) - exact) / exact < 0.005

    def test_stiffness_kernel_and_energy(self, unit_square):
        K = fem.assemble_stiffness(unit_square)
        one = np.ones(unit_square.num_vertices)
        assert np.abs(K @ one).max() <= 1e-12
        ux = unit_square.vertices[:, 0].copy()
        assert abs(ux @ (K @ ux) - 1.0) <= 1e-10

    def test_operators_symmetric(self, tilde_mesh):
        for A in (fem.assemble_mass(tilde_mesh), fem.assemble_stiffness(tilde_mesh),
                  fem.assemble_boundary_mass(tilde_mesh, BoundaryTag.CELL)):
            asym = abs(A - A.T)
            scale = abs(A).max()
            assert (asym.max() if asym.nnz else 0.0) <= 1e-13 * scale

    def test_boundary_mass_totals(self, tilde_mesh):
        one = np.ones(tilde_mesh.num_vertices)
        Mb = fem.assemble_boundary_mass(tilde_mesh, BoundaryTag.CELL)
        circumference = 2.0 * math.pi * RADIUS
        assert abs(one @ (Mb @ one) - circumference) / circumference < 0.02
        Mo = fem.assemble_boundary_mass(tilde_mesh, BoundaryTag.OUTER)
        assert abs(one @ (Mo @ one) - 4 * SIDE) <= 1e-10

    def test_boundary_mass_equals_polyline_length(self, tilde_mesh):
        edges = tilde_mesh.edges_with_tag(BoundaryTag.CELL)
        length = sum(float(np.linalg.norm(tilde_mesh.vertices[j] - tilde_mesh.vertices[i]))
                     for i, j in edges)
        one = np.ones(tilde_mesh.num_vertices)
        Mb = fem.assemble_boundary_mass(tilde_mesh, BoundaryTag.CELL)
        assert abs(one @ (Mb @ one) - length) <= 1e-12 * length

    def test_boundary_load_totals(self, tilde_mesh):
        b = fem.assemble_boundary_load(tilde_mesh, BoundaryTag.CELL, 1.0)
        assert abs(b.sum() - math.pi / 2) / (math.pi / 2) < 0.02
        assert np.all(fem.assemble_boundary_load(tilde_mesh, BoundaryTag.CELL, 0.0) == 0.0)
        b2 = fem.assemble_boundary_load(tilde_mesh, BoundaryTag.OUTER, 2.0)
        assert abs(b2.sum() - 80.0) <= 1e-10

    def test_boundary_load_callable_matches_constant(self, tilde_mesh):
        b_const = fem.assemble_boundary_load(tilde_mesh, BoundaryTag.CELL, 2.5)
        b_call = fem.assemble_boundary_load(tilde_mesh, BoundaryTag.CELL, lambda x, y: 2.5)
        assert np.abs(b_const - b_call).max() < 1e-13

    def test_empty_tag_rejected(self, full_mesh):
        with pytest.raises(ParameterError):
            fem.assemble_boundary_mass(full_mesh, BoundaryTag.CELL)

    def test_robin_pencil_kernel(self, tilde_mesh):
        # stiffness kills constants; the boundary term does not
        K = fem.assemble_stiffness(tilde_mesh)
        Mb = fem.assemble_boundary_mass(tilde_mesh, BoundaryTag.CELL)
        one = np.ones(tilde_mesh.num_vertices)
        combined = (K + 1.0 * Mb) @ one
        assert np.abs(combined - Mb @ one).max() <= 1e-12
        assert float(one @ (Mb @ one)) > 1.0


class TestGaussianLoad:
    def test_unit_total(self, full_mesh):
        g = fem.assemble_gaussian_load(full_mesh, CENTER, 0.02)
        assert abs(g.sum() - 1.0) <= 1e-14

    def test_vertex_centered_concentration(self, full_mesh):
        # (5, 5) is a grid vertex; with sigma << h most mass lands on its hat
        g = fem.assemble_gaussian_load(full_mesh, CENTER, 0.02)
        iv = int(np.argmin(np.hypot(full_mesh.vertices[:, 0] - CENTER[0],
                                    full_mesh.vertices[:, 1] - CENTER[1])))
        assert g[iv] > 0.5

    def test_far_tail_negligible(self, full_mesh):
        # mass beyond max(2h, 7 sigma) is bounded by the radial tail exp(-24.5)
        sigma = 0.02
        g = fem.assemble_gaussian_load(full_mesh, CENTER, sigma)
        d = np.hypot(full_mesh.vertices[:, 0] - CENTER[0],
                     full_mesh.vertices[:, 1] - CENTER[1])
        cutoff = max(2 * 0.25, 7 * sigma)
        assert g[d > cutoff].sum() < 1e-9

    def test_center_outside_rejected(self, tilde_mesh):
        with pytest.raises(ParameterError):
            fem.assemble_gaussian_load(tilde_mesh, CENTER, 0.02)  # hole interior

    def test_bad_sigma_rejected(self, full_mesh):
        with pytest.raises(ParameterError):
            fem.assemble_gaussian_load(full_mesh, CENTER, 0.0)


class TestSolver:
    def test_identity(self):
        A = sparse.identity(5, format="csr")
        b = np.array([1.0, -2.0, 3.0, 0.0, 0.5])
        assert np.abs(fem.solve_spd(A, b) - b).max() == 0.0

    def test_mass_solve(self, unit_square):
        M = fem.assemble_mass(unit_square)
        one = np.ones(unit_square.num_vertices)
        x = fem.solve_spd(M, M @ one)
        assert np.abs(x - one).max() < 1e-10

    def test_against_dense_elimination(self):
        rng = np.random.default_rng(42)
        A = rng.standard_normal((10, 10))
        A = A @ A.T + 10.0 * np.eye(10)
        b = rng.standard_normal(10)
        x = fem.solve_spd(sparse.csr_matrix(A), b, rel_tol=1e-12)
        assert np.abs(x - np.linalg.solve(A, b)).max() < 1e-8

    def test_zero_rhs(self):
        A = sparse.identity(4, format="csr")
        assert np.all(fem.solve_spd(A, np.zeros(4)) == 0.0)

    def test_reports_nonconvergence(self, unit_square):
        # singular pure-Neumann stiffness with an incompatible right side
        K = fem.assemble_stiffness(unit_square)
        b = np.ones(unit_square.num_vertices)
        with pytest.raises(SolverError) as info:
            fem.solve_spd(K + 1e-30 * sparse.identity(K.shape[0]), b,
                          rel_tol=1e-12, max_iter=20)
        assert info.value.residual is not None

    def test_rejects_bad_tolerance(self):
        with pytest.raises(ParameterError):
            fem.solve_spd(sparse.identity(3, format="csr"), np.ones(3), rel_tol=0.0)


class TestNormsAndEvaluate:
    def test_constant_field_norms(self, tilde_mesh):
        M = fem.assemble_mass(tilde_mesh)
        K = fem.assemble_stiffness(tilde_mesh)
        one = np.ones(tilde_mesh.num_vertices)
        target = math.sqrt(SIDE ** 2 - math.pi * RADIUS ** 2)
        assert abs(fem.l2_norm(one, M) - target) / target < 1e-3
        assert fem.h1_seminorm(one, K) <= 1e-7
        assert abs(fem.total_mass(one, M) - tilde_mesh.total_area()) <= 1e-10

    def test_zero_field(self, tilde_mesh):
        M = fem.assemble_mass(tilde_mesh)
        K = fem.assemble_stiffness(tilde_mesh)
        z = np.zeros(tilde_mesh.num_vertices)
        assert fem.l2_norm(z, M) == 0.0
        assert fem.h1_seminorm(z, K) == 0.0
        assert fem.total_mass(z, M) == 0.0

    def test_linear_field_seminorm(self, unit_square):
        K = fem.assemble_stiffness(unit_square)
        ux = unit_square.vertices[:, 0].copy()
        assert abs(fem.h1_seminorm(ux, K) - 1.0) <= 1e-10

    def test_dimension_mismatch(self, unit_square):
        M = fem.assemble_mass(unit_square)
        with pytest.raises(ParameterError):
            fem.l2_norm(np.ones(3), M)

    def test_evaluate_at_vertex(self, tilde_mesh):
        field = np.arange(tilde_mesh.num_vertices, dtype=float)
        vid = 123
        got = fem.evaluate(field, tilde_mesh, tilde_mesh.vertices[vid])
        assert abs(got - field[vid]) < 1e-9 * tilde_mesh.num_vertices

    def test_evaluate_reproduces_affine(self, tilde_mesh):
        field = fem.nodal_interpolant(tilde_mesh, lambda x, y: 2.0 * x + 3.0 * y)
        rng = np.random.default_rng(3)
        checked = 0
        for _ in range(50):
            p = rng.uniform(0.0, SIDE, size=2)
            if np.hypot(p[0] - CENTER[0], p[1] - CENTER[1]) <= RADIUS + 0.05:
                continue
            got = fem.evaluate(field, tilde_mesh, p)
            assert abs(got - (2.0 * p[0] + 3.0 * p[1])) < 1e-10
            checked += 1
        assert checked > 30

    def test_evaluate_outside_raises(self, tilde_mesh):
        with pytest.raises(OutsideDomainError):
            fem.evaluate(np.zeros(tilde_mesh.num_vertices), tilde_mesh, CENTER)

    def test_refinement_keeps_area_exact(self):
        coarse = build_square_mesh(1.0, 0.2)
        fine = build_square_mesh(1.0, 0.1)
        Mc = fem.assemble_mass(coarse)
        Mf = fem.assemble_mass(fine)
        total_c = np.ones(coarse.num_vertices) @ (Mc @ np.ones(coarse.num_vertices))
        total_f = np.ones(fine.num_vertices) @ (Mf @ np.ones(fine.num_vertices))
        assert abs(total_c - total_f) <= 1e-12
