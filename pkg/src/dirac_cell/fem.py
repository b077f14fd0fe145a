"""P1 finite-element assembly, sparse SPD solves, norms, and point evaluation.

Assembled operators are scipy CSR matrices: symmetric, with the mass matrix
positive definite and the stiffness matrix positive semidefinite (constants
in its kernel, matching the pure-Neumann setting).
"""

from __future__ import annotations

import math

import numpy as np
from scipy import sparse

from .errors import AssemblyError, OutsideDomainError, ParameterError, SolverError
from .geometry import BoundaryTag, Mesh, as_xy, barycentric, locate_point
from .quadrature import TRI7_BARY, TRI7_WEIGHTS, EDGE_GAUSS_NODES, EDGE_GAUSS_WEIGHTS, \
    cell_gradients, subdivide_bary

_MASS_PATTERN = (np.ones((3, 3)) + np.eye(3)) / 12.0


def _symmetrize(A: sparse.csr_matrix) -> sparse.csr_matrix:
    return ((A + A.T) * 0.5).tocsr()


def _check_cells(mesh: Mesh) -> None:
    if mesh.areas is None or (mesh.areas <= 0).any():
        raise AssemblyError("mesh has degenerate or unindexed cells")


def assemble_mass(mesh: Mesh) -> sparse.csr_matrix:
    """Consistent P1 mass matrix; row total equals the domain area."""
    _check_cells(mesh)
    cells = mesh.cells
    local = mesh.areas[:, None, None] * _MASS_PATTERN[None, :, :]
    rows = np.repeat(cells, 3, axis=1).ravel()
    cols = np.tile(cells, (1, 3)).ravel()
    M = sparse.csr_matrix((local.ravel(), (rows, cols)),
                          shape=(mesh.num_vertices, mesh.num_vertices))
    return _symmetrize(M)


def assemble_stiffness(mesh: Mesh) -> sparse.csr_matrix:
    """P1 stiffness matrix of the Laplacian; K @ 1 = 0 (pure Neumann)."""
    _check_cells(mesh)
    cells = mesh.cells
    g = cell_gradients(mesh)                       # (m, 3, 2)
    local = mesh.areas[:, None, None] * np.einsum("mid,mjd->mij", g, g)
    rows = np.repeat(cells, 3, axis=1).ravel()
    cols = np.tile(cells, (1, 3)).ravel()
    K = sparse.csr_matrix((local.ravel(), (rows, cols)),
                          shape=(mesh.num_vertices, mesh.num_vertices))
    return _symmetrize(K)


def _tagged_edges(mesh: Mesh, tag: BoundaryTag) -> np.ndarray:
    edges = mesh.edges_with_tag(tag)
    if len(edges) == 0:
        raise ParameterError(f"mesh has no boundary edges tagged {BoundaryTag(tag).name}")
    return edges


def assemble_boundary_mass(mesh: Mesh, tag: BoundaryTag) -> sparse.csr_matrix:
    """Line-integral mass matrix on the tagged boundary polyline."""
    edges = _tagged_edges(mesh, tag)
    lengths = np.linalg.norm(mesh.vertices[edges[:, 1]] - mesh.vertices[edges[:, 0]], axis=1)
    block = np.array([[2.0, 1.0], [1.0, 2.0]]) / 6.0
    local = lengths[:, None, None] * block[None, :, :]
    rows = np.repeat(edges, 2, axis=1).ravel()
    cols = np.tile(edges, (1, 2)).ravel()
    Mb = sparse.csr_matrix((local.ravel(), (rows, cols)),
                           shape=(mesh.num_vertices, mesh.num_vertices))
    return _symmetrize(Mb)


def assemble_boundary_load(mesh: Mesh, tag: BoundaryTag, phi) -> np.ndarray:
    """Load vector of the boundary flux density.

    ``phi`` may be a constant or a callable ``phi(x, y)``; the constant case
    integrates exactly, the callable case uses 2-point Gauss per edge.
    """
    edges = _tagged_edges(mesh, tag)
    v0 = mesh.vertices[edges[:, 0]]
    v1 = mesh.vertices[edges[:, 1]]
    lengths = np.linalg.norm(v1 - v0, axis=1)
    b = np.zeros(mesh.num_vertices)
    if callable(phi):
        for s, w in zip(EDGE_GAUSS_NODES, EDGE_GAUSS_WEIGHTS):
            pts = v0 + s * (v1 - v0)
            vals = np.array([phi(x, y) for x, y in pts])
            np.add.at(b, edges[:, 0], w * lengths * vals * (1.0 - s))
            np.add.at(b, edges[:, 1], w * lengths * vals * s)
    else:
        half = 0.5 * float(phi) * lengths
        np.add.at(b, edges[:, 0], half)
        np.add.at(b, edges[:, 1], half)
    return b


def assemble_gaussian_load(mesh: Mesh, center, sigma: float) -> np.ndarray:
    """Load vector of a normalized Gaussian bump, rescaled to unit total.

    ``sigma`` is the standard deviation of the isotropic Gaussian
    ``(2*pi*sigma^2)^-1 * exp(-|x - c|^2 / (2*sigma^2))``.  Cells are
    recursively quadrature-subdivided until sub-triangles resolve ``sigma``;
    cells entirely beyond 7 standard deviations are integrated with the plain
    degree-5 rule (their contribution is below 1e-10 of the total).  The
    result is rescaled so its entries add up to exactly one, which keeps the
    discrete mass balance independent of quadrature error.
    """
    if not sigma > 0:
        raise ParameterError(f"Gaussian width must be positive, got {sigma}")
    cx, cy = as_xy(center)
    if locate_point(mesh, (cx, cy)) is None:
        raise ParameterError(f"Gaussian center {(cx, cy)} lies outside the mesh")
    _check_cells(mesh)

    inv_two_s2 = 1.0 / (2.0 * sigma * sigma)
    factor = 1.0 / (2.0 * math.pi * sigma * sigma)
    b = np.zeros(mesh.num_vertices)
    identity = np.eye(3)[None, :, :]

    corners_all = mesh.vertices[mesh.cells]
    d0 = np.hypot(corners_all[:, :, 0] - cx, corners_all[:, :, 1] - cy).min(axis=1)
    edge_len = np.linalg.norm(np.roll(corners_all, -1, axis=1) - corners_all, axis=2)
    diam = edge_len.max(axis=1)

    for ci in range(mesh.num_cells):
        corners = corners_all[ci]
        near = d0[ci] <= 7.0 * sigma + diam[ci]
        depth = 0
        if near and diam[ci] > sigma:
            depth = min(8, math.ceil(math.log2(diam[ci] / sigma)))
        tris = identity
        for _ in range(depth):
            tris = subdivide_bary(tris)
        qb = np.einsum("qc,tcb->tqb", TRI7_BARY, tris).reshape(-1, 3)
        wq = np.tile(TRI7_WEIGHTS, len(tris)) * (mesh.areas[ci] / len(tris))
        pts = qb @ corners
        vals = factor * np.exp(-((pts[:, 0] - cx) ** 2 + (pts[:, 1] - cy) ** 2) * inv_two_s2)
        b[mesh.cells[ci]] += (wq * vals) @ qb

    total = b.sum()
    if not total > 0:
        raise AssemblyError("Gaussian load integrated to a non-positive total")
    return b / total


def solve_spd(A: sparse.csr_matrix, b: np.ndarray, rel_tol: float = 1e-10,
              max_iter: int | None = None, x0: np.ndarray | None = None) -> np.ndarray:
    """Diagonally preconditioned conjugate gradients for SPD systems.

    Guarantees ``||A x - b|| <= rel_tol * ||b||`` on return (the true
    residual is re-checked before accepting convergence); raises SolverError
    with the final relative residual otherwise.
    """
    if not 0 < rel_tol < 1:
        raise ParameterError(f"rel_tol must lie in (0, 1), got {rel_tol}")
    b = np.asarray(b, dtype=float)
    n = len(b)
    norm_b = float(np.linalg.norm(b))
    if norm_b == 0.0:
        return np.zeros(n)
    cap = max_iter if max_iter is not None else 10 * n

    diag = A.diagonal()
    diag = np.where(diag > 0, diag, 1.0)

    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    r = b - A @ x
    z = r / diag
    p = z.copy()
    rz = float(r @ z)
    for _ in range(cap):
        res = float(np.linalg.norm(r))
        if res <= rel_tol * norm_b:
            r_true = b - A @ x
            if float(np.linalg.norm(r_true)) <= rel_tol * norm_b:
                return x
            r = r_true
            z = r / diag
            p = z.copy()
            rz = float(r @ z)
        Ap = A @ p
        pAp = float(p @ Ap)
        if pAp <= 0.0:
            raise SolverError("matrix is not positive definite along a search direction",
                              residual=res / norm_b)
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        z = r / diag
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise SolverError(
        f"conjugate gradients did not reach rel_tol={rel_tol:g} within {cap} iterations "
        f"(relative residual {float(np.linalg.norm(b - A @ x)) / norm_b:.3e})",
        residual=float(np.linalg.norm(b - A @ x)) / norm_b)


def l2_norm(field: np.ndarray, M: sparse.csr_matrix) -> float:
    if len(field) != M.shape[0]:
        raise ParameterError("field / operator dimension mismatch")
    return math.sqrt(max(float(field @ (M @ field)), 0.0))


def h1_seminorm(field: np.ndarray, K: sparse.csr_matrix) -> float:
    if len(field) != K.shape[0]:
        raise ParameterError("field / operator dimension mismatch")
    return math.sqrt(max(float(field @ (K @ field)), 0.0))


def total_mass(field: np.ndarray, M: sparse.csr_matrix) -> float:
    if len(field) != M.shape[0]:
        raise ParameterError("field / operator dimension mismatch")
    return float((M @ field).sum())


def evaluate(field: np.ndarray, mesh: Mesh, p, start_cell: int | None = None) -> float:
    """Barycentric interpolation of a nodal field at a point."""
    hit = locate_point(mesh, p, start_cell=start_cell)
    if hit is None:
        raise OutsideDomainError(f"point {as_xy(p)} is not inside the mesh")
    ci, lam = hit
    return float(lam @ field[mesh.cells[ci]])


def nodal_interpolant(mesh: Mesh, f) -> np.ndarray:
    """Vertex values of a callable f(x, y)."""
    return np.array([f(x, y) for x, y in mesh.vertices])


def h1_seminorm_outside(field: np.ndarray, mesh: Mesh, center, radius: float) -> float:
    """Gradient energy over the cells whose centroid lies outside a disk."""
    cx, cy = as_xy(center)
    centroids = mesh.vertices[mesh.cells].mean(axis=1)
    outside = np.hypot(centroids[:, 0] - cx, centroids[:, 1] - cy) >= radius
    g = cell_gradients(mesh)[outside]
    vals = field[mesh.cells[outside]]                   # (k, 3)
    gx = np.einsum("ki,ki->k", vals, g[:, :, 0])
    gy = np.einsum("ki,ki->k", vals, g[:, :, 1])
    energy = float(((gx * gx + gy * gy) * mesh.areas[outside]).sum())
    return math.sqrt(max(energy, 0.0))
