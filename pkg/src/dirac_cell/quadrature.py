"""Triangle quadrature rules and cross-mesh field evaluation.

The degree-5 rule is the classic 7-point rule (centroid plus two symmetric
orbits); weights are given as fractions of the cell area.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .errors import MeshError
from .geometry import CellSpec, Mesh, locate_point

log = logging.getLogger(__name__)

_SQRT15 = math.sqrt(15.0)
_A = (6.0 - _SQRT15) / 21.0
_B = (6.0 + _SQRT15) / 21.0
_WA = (155.0 - _SQRT15) / 1200.0
_WB = (155.0 + _SQRT15) / 1200.0

TRI7_BARY = np.array([
    [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
    [1.0 - 2.0 * _A, _A, _A],
    [_A, 1.0 - 2.0 * _A, _A],
    [_A, _A, 1.0 - 2.0 * _A],
    [1.0 - 2.0 * _B, _B, _B],
    [_B, 1.0 - 2.0 * _B, _B],
    [_B, _B, 1.0 - 2.0 * _B],
])
TRI7_WEIGHTS = np.array([9.0 / 40.0, _WA, _WA, _WA, _WB, _WB, _WB])

# 2-point Gauss rule on [0, 1]
EDGE_GAUSS_NODES = np.array([0.5 - 0.5 / math.sqrt(3.0), 0.5 + 0.5 / math.sqrt(3.0)])
EDGE_GAUSS_WEIGHTS = np.array([0.5, 0.5])


def cell_gradients(mesh: Mesh) -> np.ndarray:
    """Gradients of the three P1 shape functions per cell, shape (m, 3, 2)."""
    inv = mesh._inv_maps
    g = np.empty((mesh.num_cells, 3, 2))
    g[:, 1, :] = inv[:, 0, :]
    g[:, 2, :] = inv[:, 1, :]
    g[:, 0, :] = -g[:, 1, :] - g[:, 2, :]
    return g


def subdivide_bary(tris: np.ndarray) -> np.ndarray:
    """Split each barycentric triangle (k, 3, 3) into four congruent children."""
    a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]
    ab = 0.5 * (a + b)
    bc = 0.5 * (b + c)
    ca = 0.5 * (c + a)
    children = np.stack([
        np.stack([a, ab, ca], axis=1),
        np.stack([ab, b, bc], axis=1),
        np.stack([ca, bc, c], axis=1),
        np.stack([ab, bc, ca], axis=1),
    ], axis=1)
    return children.reshape(-1, 3, 3)


@dataclass
class TildeRestriction:
    """Quadrature-level evaluation of fields from two meshes on the shared domain.

    Quadrature points live on the punctured (tilde) mesh; points that fall
    inside the true circle because the polygonal hole under-covers the disk
    are discarded.  Fields on the full mesh are evaluated at the surviving
    points by barycentric interpolation in their containing full-mesh cell.
    """

    tilde_mesh: Mesh
    full_mesh: Mesh
    weights: np.ndarray          # (q,) quadrature weights of kept points
    points: np.ndarray           # (q, 2)
    sample_full: sparse.csr_matrix    # values of a full-mesh field at the points
    sample_tilde: sparse.csr_matrix   # values of a tilde-mesh field at the points
    grad_full: tuple[sparse.csr_matrix, sparse.csr_matrix]
    grad_tilde: tuple[sparse.csr_matrix, sparse.csr_matrix]
    num_discarded: int

    def values_from_full(self, field: np.ndarray) -> np.ndarray:
        return self.sample_full @ field

    def values_from_tilde(self, field: np.ndarray) -> np.ndarray:
        return self.sample_tilde @ field

    def l2_of_full(self, field: np.ndarray) -> float:
        v = self.sample_full @ field
        return math.sqrt(float(self.weights @ (v * v)))

    def l2_of_tilde(self, field: np.ndarray) -> float:
        v = self.sample_tilde @ field
        return math.sqrt(float(self.weights @ (v * v)))

    def l2_diff(self, field_full: np.ndarray, field_tilde: np.ndarray) -> float:
        d = self.sample_full @ field_full - self.sample_tilde @ field_tilde
        return math.sqrt(float(self.weights @ (d * d)))

    def h1_semi_diff(self, field_full: np.ndarray, field_tilde: np.ndarray) -> float:
        dx = self.grad_full[0] @ field_full - self.grad_tilde[0] @ field_tilde
        dy = self.grad_full[1] @ field_full - self.grad_tilde[1] @ field_tilde
        return math.sqrt(float(self.weights @ (dx * dx + dy * dy)))


def build_tilde_restriction(tilde_mesh: Mesh, full_mesh: Mesh,
                            cell: CellSpec | None = None) -> TildeRestriction:
    """Precompute the shared-domain quadrature connecting the two meshes."""
    m = tilde_mesh.num_cells
    corners = tilde_mesh.vertices[tilde_mesh.cells]          # (m, 3, 2)
    pts = np.einsum("qk,mkd->mqd", TRI7_BARY, corners)       # (m, 7, 2)
    wts = TRI7_WEIGHTS[None, :] * tilde_mesh.areas[:, None]  # (m, 7)
    cell_of = np.repeat(np.arange(m), TRI7_BARY.shape[0])
    bary = np.tile(TRI7_BARY, (m, 1))
    pts = pts.reshape(-1, 2)
    wts = wts.reshape(-1)

    if cell is not None:
        cx, cy = cell.center
        keep = np.hypot(pts[:, 0] - cx, pts[:, 1] - cy) >= cell.radius
        num_discarded = int((~keep).sum())
        if num_discarded:
            log.debug("discarded %d quadrature points inside the cell disk", num_discarded)
        pts, wts, cell_of, bary = pts[keep], wts[keep], cell_of[keep], bary[keep]
    else:
        num_discarded = 0

    q = len(pts)
    # locate the points in the full mesh with a warm-started walk
    full_cells = np.empty(q, dtype=np.int64)
    full_bary = np.empty((q, 3))
    start = None
    for i in range(q):
        hit = locate_point(full_mesh, pts[i], start_cell=start)
        if hit is None:
            raise MeshError(f"shared-domain quadrature point {pts[i]} not found "
                            f"in the full mesh")
        full_cells[i], full_bary[i] = hit
        start = int(full_cells[i])

    rows = np.repeat(np.arange(q), 3)

    tilde_cols = tilde_mesh.cells[cell_of].ravel()
    sample_tilde = sparse.csr_matrix((bary.ravel(), (rows, tilde_cols)),
                                     shape=(q, tilde_mesh.num_vertices))
    full_cols = full_mesh.cells[full_cells].ravel()
    sample_full = sparse.csr_matrix((full_bary.ravel(), (rows, full_cols)),
                                    shape=(q, full_mesh.num_vertices))

    g_tilde = cell_gradients(tilde_mesh)[cell_of]   # (q, 3, 2)
    g_full = cell_gradients(full_mesh)[full_cells]
    grad_tilde = tuple(
        sparse.csr_matrix((g_tilde[:, :, d].ravel(), (rows, tilde_cols)),
                          shape=(q, tilde_mesh.num_vertices)) for d in (0, 1))
    grad_full = tuple(
        sparse.csr_matrix((g_full[:, :, d].ravel(), (rows, full_cols)),
                          shape=(q, full_mesh.num_vertices)) for d in (0, 1))

    return TildeRestriction(
        tilde_mesh=tilde_mesh, full_mesh=full_mesh, weights=wts, points=pts,
        sample_full=sample_full, sample_tilde=sample_tilde,
        grad_full=grad_full, grad_tilde=grad_tilde, num_discarded=num_discarded)
