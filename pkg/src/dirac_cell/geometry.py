"""Triangular meshes of a square domain, optionally punctured by a circular hole.

The punctured mesh keeps the hole boundary as an exact inscribed polygon of
the circle (every hole vertex lies on the circle to machine precision), with
a graded point cloud stitched to a structured background grid by Delaunay
triangulation.  Construction is fully deterministic for fixed inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np
from scipy.spatial import Delaunay, cKDTree

from .errors import MeshError, ParameterError


class BoundaryTag(IntEnum):
    OUTER = 1  # outer square walls
    CELL = 2   # circular hole boundary


@dataclass(frozen=True)
class Point2:
    """A point in the plane; coordinates must be finite."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ParameterError("Point2 coordinates must be finite")


def as_xy(p) -> tuple[float, float]:
    """Accept a Point2, a pair, or an array-like of length 2."""
    if isinstance(p, Point2):
        return p.x, p.y
    x, y = p
    return float(x), float(y)


@dataclass(frozen=True)
class CellSpec:
    """Geometry and exchange parameters of the biological cell.

    ``phi`` is the (constant) secretion flux density on the cell boundary and
    ``uptake`` the non-negative uptake rate; the boundary exchange density is
    ``phi - uptake * u``.
    """

    center: tuple[float, float]
    radius: float
    phi: float = 1.0
    uptake: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))
        if not self.radius > 0:
            raise ParameterError(f"cell radius must be positive, got {self.radius}")
        if self.uptake < 0:
            raise ParameterError(f"uptake rate must be >= 0, got {self.uptake}")
        if self.phi < 0:
            raise ParameterError(f"flux density must be >= 0, got {self.phi}")

    @property
    def circumference(self) -> float:
        return 2.0 * math.pi * self.radius


@dataclass(frozen=True)
class QualityReport:
    min_angle_deg: float
    max_aspect: float          # longest edge / (2 * inradius)
    avg_edge_length: float
    num_vertices: int
    num_cells: int


@dataclass
class Mesh:
    """Conforming triangle mesh with tagged boundary edges.

    Treat instances as immutable after construction: all arrays are marked
    read-only, so the mesh can be shared freely across threads.
    """

    vertices: np.ndarray        # (n, 2) float64
    cells: np.ndarray           # (m, 3) int32, counterclockwise
    boundary_edges: np.ndarray  # (k, 2) int32, vertex index pairs
    boundary_tags: np.ndarray   # (k,) int32, BoundaryTag values

    # derived, filled by _finalize
    areas: np.ndarray = field(default=None, repr=False)
    _origins: np.ndarray = field(default=None, repr=False)   # (m, 2) first vertex
    _inv_maps: np.ndarray = field(default=None, repr=False)  # (m, 2, 2) inverse affine maps
    _neighbors: np.ndarray = field(default=None, repr=False)  # (m, 3) cell across edge opposite local vertex
    _vertex_cell: np.ndarray = field(default=None, repr=False)  # (n,) one incident cell per vertex
    _tree: cKDTree = field(default=None, repr=False)

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @property
    def num_cells(self) -> int:
        return len(self.cells)

    def edges_with_tag(self, tag: BoundaryTag) -> np.ndarray:
        return self.boundary_edges[self.boundary_tags == int(tag)]

    def total_area(self) -> float:
        return float(self.areas.sum())


def _signed_areas(vertices: np.ndarray, cells: np.ndarray) -> np.ndarray:
    a = vertices[cells[:, 0]]
    b = vertices[cells[:, 1]]
    c = vertices[cells[:, 2]]
    return 0.5 * ((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1])
                  - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0]))


def _edge_key(i: int, j: int) -> tuple[int, int]:
    return (i, j) if i < j else (j, i)


def build_mesh(vertices, cells, boundary_edges, boundary_tags) -> Mesh:
    """Normalize, validate, and index a raw triangulation.

    Ensures counterclockwise cells, strictly positive areas, edge conformity
    (every listed boundary edge belongs to exactly one cell, every interior
    edge to exactly two), and that the listed boundary edges are exactly the
    topological boundary.
    """
    vertices = np.ascontiguousarray(vertices, dtype=np.float64)
    cells = np.ascontiguousarray(cells, dtype=np.int32)
    boundary_edges = np.ascontiguousarray(boundary_edges, dtype=np.int32).reshape(-1, 2)
    boundary_tags = np.ascontiguousarray(boundary_tags, dtype=np.int32).reshape(-1)

    if not np.isfinite(vertices).all():
        raise MeshError("mesh vertices contain non-finite coordinates")
    if cells.min(initial=0) < 0 or cells.max(initial=-1) >= len(vertices):
        raise MeshError("cell vertex index out of range")
    if len(boundary_edges) != len(boundary_tags):
        raise MeshError("boundary edge/tag length mismatch")

    # enforce counterclockwise orientation
    areas = _signed_areas(vertices, cells)
    flipped = areas < 0
    if flipped.any():
        cells = cells.copy()
        cells[flipped] = cells[flipped][:, [0, 2, 1]]
        areas = np.abs(areas)
    scale = max(1.0, float(np.abs(vertices).max()))
    if (areas <= 1e-14 * scale * scale).any():
        bad = int(np.argmin(areas))
        raise MeshError(f"degenerate cell {bad} with area {areas[bad]:.3e}")

    # edge incidence
    edge_cells: dict[tuple[int, int], list[int]] = {}
    for ci, (i, j, k) in enumerate(cells):
        for a, b in ((i, j), (j, k), (k, i)):
            edge_cells.setdefault(_edge_key(int(a), int(b)), []).append(ci)
    for key, owners in edge_cells.items():
        if len(owners) > 2:
            raise MeshError(f"edge {key} shared by {len(owners)} cells (non-conforming)")
    topological = {k for k, owners in edge_cells.items() if len(owners) == 1}
    listed = {_edge_key(int(i), int(j)) for i, j in boundary_edges}
    if topological != listed:
        raise MeshError(
            f"boundary edge list does not match mesh boundary "
            f"({len(listed)} listed vs {len(topological)} topological)")

    used = np.zeros(len(vertices), dtype=bool)
    used[cells.ravel()] = True
    if not used.all():
        raise MeshError(f"{int((~used).sum())} vertices not referenced by any cell")

    mesh = Mesh(vertices, cells, boundary_edges, boundary_tags)
    _finalize(mesh, areas, edge_cells)
    return mesh


def _finalize(mesh: Mesh, areas: np.ndarray, edge_cells) -> None:
    verts, cells = mesh.vertices, mesh.cells
    a = verts[cells[:, 0]]
    b = verts[cells[:, 1]]
    c = verts[cells[:, 2]]
    # columns of the affine map [b - a | c - a]; invert analytically
    e1 = b - a
    e2 = c - a
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    inv = np.empty((len(cells), 2, 2))
    inv[:, 0, 0] = e2[:, 1] / det
    inv[:, 0, 1] = -e2[:, 0] / det
    inv[:, 1, 0] = -e1[:, 1] / det
    inv[:, 1, 1] = e1[:, 0] / det

    neighbors = -np.ones((len(cells), 3), dtype=np.int32)
    for ci, (i, j, k) in enumerate(cells):
        tri = (int(i), int(j), int(k))
        for local, (p, q) in enumerate(((j, k), (k, i), (i, j))):  # edge opposite local vertex
            owners = edge_cells[_edge_key(int(p), int(q))]
            for other in owners:
                if other != ci:
                    neighbors[ci, local] = other
    vertex_cell = -np.ones(len(verts), dtype=np.int32)
    for ci, tri in enumerate(cells):
        for v in tri:
            if vertex_cell[v] < 0:
                vertex_cell[v] = ci

    mesh.areas = areas
    mesh._origins = np.ascontiguousarray(a)
    mesh._inv_maps = inv
    mesh._neighbors = neighbors
    mesh._vertex_cell = vertex_cell
    mesh._tree = cKDTree(verts)
    for arr in (mesh.vertices, mesh.cells, mesh.boundary_edges, mesh.boundary_tags,
                mesh.areas, mesh._origins, mesh._inv_maps, mesh._neighbors, mesh._vertex_cell):
        arr.setflags(write=False)


def _grid_points(L: float, n: int) -> tuple[np.ndarray, float]:
    coords = np.linspace(0.0, L, n + 1)
    X, Y = np.meshgrid(coords, coords, indexing="ij")
    return np.column_stack([X.ravel(), Y.ravel()]), coords[1] - coords[0]


def build_square_mesh(L: float, h_target: float) -> Mesh:
    """Structured triangulation of [0, L]^2 with alternating diagonals.

    All boundary edges carry the OUTER tag; average edge length stays within
    25% of ``h_target``.
    """
    if not L > 0:
        raise ParameterError(f"side length must be positive, got {L}")
    if not 0 < h_target <= L / 2:
        raise ParameterError(f"mesh size must lie in (0, L/2], got {h_target}")
    n = max(2, round(L / h_target))
    points, _ = _grid_points(L, n)

    def vid(i, j):
        return i * (n + 1) + j

    cells = []
    for i in range(n):
        for j in range(n):
            bl, br = vid(i, j), vid(i + 1, j)
            tl, tr = vid(i, j + 1), vid(i + 1, j + 1)
            if (i + j) % 2 == 0:
                cells.append((bl, br, tr))
                cells.append((bl, tr, tl))
            else:
                cells.append((bl, br, tl))
                cells.append((br, tr, tl))
    edges = []
    for i in range(n):
        edges.append((vid(i, 0), vid(i + 1, 0)))
        edges.append((vid(i, n), vid(i + 1, n)))
        edges.append((vid(0, i), vid(0, i + 1)))
        edges.append((vid(n, i), vid(n, i + 1)))
    tags = np.full(len(edges), int(BoundaryTag.OUTER))
    return build_mesh(points, np.array(cells), np.array(edges), tags)


def _ring(center, radius, count, offset) -> np.ndarray:
    angles = offset + 2.0 * np.pi * np.arange(count) / count
    return np.column_stack([center[0] + radius * np.cos(angles),
                            center[1] + radius * np.sin(angles)])


def _inside_polygon_mask(points, center, R, n_seg, shrink=1e-12):
    """Points strictly inside the regular n_seg-gon inscribed in the circle."""
    dx = points[:, 0] - center[0]
    dy = points[:, 1] - center[1]
    rho = np.hypot(dx, dy)
    ang = np.arctan2(dy, dx)
    step = 2.0 * np.pi / n_seg
    rel = np.mod(ang, step) - step / 2.0
    support = R * math.cos(math.pi / n_seg)
    return rho * np.cos(rel) < support * (1.0 - shrink)


def build_punctured_square_mesh(L: float, h_target: float, cell: CellSpec) -> Mesh:
    """Mesh [0, L]^2 minus the cell disk.

    The hole boundary is the regular polygon with ``max(16, round(2*pi*R/h))``
    segments inscribed in the cell circle; its vertices sit on the circle to
    machine precision.  Graded rings of guide points are placed around the
    hole and joined to a structured background grid via Delaunay
    triangulation, followed by two guarded Laplacian smoothing sweeps of the
    interior vertices.
    """
    if not L > 0:
        raise ParameterError(f"side length must be positive, got {L}")
    if not 0 < h_target <= L / 2:
        raise ParameterError(f"mesh size must lie in (0, L/2], got {h_target}")
    cx, cy = cell.center
    R = cell.radius
    clearance = min(cx - R, cy - R, L - cx - R, L - cy - R)
    if clearance < 2 * h_target:
        raise ParameterError(
            f"cell disk needs clearance >= 2*h from the walls "
            f"(have {clearance:.4g}, need {2 * h_target:.4g})")

    n = max(2, round(L / h_target))
    grid, s = _grid_points(L, n)
    n_seg = max(16, round(2.0 * math.pi * R / h_target))
    delta0 = 2.0 * math.pi * R / n_seg

    groups = [_ring((cx, cy), R, n_seg, 0.0)]
    max_r = min(cx, cy, L - cx, L - cy) - 0.8 * s
    r = R
    delta = delta0
    if delta0 < 0.95 * s and R + 0.9 * delta0 <= max_r:
        r = R + 0.9 * delta0
        groups.append(_ring((cx, cy), r, n_seg, math.pi / n_seg))
        k = 1
        while delta < 0.95 * s:
            delta = min(1.45 * delta, s)
            if r + delta > max_r:
                break
            r = r + delta
            count = max(12, round(2.0 * math.pi * r / delta))
            offset = (math.pi / count) * (k % 2)
            groups.append(_ring((cx, cy), r, count, offset))
            k += 1
    r_guard = r + 0.55 * s
    dist = np.hypot(grid[:, 0] - cx, grid[:, 1] - cy)
    groups.append(grid[dist >= r_guard])
    points = np.vstack(groups)

    tri = Delaunay(points)
    simplices = tri.simplices.astype(np.int32)
    centroids = points[simplices].mean(axis=1)
    keep = ~_inside_polygon_mask(centroids, (cx, cy), R, n_seg)
    cells = simplices[keep]

    # classify boundary edges before smoothing moves anything
    edge_cells: dict[tuple[int, int], int] = {}
    for tri_ in cells:
        i, j, k = (int(v) for v in tri_)
        for a, b in ((i, j), (j, k), (k, i)):
            key = _edge_key(a, b)
            edge_cells[key] = edge_cells.get(key, 0) + 1
    boundary = [e for e, cnt in edge_cells.items() if cnt == 1]

    on_circle = np.zeros(len(points), dtype=bool)
    on_circle[:n_seg] = True
    tol_outer = 1e-12 * L
    on_wall = ((np.abs(points[:, 0]) <= tol_outer) | (np.abs(points[:, 0] - L) <= tol_outer)
               | (np.abs(points[:, 1]) <= tol_outer) | (np.abs(points[:, 1] - L) <= tol_outer))

    edges_arr = np.array(boundary, dtype=np.int32)
    tags = np.empty(len(edges_arr), dtype=np.int32)
    for idx, (i, j) in enumerate(edges_arr):
        if on_circle[i] and on_circle[j]:
            tags[idx] = int(BoundaryTag.CELL)
        elif on_wall[i] and on_wall[j]:
            tags[idx] = int(BoundaryTag.OUTER)
        else:
            raise MeshError(
                f"unclassifiable boundary edge between vertices {i} and {j}; "
                f"try a different mesh size")

    cell_edges = {tuple(sorted(e)) for e, t in zip(edges_arr, tags) if t == int(BoundaryTag.CELL)}
    expected = {_edge_key(k, (k + 1) % n_seg) for k in range(n_seg)}
    if cell_edges != expected:
        raise MeshError("hole boundary is not the expected closed polygon; "
                        "try a different mesh size")

    points = _smooth(points, cells, pinned=on_circle | on_wall, sweeps=2)

    mesh = build_mesh(points, cells, edges_arr, tags)
    polygon_area = 0.5 * n_seg * R * R * math.sin(2.0 * math.pi / n_seg)
    expected_area = L * L - polygon_area
    if abs(mesh.total_area() - expected_area) > 1e-10 * L * L:
        raise MeshError(
            f"mesh area {mesh.total_area():.15g} != domain area {expected_area:.15g}")
    return mesh


def _smooth(points, cells, pinned, sweeps=2, relax=0.6):
    """Laplacian smoothing of non-pinned vertices with an inversion guard."""
    points = points.copy()
    nbrs: dict[int, set[int]] = {}
    incident: dict[int, list[int]] = {}
    for ci, (i, j, k) in enumerate(cells):
        for v in (int(i), int(j), int(k)):
            incident.setdefault(v, []).append(ci)
        for a, b in ((i, j), (j, k), (k, i)):
            nbrs.setdefault(int(a), set()).add(int(b))
            nbrs.setdefault(int(b), set()).add(int(a))
    movable = [v for v in range(len(points)) if not pinned[v] and v in nbrs]
    for _ in range(sweeps):
        for v in movable:
            ring = sorted(nbrs[v])
            target = points[ring].mean(axis=0)
            candidate = points[v] + relax * (target - points[v])
            old = points[v].copy()
            points[v] = candidate
            tris = cells[incident[v]]
            areas = _signed_areas(points, tris)
            before = points[v]
            points[v] = old
            old_areas = _signed_areas(points, tris)
            if (areas > 0.25 * old_areas).all() and (areas > 0).all():
                points[v] = before
    return points


def mesh_quality(mesh: Mesh) -> QualityReport:
    """Worst-angle / aspect statistics; raises on degenerate cells via build_mesh."""
    verts, cells = mesh.vertices, mesh.cells
    p = verts[cells]  # (m, 3, 2)
    min_angle = math.inf
    max_aspect = 0.0
    for local in range(3):
        a = p[:, local]
        b = p[:, (local + 1) % 3]
        c = p[:, (local + 2) % 3]
        u = b - a
        v = c - a
        cosang = (u * v).sum(axis=1) / (np.linalg.norm(u, axis=1) * np.linalg.norm(v, axis=1))
        ang = np.degrees(np.arccos(np.clip(cosang, -1.0, 1.0)))
        min_angle = min(min_angle, float(ang.min()))
    e0 = np.linalg.norm(p[:, 1] - p[:, 0], axis=1)
    e1 = np.linalg.norm(p[:, 2] - p[:, 1], axis=1)
    e2 = np.linalg.norm(p[:, 0] - p[:, 2], axis=1)
    longest = np.maximum(e0, np.maximum(e1, e2))
    perimeter = e0 + e1 + e2
    inradius = 2.0 * mesh.areas / perimeter
    max_aspect = float((longest / (2.0 * inradius)).max())

    seen = set()
    total = 0.0
    for i, j, k in cells:
        for a, b in ((i, j), (j, k), (k, i)):
            key = _edge_key(int(a), int(b))
            if key not in seen:
                seen.add(key)
                total += float(np.linalg.norm(verts[a] - verts[b]))
    return QualityReport(
        min_angle_deg=min_angle,
        max_aspect=max_aspect,
        avg_edge_length=total / len(seen),
        num_vertices=mesh.num_vertices,
        num_cells=mesh.num_cells,
    )


def barycentric(mesh: Mesh, cell_index: int, p) -> np.ndarray:
    """Barycentric coordinates of p in the given cell (may be negative outside)."""
    x, y = as_xy(p)
    o = mesh._origins[cell_index]
    inv = mesh._inv_maps[cell_index]
    dx = x - o[0]
    dy = y - o[1]
    l2 = inv[0, 0] * dx + inv[0, 1] * dy
    l3 = inv[1, 0] * dx + inv[1, 1] * dy
    return np.array([1.0 - l2 - l3, l2, l3])


def locate_point(mesh: Mesh, p, start_cell: int | None = None, tol: float = 1e-12):
    """Find the cell containing p, walking across neighbors from a seed cell.

    Returns ``(cell_index, barycentric_coords)`` or ``None`` when p lies
    outside the mesh (e.g. inside the excluded disk).  Falls back to a
    vectorized scan of all cells when the walk exits through a boundary.
    """
    x, y = as_xy(p)
    if start_cell is None:
        _, nearest = mesh._tree.query([x, y])
        current = int(mesh._vertex_cell[nearest])
    else:
        current = int(start_cell)
    for _ in range(mesh.num_cells):
        lam = barycentric(mesh, current, (x, y))
        worst = int(np.argmin(lam))
        if lam[worst] >= -tol:
            return current, lam
        nxt = int(mesh._neighbors[current, worst])
        if nxt < 0:
            break
        current = nxt
    return _locate_brute(mesh, (x, y), tol)


def _locate_brute(mesh: Mesh, p, tol):
    d = np.asarray(p, dtype=float) - mesh._origins
    l2 = mesh._inv_maps[:, 0, 0] * d[:, 0] + mesh._inv_maps[:, 0, 1] * d[:, 1]
    l3 = mesh._inv_maps[:, 1, 0] * d[:, 0] + mesh._inv_maps[:, 1, 1] * d[:, 1]
    l1 = 1.0 - l2 - l3
    worst = np.minimum(l1, np.minimum(l2, l3))
    best = int(np.argmax(worst))
    if worst[best] >= -tol:
        return best, np.array([l1[best], l2[best], l3[best]])
    return None
