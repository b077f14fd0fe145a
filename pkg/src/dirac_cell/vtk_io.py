"""Legacy ASCII VTK export for meshes, boundary tags, and nodal fields.

Numbers are written with 17 significant digits and LF line endings so that
repeated exports of identical data are byte-identical.
"""

from __future__ import annotations

from .geometry import Mesh


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _write_header(f, title: str) -> None:
    f.write("# vtk DataFile Version 3.0\n")
    f.write(f"{title}\n")
    f.write("ASCII\n")
    f.write("DATASET UNSTRUCTURED_GRID\n")


def _write_points(f, mesh: Mesh) -> None:
    f.write(f"POINTS {mesh.num_vertices} double\n")
    for x, y in mesh.vertices:
        f.write(f"{_fmt(x)} {_fmt(y)} 0\n")


def write_mesh_vtk(mesh: Mesh, path, title: str = "triangle mesh") -> None:
    """Triangle connectivity (VTK cell type 5)."""
    with open(path, "w", newline="\n") as f:
        _write_header(f, title)
        _write_points(f, mesh)
        m = mesh.num_cells
        f.write(f"CELLS {m} {4 * m}\n")
        for i, j, k in mesh.cells:
            f.write(f"3 {i} {j} {k}\n")
        f.write(f"CELL_TYPES {m}\n")
        for _ in range(m):
            f.write("5\n")


def write_boundary_edges_vtk(mesh: Mesh, path, title: str = "boundary edges") -> None:
    """Companion file: boundary edges (VTK cell type 3) with integer tag data."""
    with open(path, "w", newline="\n") as f:
        _write_header(f, title)
        _write_points(f, mesh)
        k = len(mesh.boundary_edges)
        f.write(f"CELLS {k} {3 * k}\n")
        for i, j in mesh.boundary_edges:
            f.write(f"2 {i} {j}\n")
        f.write(f"CELL_TYPES {k}\n")
        for _ in range(k):
            f.write("3\n")
        f.write(f"CELL_DATA {k}\n")
        f.write("SCALARS boundary_tag int 1\n")
        f.write("LOOKUP_TABLE default\n")
        for tag in mesh.boundary_tags:
            f.write(f"{int(tag)}\n")


def write_field_vtk(mesh: Mesh, field, path, name: str = "concentration",
                    title: str = "field snapshot") -> None:
    """Mesh plus one nodal scalar array."""
    if len(field) != mesh.num_vertices:
        raise ValueError(f"field has {len(field)} entries for {mesh.num_vertices} vertices")
    with open(path, "w", newline="\n") as f:
        _write_header(f, title)
        _write_points(f, mesh)
        m = mesh.num_cells
        f.write(f"CELLS {m} {4 * m}\n")
        for i, j, k in mesh.cells:
            f.write(f"3 {i} {j} {k}\n")
        f.write(f"CELL_TYPES {m}\n")
        for _ in range(m):
            f.write("5\n")
        f.write(f"POINT_DATA {mesh.num_vertices}\n")
        f.write(f"SCALARS {name} double 1\n")
        f.write("LOOKUP_TABLE default\n")
        for v in field:
            f.write(f"{_fmt(v)}\n")
