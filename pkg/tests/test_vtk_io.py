import numpy as np

from dirac_cell.fem import nodal_interpolant
from dirac_cell.geometry import build_square_mesh
from dirac_cell.vtk_io import (write_boundary_edges_vtk, write_field_vtk,
                               write_mesh_vtk)


def test_mesh_file_structure(tmp_path):
    mesh = build_square_mesh(1.0, 0.25)
    path = tmp_path / "mesh.vtk"
    write_mesh_vtk(mesh, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "# vtk DataFile Version 3.0"
    assert lines[2] == "ASCII"
    assert lines[3] == "DATASET UNSTRUCTURED_GRID"
    assert lines[4] == f"POINTS {mesh.num_vertices} double"
    cells_at = 5 + mesh.num_vertices
    assert lines[cells_at] == f"CELLS {mesh.num_cells} {4 * mesh.num_cells}"
    assert all(l.startswith("3 ") for l in lines[cells_at + 1: cells_at + 1 + mesh.num_cells])
    types_at = cells_at + 1 + mesh.num_cells
    assert lines[types_at] == f"CELL_TYPES {mesh.num_cells}"
    assert set(lines[types_at + 1:]) == {"5"}


def test_edge_file_carries_tags(tmp_path):
    mesh = build_square_mesh(1.0, 0.25)
    path = tmp_path / "edges.vtk"
    write_boundary_edges_vtk(mesh, path)
    text = path.read_text()
    k = len(mesh.boundary_edges)
    assert f"CELLS {k} {3 * k}" in text
    assert f"CELL_DATA {k}" in text
    assert "SCALARS boundary_tag int 1" in text
    assert text.splitlines().count("1") >= k  # OUTER tag value


def test_field_snapshot_roundtrip_values(tmp_path):
    mesh = build_square_mesh(1.0, 0.25)
    field = nodal_interpolant(mesh, lambda x, y: x * y + 0.125)
    path = tmp_path / "field.vtk"
    write_field_vtk(mesh, field, path)
    lines = path.read_text().splitlines()
    start = lines.index("LOOKUP_TABLE default") + 1
    values = np.array([float(v) for v in lines[start:]])
    assert np.array_equal(values, field)  # 17 significant digits round-trip doubles


def test_rewrite_is_byte_identical(tmp_path):
    mesh = build_square_mesh(1.0, 0.25)
    field = nodal_interpolant(mesh, lambda x, y: np.sin(x) + y)
    a, b = tmp_path / "a.vtk", tmp_path / "b.vtk"
    write_field_vtk(mesh, field, a)
    write_field_vtk(mesh, field, b)
    assert a.read_bytes() == b.read_bytes()
