import pytest

from dirac_cell.geometry import CellSpec, build_punctured_square_mesh, build_square_mesh

SIDE = 10.0
H = 0.2495
CENTER = (5.0, 5.0)
RADIUS = 0.25


@pytest.fixture(scope="session")
def cell():
    """Default secretion-and-uptake cell."""
    return CellSpec(center=CENTER, radius=RADIUS, phi=1.0, uptake=1.0)


@pytest.fixture(scope="session")
def cell_no_uptake():
    return CellSpec(center=CENTER, radius=RADIUS, phi=1.0, uptake=0.0)


@pytest.fixture(scope="session")
def tilde_mesh(cell):
    return build_punctured_square_mesh(SIDE, H, cell)


@pytest.fixture(scope="session")
def full_mesh():
    return build_square_mesh(SIDE, H)
