import numpy as np
import pytest

from quadcurl import Mesh, generate_cube_mesh


@pytest.fixture(scope="session")
def ref_tet_mesh():
    """Single reference tetrahedron."""
    verts = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0],
                      [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    return Mesh(verts, np.array([[0, 1, 2, 3]]))


@pytest.fixture(scope="session")
def cube2():
    return generate_cube_mesh(2)


@pytest.fixture(scope="session")
def cube3():
    return generate_cube_mesh(3)
