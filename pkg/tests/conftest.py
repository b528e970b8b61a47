import math
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from willflow.generators import gen_ellipsoid, gen_icosphere, gen_torus
from willflow.mesh import TriangleMesh

settings.register_profile(
    "willflow", deadline=None, max_examples=25, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("willflow")


def tetrahedron(edge=1.0):
    """Regular tetrahedron, outward counterclockwise faces."""
    p = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float)
    p *= edge / (2.0 * math.sqrt(2.0))
    return TriangleMesh(p, [[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]])


def cube():
    p = np.array(
        [[x, y, z] for x in (-1.0, 1.0) for y in (-1.0, 1.0) for z in (-1.0, 1.0)]
    )
    # vertex index = 4*ix + 2*iy + iz
    quads = [
        (0, 1, 3, 2),  # x = -1
        (4, 6, 7, 5),  # x = +1
        (0, 4, 5, 1),  # y = -1
        (2, 3, 7, 6),  # y = +1
        (0, 2, 6, 4),  # z = -1
        (1, 5, 7, 3),  # z = +1
    ]
    faces = []
    for a, b, c, d in quads:
        faces += [(a, b, c), (a, c, d)]
    return TriangleMesh(p, faces)


@pytest.fixture(scope="session")
def ico3():
    return gen_icosphere(3)


@pytest.fixture(scope="session")
def ico4():
    return gen_icosphere(4)


@pytest.fixture(scope="session")
def ellipsoid211():
    return gen_ellipsoid(2.0, 1.0, 1.0, 3)


@pytest.fixture(scope="session")
def torus21():
    return gen_torus(2.0, 1.0, 32, 32)


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    if acceptance is None or not acceptance.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(acceptance.RESULTS):
        terminalreporter.write_line(acceptance.RESULTS[n])
