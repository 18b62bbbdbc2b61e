import sys

import numpy as np
import pytest

from dmrfem import assemble, generate_structured_mesh, Triangulation


@pytest.fixture(scope="session")
def meshes():
    return {n: generate_structured_mesh(n) for n in (2, 4, 8, 16, 32)}


@pytest.fixture(scope="session")
def ops_by_n(meshes):
    return {n: assemble(m) for n, m in meshes.items()}


@pytest.fixture(scope="session")
def ops8(ops_by_n):
    return ops_by_n[8]


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def obtuse_pair(angle_deg=100.0):
    """Two triangles on a shared edge, each with apex angle ``angle_deg``.

    The shared-edge nodes are free dofs; the apexes are boundary nodes.
    """
    half = np.radians(angle_deg) / 2
    height = 1.0 / np.tan(half)
    nodes = np.array([[-1.0, 0.0], [1.0, 0.0], [0.0, height], [0.0, -height]])
    # 2D edge (-1,0)-(1,0); apexes at (0, +-height)
    elements = np.array([[0, 1, 2], [1, 0, 3]])
    boundary = np.array([False, False, True, True])
    return Triangulation(nodes, elements, boundary)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(results):
        terminalreporter.write_line(results[k])
