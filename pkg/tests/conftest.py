from __future__ import annotations

import os

# tracing stays off in tests
os.environ.setdefault("LANGSMITH_TRACING", "false")

import pytest

from complex_core import SimplicialComplex, make_complex, skeleton


@pytest.fixture
def solid_triangle() -> SimplicialComplex:
    return make_complex([[0, 1, 2]], 3)


@pytest.fixture
def hollow_triangle() -> SimplicialComplex:
    return make_complex([[0, 1], [1, 2], [0, 2]], 3)


@pytest.fixture
def tetrahedron_boundary() -> SimplicialComplex:
    return skeleton(make_complex([[0, 1, 2, 3]], 4), 2)


@pytest.fixture
def k4_graph() -> SimplicialComplex:
    return make_complex([[a, b] for a in range(4) for b in range(a + 1, 4)], 4)


@pytest.fixture
def projective_plane() -> SimplicialComplex:
    """Six-vertex RP^2: rational Betti numbers vanish, mod-2 ones do not."""
    triangles = [
        [1, 2, 3], [1, 3, 4], [1, 4, 5], [1, 5, 6], [1, 6, 2],
        [2, 3, 5], [3, 4, 6], [4, 5, 2], [5, 6, 3], [6, 2, 4],
    ]
    return make_complex([[v - 1 for v in t] for t in triangles], 6)
