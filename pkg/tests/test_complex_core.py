from __future__ import annotations

import pytest
from hypothesis import assume, given, settings as hsettings

from complex_core import (
    DimensionError,
    MalformedSimplexError,
    SimplexNotFoundError,
    clique_complex,
    dumps,
    empty_complex,
    f_vector,
    facets_of,
    from_graph,
    is_downward_closed,
    link,
    load,
    loads,
    make_complex,
    make_simplex,
    pure_dimensionalize,
    save,
    skeleton,
    to_graph,
)
from homology import betti
from spectral import gamma_sum
from strategies import complexes


class TestSimplex:
    def test_sorted_representative(self):
        assert make_simplex([2, 0, 1]) == (0, 1, 2)

    def test_duplicates_rejected(self):
        with pytest.raises(MalformedSimplexError):
            make_simplex([0, 1, 1])

    def test_negative_rejected(self):
        with pytest.raises(MalformedSimplexError):
            make_simplex([-1, 2])

    def test_facet_order(self):
        assert facets_of((0, 1, 2)) == [(1, 2), (0, 2), (0, 1)]


class TestMakeComplex:
    def test_closure_of_triangle(self, solid_triangle):
        assert f_vector(solid_triangle).as_list() == [3, 3, 1]

    def test_no_auto_vertices(self):
        X = make_complex([], 3)
        assert X.is_empty()
        assert f_vector(X).as_list() == []

    def test_explicit_singletons(self):
        X = make_complex([[0], [1], [2]], 3)
        assert f_vector(X).as_list() == [3]

    def test_hollow_triangle(self, hollow_triangle):
        assert f_vector(hollow_triangle).as_list() == [3, 3]

    def test_out_of_range(self):
        with pytest.raises(MalformedSimplexError):
            make_complex([[0, 3]], 3)

    def test_duplicate_vertex(self):
        with pytest.raises(MalformedSimplexError):
            make_complex([[0, 0, 1]], 3)

    def test_f_minus_one(self, solid_triangle):
        fv = f_vector(solid_triangle)
        assert fv.f(-1) == 1
        assert fv.f(5) == 0

    def test_empty_complex(self):
        assert f_vector(empty_complex(4)).as_list() == []

    @given(complexes())
    def test_downward_closed_and_idempotent(self, X):
        assert is_downward_closed(X)
        assert make_complex(list(X), X.n_vertices) == X


class TestLink:
    def test_vertex_link(self, solid_triangle):
        assert link(solid_triangle, (0,)) == make_complex([[1, 2]], 3)

    def test_empty_link(self, hollow_triangle):
        assert link(hollow_triangle, (0, 1)).is_empty()

    def test_two_isolated_vertices(self):
        X = make_complex([[0, 1, 2], [0, 1, 3]], 4)
        lk = link(X, (0, 1))
        assert lk.simplices(0) == ((2,), (3,))
        assert lk.dim == 0

    def test_empty_simplex(self, solid_triangle):
        assert link(solid_triangle, ()) is solid_triangle

    def test_missing_simplex(self, hollow_triangle):
        with pytest.raises(SimplexNotFoundError):
            link(hollow_triangle, (0, 1, 2))

    @given(complexes())
    def test_links_are_closed(self, X):
        for tau in X.simplices(0):
            assert is_downward_closed(link(X, tau))


class TestSkeleton:
    def test_triangle_to_graph(self, solid_triangle, hollow_triangle):
        assert skeleton(solid_triangle, 1) == hollow_triangle

    def test_above_dimension(self, solid_triangle):
        assert skeleton(solid_triangle, 5) == solid_triangle

    def test_tetrahedron(self, tetrahedron_boundary):
        assert f_vector(tetrahedron_boundary).as_list() == [4, 6, 4]

    def test_negative(self, solid_triangle):
        with pytest.raises(DimensionError):
            skeleton(solid_triangle, -1)

    @given(complexes())
    def test_idempotent(self, X):
        for k in range(max(X.dim, 0) + 1):
            assert skeleton(skeleton(X, k), k) == skeleton(X, k)


class TestCliqueComplex:
    def test_k3(self, hollow_triangle, solid_triangle):
        assert clique_complex(hollow_triangle) == solid_triangle

    def test_path(self):
        path = make_complex([[0, 1], [1, 2]], 3)
        assert clique_complex(path) == path

    def test_k4(self, k4_graph):
        assert f_vector(clique_complex(k4_graph)).as_list() == [4, 6, 4, 1]

    def test_rejects_two_dimensional(self, solid_triangle):
        with pytest.raises(DimensionError):
            clique_complex(solid_triangle)

    def test_graph_bridge(self, k4_graph):
        assert from_graph(to_graph(k4_graph), 4) == k4_graph


class TestPureDimensionalize:
    def test_edge_unchanged(self):
        X = make_complex([[0, 1]], 2)
        assert pure_dimensionalize(X, 1) == X

    def test_hollow_triangle(self, hollow_triangle):
        Y = pure_dimensionalize(hollow_triangle, 2)
        assert f_vector(Y).as_list() == [6, 9, 3]
        assert set(Y.provenance) == {3, 4, 5}
        assert sorted(Y.provenance.values()) == [(0, 1), (0, 2), (1, 2)]
        assert betti(Y, 1) == betti(hollow_triangle, 1) == 1

    def test_solid_triangle(self, solid_triangle):
        assert pure_dimensionalize(solid_triangle, 2) == solid_triangle

    def test_complexes_with_provenance_are_hashable(self, hollow_triangle):
        Y = pure_dimensionalize(hollow_triangle, 2)
        again = pure_dimensionalize(hollow_triangle, 2)
        assert Y.provenance
        assert hash(Y) == hash(again)
        assert len({Y, again, hollow_triangle}) == 2

    def test_too_small(self):
        X = make_complex([[0], [1]], 2)
        with pytest.raises(DimensionError):
            pure_dimensionalize(X, 2)

    @hsettings(max_examples=60, deadline=None)
    @given(complexes())
    def test_betti_and_purity(self, X):
        for D in (1, 2, 3):
            if X.dim < D - 1:
                continue
            Y = pure_dimensionalize(X, D)
            covered = {f for top in Y.simplices(D) for f in make_complex([top], Y.n_vertices)}
            assert set(Y) == covered
            assert betti(Y, D - 1) == betti(X, D - 1)

    @hsettings(max_examples=40, deadline=None)
    @given(complexes())
    def test_gamma_sum_preserved(self, X):
        assume(X.dim >= 1)
        for D in (2, 3):
            if X.dim < D - 1:
                continue
            Y = pure_dimensionalize(X, D)
            for alpha in (0.3, 0.5, 1.0 - 1.0 / D):
                assert gamma_sum(X, D, alpha).bound == gamma_sum(Y, D, alpha).bound


class TestTextFormat:
    def test_round_trip(self, tetrahedron_boundary, tmp_path):
        path = tmp_path / "tetra.txt"
        save(tetrahedron_boundary, path)
        assert load(path) == tetrahedron_boundary

    def test_header(self, solid_triangle):
        assert dumps(solid_triangle).splitlines()[0] == "n 3"

    def test_missing_header(self):
        with pytest.raises(MalformedSimplexError):
            loads("0 1\n1 2\n")

    def test_isolated_vertices_survive(self):
        X = make_complex([[0], [1, 2]], 5)
        assert loads(dumps(X)) == X
