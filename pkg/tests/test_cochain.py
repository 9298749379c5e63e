from __future__ import annotations

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings as hsettings

from cochain import (
    Cochain,
    CochainShapeError,
    NotPureError,
    WeightedCochainSpace,
    adjoint,
    coboundary,
    harmonic_betti,
    inner_product,
    laplacian_matrix,
    local_identities,
    localize,
    projection_norm_audit,
    projections,
    up_laplacian_matrix,
    up_operator_matrix,
)
from complex_core import make_complex, skeleton
from homology import betti
from strategies import pure_complexes


@pytest.fixture
def complete_2_skeleton():
    return skeleton(make_complex([list(range(5))], 5), 2)


class TestSpace:
    def test_not_pure(self, hollow_triangle):
        with pytest.raises(NotPureError):
            WeightedCochainSpace(hollow_triangle, 2)
        with pytest.raises(NotPureError):
            WeightedCochainSpace(make_complex([[0, 1, 2], [3, 4]], 5), 2)

    def test_weights(self, tetrahedron_boundary):
        space = WeightedCochainSpace(tetrahedron_boundary, 2)
        assert space.m[()] == 4
        assert space.weights(0).tolist() == [3.0] * 4
        assert space.weights(1).tolist() == [2.0] * 6
        assert space.weights(2).tolist() == [1.0] * 4

    @hsettings(max_examples=80, deadline=None)
    @given(pure_complexes())
    def test_weight_identity(self, case):
        X, D = case
        space = WeightedCochainSpace(X, D)
        assert space.weight_identity_holds()
        assert all(space.m[s] >= 1 for s in X)

    def test_wrong_shape(self, solid_triangle):
        space = WeightedCochainSpace(solid_triangle, 2)
        with pytest.raises(CochainShapeError):
            Cochain(space, 1, np.zeros(2))


class TestInnerProduct:
    def test_indicator(self, tetrahedron_boundary):
        space = WeightedCochainSpace(tetrahedron_boundary, 2)
        phi = Cochain(space, 2, np.eye(4)[1])
        assert phi.norm_sq() == pytest.approx(1.0)

    def test_zero(self, solid_triangle):
        space = WeightedCochainSpace(solid_triangle, 2)
        assert space.zeros(1).norm_sq() == 0.0

    def test_degree_minus_one(self, tetrahedron_boundary):
        space = WeightedCochainSpace(tetrahedron_boundary, 2)
        phi = Cochain(space, -1, np.array([2.0]))
        psi = Cochain(space, -1, np.array([3.0]))
        assert inner_product(phi, psi) == pytest.approx(6.0 * 4)

    def test_mismatched_degrees(self, solid_triangle):
        space = WeightedCochainSpace(solid_triangle, 2)
        with pytest.raises(CochainShapeError):
            inner_product(space.zeros(0), space.zeros(1))

    def test_value_at_sign(self, solid_triangle):
        space = WeightedCochainSpace(solid_triangle, 2)
        phi = Cochain(space, 1, np.array([1.0, 2.0, 3.0]))
        assert phi.value_at((0, 2)) == 2.0
        assert phi.value_at((2, 0)) == -2.0

    def test_index_built_once(self, solid_triangle):
        space = WeightedCochainSpace(solid_triangle, 2)
        phi = Cochain(space, 1, np.array([1.0, 2.0, 3.0]))
        first = space.index(1)
        assert phi.value_at((1, 2)) == 3.0
        assert space.index(1) is first
        assert dict(first) == {(0, 1): 0, (0, 2): 1, (1, 2): 2}
        with pytest.raises(TypeError):
            first[(0, 1)] = 5


class TestOperators:
    def test_constant_extension(self, solid_triangle):
        space = WeightedCochainSpace(solid_triangle, 2)
        phi = Cochain(space, -1, np.array([1.5]))
        assert coboundary(phi).values.tolist() == [1.5, 1.5, 1.5]

    def test_edge_difference(self, solid_triangle):
        space = WeightedCochainSpace(solid_triangle, 2)
        phi = Cochain(space, 0, np.array([1.0, 4.0, 9.0]))
        # edges (0,1), (0,2), (1,2)
        assert coboundary(phi).values.tolist() == [3.0, 8.0, 5.0]

    @hsettings(max_examples=60, deadline=None)
    @given(pure_complexes())
    def test_d_squared_and_adjoint(self, case):
        X, D = case
        space = WeightedCochainSpace(X, D)
        rng = np.random.default_rng(0)
        for k in range(-1, D - 1):
            phi = space.random_cochain(k, rng)
            assert np.max(np.abs(coboundary(coboundary(phi)).values), initial=0.0) < 1e-12
        for k in range(-1, D):
            phi = space.random_cochain(k, rng)
            psi = space.random_cochain(k + 1, rng)
            lhs = inner_product(coboundary(phi), psi)
            rhs = inner_product(phi, adjoint(psi))
            assert abs(lhs - rhs) < 1e-10 * max(1.0, abs(lhs))

    def test_adjoint_of_zero(self, tetrahedron_boundary):
        space = WeightedCochainSpace(tetrahedron_boundary, 2)
        assert not adjoint(space.zeros(2)).values.any()

    def test_up_laplacian_is_graph_laplacian(self, k4_graph):
        space = WeightedCochainSpace(k4_graph, 1)
        expected = nx.normalized_laplacian_matrix(nx.complete_graph(4), nodelist=range(4)).toarray()
        assert np.allclose(up_laplacian_matrix(space, 0), expected)

    def test_up_operator_on_full_simplex(self):
        X = make_complex([[0, 1, 2]], 3)
        space = WeightedCochainSpace(X, 2)
        L = up_operator_matrix(space, 1)
        # m = 1 everywhere on edges and the triangle: L = d^T d
        d = space.d_matrix(1)
        assert np.allclose(L, d.T @ d)

    def test_laplacian_symmetric_and_nonnegative(self, tetrahedron_boundary):
        space = WeightedCochainSpace(tetrahedron_boundary, 2)
        for k in range(3):
            result = laplacian_matrix(space, k)
            assert np.allclose(result.matrix, result.matrix.T)
            assert result.eigenvalues.min() > -1e-10
            assert np.trace(result.matrix) > 0

    def test_laplacian_degree_range(self, solid_triangle):
        with pytest.raises(CochainShapeError):
            laplacian_matrix(WeightedCochainSpace(solid_triangle, 2), 3)


class TestHarmonicBetti:
    def test_hollow_triangle(self, hollow_triangle):
        space = WeightedCochainSpace(hollow_triangle, 1)
        assert harmonic_betti(space, 1) == 1
        assert harmonic_betti(space, 0) == 0

    def test_tetrahedron_boundary(self, tetrahedron_boundary):
        assert harmonic_betti(WeightedCochainSpace(tetrahedron_boundary, 2), 2) == 1

    def test_solid_triangle(self, solid_triangle):
        assert harmonic_betti(WeightedCochainSpace(solid_triangle, 2), 1) == 0

    @hsettings(max_examples=200, deadline=None)
    @given(pure_complexes())
    def test_matches_rank_betti(self, case):
        X, D = case
        space = WeightedCochainSpace(X, D)
        for k in range(D + 1):
            assert harmonic_betti(space, k) == betti(X, k, "exact_rational")


class TestLocalization:
    def test_localize_values(self, solid_triangle):
        space = WeightedCochainSpace(solid_triangle, 2)
        phi = Cochain(space, 1, np.array([1.0, 2.0, 3.0]))
        local = localize(phi, (1,))
        # lk(1) = {0, 2}; phi(1,0) = -phi(0,1), phi(1,2)
        assert local.values.tolist() == [-1.0, 3.0]

    def test_localize_degree(self, solid_triangle):
        space = WeightedCochainSpace(solid_triangle, 2)
        with pytest.raises(CochainShapeError):
            localize(space.zeros(0), (1,))

    @hsettings(max_examples=100, deadline=None)
    @given(pure_complexes(max_n=7))
    def test_local_identities(self, case):
        X, D = case
        space = WeightedCochainSpace(X, D)
        phi = space.random_cochain(D - 1, np.random.default_rng(7))
        assert local_identities(phi).max_residual() < 1e-8

    def test_projections_partition(self, complete_2_skeleton):
        space = WeightedCochainSpace(complete_2_skeleton, 2)
        proj = projections(space, (0,))
        n = space.link_space((0,)).dim(0)
        assert np.allclose(proj.pi1 + proj.pi2 + proj.pi3, np.eye(n))
        assert np.allclose(proj.pi1 @ proj.pi1, proj.pi1)
        # links are K_4: nothing between the constants and lambda = 4/3
        assert np.allclose(proj.pi2, 0.0)

    def test_projection_norm_audit(self, complete_2_skeleton):
        space = WeightedCochainSpace(complete_2_skeleton, 2)
        rng = np.random.default_rng(5)
        for _ in range(20):
            audit = projection_norm_audit(space, space.random_cochain(1, rng))
            assert audit.spectral_excess == pytest.approx(4.0 / 3.0 - 0.5)
            assert audit.holds
