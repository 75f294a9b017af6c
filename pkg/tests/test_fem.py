"""
Tests for the shared finite-element machinery.
"""
from math import factorial

import numpy as np
import pytest
from scipy import sparse as sp

from app.errors import MeshError, SolverError
from app.fem.assembly import (
    SparseAssembler, assemble_vector, cell_quadrature, chunk_ranges, map_chunks,
)
from app.fem.elements import p2_gradients, p2_values, tet_geometry
from app.fem.linear import solve_constrained
from app.fem.quadrature import gauss_legendre, tet_rule, triangle_rule
from app.fem.spaces import build_p2_space

UNIT_TET = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])


class TestQuadrature:
    """Collapsed Gauss-Jacobi rules."""

    @pytest.mark.parametrize("degree", [1, 2, 4, 6])
    def test_tet_weights(self, degree):
        rule = tet_rule(degree)
        assert rule.weights.sum() == pytest.approx(1.0 / 6.0, abs=1e-15)
        assert np.allclose(rule.points.sum(axis=1), 1.0)

    @pytest.mark.parametrize("powers", [(1, 0, 0), (2, 1, 0), (1, 1, 2), (0, 0, 4)])
    def test_tet_monomials(self, powers):
        a, b, c = powers
        rule = tet_rule(4)
        lam = rule.points
        value = np.sum(rule.weights * lam[:, 1] ** a * lam[:, 2] ** b * lam[:, 3] ** c)
        exact = factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + 3)
        assert value == pytest.approx(exact, rel=1e-13)

    def test_triangle_monomials(self):
        rule = triangle_rule(4)
        lam = rule.points
        assert rule.weights.sum() == pytest.approx(0.5, abs=1e-15)
        value = np.sum(rule.weights * lam[:, 1] ** 2 * lam[:, 2] ** 2)
        assert value == pytest.approx(2.0 * 2.0 / factorial(6), rel=1e-13)

    def test_gauss_legendre_interval(self):
        nodes, weights = gauss_legendre(3, 1.0, 3.0)
        assert weights.sum() == pytest.approx(2.0)
        assert np.sum(weights * nodes ** 5) == pytest.approx((3.0 ** 6 - 1.0) / 6.0)


class TestElements:
    """P1 geometry and the P2 basis."""

    def test_unit_tet_geometry(self):
        grads, volume = tet_geometry(UNIT_TET[None])
        assert volume[0] == pytest.approx(1.0 / 6.0)
        assert np.allclose(grads[0, 1:], np.eye(3))
        assert np.allclose(grads[0, 0], [-1.0, -1.0, -1.0])

    def test_degenerate_tet(self):
        flat = UNIT_TET.copy()
        flat[3] = [0.5, 0.5, 0.0]
        with pytest.raises(MeshError):
            tet_geometry(flat[None])

    def test_p2_partition_of_unity(self):
        bary = tet_rule(4).points
        assert np.allclose(p2_values(bary).sum(axis=-1), 1.0)
        grads, _ = tet_geometry(UNIT_TET[None])
        assert np.allclose(p2_gradients(bary, grads).sum(axis=2), 0.0)

    def test_p2_nodal_property(self):
        vertex_bary = np.eye(4)
        values = p2_values(vertex_bary)
        assert np.allclose(values[:, :4], np.eye(4))
        assert np.allclose(values[:, 4:], 0.0)


class TestP2Space:
    """Edge numbering and interpolation."""

    def test_single_tet(self):
        space = build_p2_space(UNIT_TET, np.array([[0, 1, 2, 3]]))
        assert space.n_nodes == 10
        assert np.allclose(space.coordinates[space.edge_nodes(np.array([[3, 0]]))],
                           [[0.0, 0.0, 0.5]])

    def test_quadratic_reproduced(self):
        space = build_p2_space(UNIT_TET, np.array([[0, 1, 2, 3]]))
        quadratic = lambda x: 1.0 + x[..., 0] * x[..., 1] - 2.0 * x[..., 2] ** 2  # noqa: E731
        nodal = quadratic(space.coordinates)
        rule = tet_rule(4)
        points = rule.points @ UNIT_TET
        values = space.evaluate(nodal, np.array([0]), rule.points)
        assert np.allclose(values[0], quadratic(points))

    def test_shared_edges(self):
        vertices = np.vstack([UNIT_TET, [[1.0, 1.0, 1.0]]])
        cells = np.array([[0, 1, 2, 3], [1, 2, 3, 4]])
        space = build_p2_space(vertices, cells)
        # 6 + 6 edges, three shared
        assert len(space.edges) == 9
        assert space.n_nodes == 14


class TestAssembly:
    """COO accumulation and ordered chunking."""

    def test_duplicates_summed(self):
        assembler = SparseAssembler((3, 3))
        local = np.ones((2, 2, 2))
        assembler.add_local(np.array([[0, 1], [1, 2]]), np.array([[0, 1], [1, 2]]), local)
        matrix = assembler.tocsr().toarray()
        assert matrix[1, 1] == 2.0
        assert matrix[0, 2] == 0.0
        assert matrix.sum() == 8.0

    def test_empty(self):
        assert SparseAssembler((4, 4)).tocsr().nnz == 0

    def test_assemble_vector(self):
        vector = assemble_vector(np.array([[0, 2], [2, 3]]), np.array([[1.0, 2.0], [3.0, 4.0]]), 5)
        assert np.array_equal(vector, [1.0, 0.0, 5.0, 4.0, 0.0])

    def test_chunk_ranges(self):
        assert chunk_ranges(5, 2) == [(0, 2), (2, 4), (4, 5)]
        assert chunk_ranges(0, 3) == []

    def test_map_chunks_keeps_order(self):
        serial = map_chunks(lambda s: list(range(s.start, s.stop)), 100, chunk_size=7, workers=1)
        threaded = map_chunks(lambda s: list(range(s.start, s.stop)), 100, chunk_size=7, workers=4)
        assert serial == threaded
        assert sum(serial, []) == list(range(100))

    def test_cell_quadrature_volume(self, coarse_mesh):
        cq = cell_quadrature(coarse_mesh.vertices, coarse_mesh.cells, tet_rule(2))
        assert cq.jxw.sum() == pytest.approx(coarse_mesh.volume(), rel=1e-12)


class TestLinearSolve:
    """Direct solves with eliminated unknowns."""

    def test_prescribed_values(self):
        matrix = sp.csr_matrix(np.array([[2.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 2.0]]))
        result = solve_constrained(matrix, np.zeros(3), np.array([0, 2]), np.array([1.0, 3.0]))
        assert np.allclose(result.solution, [1.0, 2.0, 3.0])
        assert result.residual < 1e-12

    def test_zero_rhs(self):
        matrix = sp.identity(3, format="csr")
        result = solve_constrained(matrix, np.zeros(3), np.array([], dtype=int), np.array([]))
        assert np.array_equal(result.solution, np.zeros(3))
        assert result.residual == 0.0

    def test_singular(self):
        matrix = sp.csr_matrix(np.array([[1.0, 1.0], [1.0, 1.0]]))
        with pytest.raises(SolverError):
            solve_constrained(matrix, np.array([1.0, 2.0]), np.array([], dtype=int), np.array([]))
