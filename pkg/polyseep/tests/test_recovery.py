import unittest

import numpy as np
import pytest

from polyseep.element import form_element, form_elements
from polyseep.exceptions import LocationError
from polyseep.mesh import QuadtreeSpec, RefineRegion, build_quadtree_mesh
from polyseep.model import Material, MonitorPoint
from polyseep.recovery import (
    Location,
    ModalParticipation,
    PointLocator,
    element_flux_vectors,
    monitor_sampler,
    recover_interior,
    sample_flux,
    sample_point,
)
from polyseep.solver import solve_model
from polyseep.tests.support import PENTAGON, column, square_pair
from polyseep.verification.fem import form_fem_elements
from polyseep.verification.suites import UNIT_SQUARE, prescribed_model


def _linear(points, a=0.3, b=1.5, c=-0.7):
    pts = np.asarray(points, dtype=float)
    return a + b * pts[..., 0] + c * pts[..., 1]


class RecoverInteriorTestCase(unittest.TestCase):
    def setUp(self):
        self.material = Material(2.0, 3.0)
        self.op = form_element(PENTAGON, self.material)
        self.center = np.asarray(self.op.geometry.scaling_center)

    def _point(self, xi, edge, eta):
        a, b = self.op.geometry.edges()[edge]
        rel = self.op.geometry.coords
        n = 0.5 * np.array([1.0 - eta, 1.0 + eta])
        return self.center + xi * (n[0] * rel[a] + n[1] * rel[b])

    def test_boundary_nodes(self):
        heads = np.array([1.0, -2.0, 0.5, 3.0, 0.0])
        for k in range(5):
            h, _ = recover_interior(self.op, heads, 1.0, k, -1.0)
            assert h == pytest.approx(heads[k], abs=1e-10)
        part = ModalParticipation.from_heads(self.op, heads)
        assert np.allclose(part.boundary_heads(self.op), heads, atol=1e-12)

    def test_linear_field_reproduced(self):
        heads = _linear(PENTAGON)
        flux = -self.material.conductivity() @ np.array([1.5, -0.7])
        for xi, edge, eta in ((0.5, 0, 0.0), (0.25, 3, 0.7),
                              (0.9, 4, -0.3), (1.0, 2, 0.5)):
            h, q = recover_interior(self.op, heads, xi, edge, eta)
            assert h == pytest.approx(_linear(self._point(xi, edge, eta)),
                                      abs=1e-10)
            assert np.allclose(q, flux, atol=1e-9)

    def test_scaling_center(self):
        heads = _linear(PENTAGON)
        h, q = recover_interior(self.op, heads, 0.0, 0, -1.0)
        assert h == pytest.approx(_linear(self.center), abs=1e-10)
        assert np.allclose(q, -self.material.conductivity() @
                           np.array([1.5, -0.7]), atol=1e-9)

    def test_constant_field(self):
        h, q = recover_interior(self.op, np.full(5, 4.0), 0.3, 1, 0.2)
        assert h == pytest.approx(4.0, abs=1e-12)
        assert np.allclose(q, 0.0, atol=1e-10)

    def test_outside_radial_range(self):
        for xi in (-0.1, 1.5):
            with pytest.raises(LocationError):
                recover_interior(self.op, np.zeros(5), xi, 0, 0.0)


class PointLocatorTestCase(unittest.TestCase):
    def setUp(self):
        self.locator = PointLocator(square_pair())

    def test_interior(self):
        loc = self.locator.locate((0.75, 0.5))
        assert (loc.element_id, loc.edge) == (1, 1)
        assert loc.xi == pytest.approx(0.5, abs=1e-14)
        assert loc.eta == pytest.approx(0.0, abs=1e-14)

    def test_center(self):
        assert self.locator.locate((1.5, 0.5)) == Location(2, 0.0, 0, -1.0)

    def test_shared_edge_lowest_id(self):
        assert self.locator.locate((1.0, 0.25)).element_id == 1

    def test_corner(self):
        loc = self.locator.locate((2.0, 1.0))
        assert loc.element_id == 2
        assert loc.xi == pytest.approx(1.0)

    def test_outside(self):
        with pytest.raises(LocationError):
            self.locator.locate((2.5, 0.5))
        with pytest.raises(LocationError):
            self.locator.locate((1.0, -1e-3))


class SamplingTestCase(unittest.TestCase):
    def setUp(self):
        self.model = column(top=10.0, bottom=0.0)
        self.solution = solve_model(self.model)

    def test_head_and_flux(self):
        mesh = self.model.mesh
        ops = self.solution.operators
        heads = self.solution.steady.heads
        assert sample_point(self.solution.steady, mesh, ops,
                            (0.3, 1.4)) == pytest.approx(7.0, abs=1e-10)
        assert sample_point(heads, mesh, ops, (1.0, 2.0)) == \
            pytest.approx(10.0, abs=1e-10)
        assert np.allclose(sample_flux(heads, mesh, ops, (0.6, 0.2)),
                           [0.0, -5.0], atol=1e-10)

    def test_element_flux_vectors(self):
        mesh = self.model.mesh
        vectors = element_flux_vectors(mesh, self.solution.operators,
                                       self.solution.steady)
        assert vectors.shape == (2, 2)
        assert np.allclose(vectors, [[0.0, -5.0], [0.0, -5.0]], atol=1e-10)

    def test_bilinear_operators(self):
        mesh = self.model.mesh
        ops = form_fem_elements(self.model)
        heads = self.solution.steady.heads
        assert sample_point(heads, mesh, ops, (0.3, 1.4)) == \
            pytest.approx(7.0, abs=1e-10)
        assert np.allclose(element_flux_vectors(mesh, ops, heads),
                           [[0.0, -5.0], [0.0, -5.0]], atol=1e-10)

    def test_monitor_sampler(self):
        mesh = self.model.mesh
        monitors = [MonitorPoint("low", 0.5, 0.5),
                    MonitorPoint("high", 0.2, 1.9)]
        bind = monitor_sampler(mesh, monitors)
        sample = bind(form_elements(self.model))
        values = sample(self.solution.steady.heads)
        assert values["low"] == pytest.approx(2.5, abs=1e-10)
        assert values["high"] == pytest.approx(9.5, abs=1e-10)

    def test_monitor_outside_mesh(self):
        bind = monitor_sampler(self.model.mesh,
                               [MonitorPoint("far", 5.0, 5.0)])
        with pytest.raises(LocationError):
            bind(self.solution.operators)


class HarmonicRecoveryTestCase(unittest.TestCase):
    def test_quadratic_harmonic(self):
        mesh = build_quadtree_mesh(QuadtreeSpec(
            UNIT_SQUARE, max_depth=5, min_depth=4,
            refine_regions=[RefineRegion([(0.25, 0.25)], 5)]))
        assert any(len(el.node_ids) > 4 for el in mesh.elements)
        solution = solve_model(prescribed_model(
            mesh, lambda x, y: x * x - y * y))
        locator = PointLocator(mesh)
        rng = np.random.RandomState(7)
        worst = 0.0
        for x, y in rng.uniform(0.0, 1.0, size=(200, 2)):
            h = sample_point(solution.steady, mesh, solution.operators,
                             (x, y), locator)
            worst = max(worst, abs(h - (x * x - y * y)))
        # |h| reaches 1 on the unit square
        assert worst < 5e-3
