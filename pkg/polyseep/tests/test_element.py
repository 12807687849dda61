import os
import shutil
import tempfile
import unittest

import numpy as np
import pytest

from polyseep.element import (
    CoefficientMatrices,
    ElementCache,
    ScaledBoundaryGeometry,
    build_hamiltonian,
    dump_element,
    element_coefficients,
    form_element,
    form_elements,
    mass_matrix,
    mass_matrix_sylvester,
    modal_decomposition,
    steady_stiffness,
)
from polyseep.exceptions import ElementDecompositionError, GeometryError
from polyseep.mesh import polygon_area_centroid, rectangle_mesh
from polyseep.model import DirichletSet, Material, SeepageModel
from polyseep.solver import solve_model
from polyseep.tests.support import PENTAGON, UNIT_SQUARE
from polyseep.verification.fem import bilinear_quad

Q4_UNIT_STIFFNESS = np.array([
    [4.0, -1.0, -2.0, -1.0],
    [-1.0, 4.0, -1.0, -2.0],
    [-2.0, -1.0, 4.0, -1.0],
    [-1.0, -2.0, -1.0, 4.0],
]) / 6.0

Q4_UNIT_MASS = np.array([
    [4.0, 2.0, 1.0, 2.0],
    [2.0, 4.0, 2.0, 1.0],
    [1.0, 2.0, 4.0, 2.0],
    [2.0, 1.0, 2.0, 4.0],
]) / 36.0

RIGHT_TRIANGLE = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]


def _sorted_exponents(op):
    return np.sort(op.modal.exponents.real)


class FormElementTestCase(unittest.TestCase):
    def _makeFUT(self, polygon, material=None, **kwargs):
        return form_element(polygon, material or Material(1.0, 1.0, 1.0),
                            **kwargs)

    def test_unit_square_matches_bilinear(self):
        op = self._makeFUT(UNIT_SQUARE, Material(1.0, 1.0, 2.0))
        assert np.allclose(op.stiffness, Q4_UNIT_STIFFNESS, atol=1e-12)
        assert np.allclose(op.mass, 2.0 * Q4_UNIT_MASS, atol=1e-12)
        assert np.allclose(_sorted_exponents(op), [0.0, 1.0, 1.0, 2.0],
                           atol=1e-9)
        assert op.modal.constant_mode

    def test_triangle_matches_linear(self):
        op = self._makeFUT(RIGHT_TRIANGLE)
        expected = 0.5 * np.array([[2.0, -1.0, -1.0],
                                   [-1.0, 1.0, 0.0],
                                   [-1.0, 0.0, 1.0]])
        assert np.allclose(op.stiffness, expected, atol=1e-12)
        mass = 0.5 / 12.0 * np.array([[2.0, 1.0, 1.0],
                                      [1.0, 2.0, 1.0],
                                      [1.0, 1.0, 2.0]])
        assert np.allclose(op.mass, mass, atol=1e-12)
        assert np.allclose(_sorted_exponents(op), [0.0, 1.0, 1.0],
                           atol=1e-9)

    def test_anisotropic_rectangle(self):
        coords = [(1.0, 2.0), (4.0, 2.0), (4.0, 3.5), (1.0, 3.5)]
        material = Material(2.0, 0.5, 0.1)
        op = self._makeFUT(coords, material)
        ref = bilinear_quad(coords, material)
        assert np.allclose(op.stiffness, ref.stiffness, atol=1e-11)
        assert np.allclose(op.mass, ref.mass, atol=1e-11)

    def test_pentagon_properties(self):
        op = self._makeFUT(PENTAGON, Material(2.0, 3.0, 0.5))
        K, M = op.stiffness, op.mass
        assert np.allclose(K, K.T, atol=1e-14)
        assert np.allclose(K @ np.ones(5), 0.0, atol=1e-12)
        eig = np.linalg.eigvalsh(K)
        assert abs(eig[0]) < 1e-10
        assert eig[1] > 1e-6
        assert np.all(np.linalg.eigvalsh(M) > 0)
        # total storage is ss times the area
        assert np.ones(5) @ M @ np.ones(5) == pytest.approx(0.5 * 3.5,
                                                            rel=1e-10)
        assert op.diagnostics["mass_residual"] < 1e-10

    def test_pentagon_linear_flux(self):
        # K h of a linear field gives the consistent boundary fluxes
        material = Material(2.0, 3.0)
        op = self._makeFUT(PENTAGON, material)
        pts = np.array(PENTAGON)
        h = 0.3 + 1.5 * pts[:, 0] - 0.7 * pts[:, 1]
        q = -material.conductivity() @ np.array([1.5, -0.7])
        expected = np.zeros(5)
        for k in range(5):
            a, b = pts[k], pts[(k + 1) % 5]
            d = b - a
            outward = np.array([d[1], -d[0]])
            share = 0.5 * float(q @ outward)
            expected[k] += share
            expected[(k + 1) % 5] += share
        assert np.allclose(op.stiffness @ h, -expected, atol=1e-10)

    def test_mass_agrees_with_sylvester(self):
        op = self._makeFUT(PENTAGON, Material(2.0, 3.0, 0.5))
        direct = mass_matrix_sylvester(op.stiffness, op.coefficients)
        assert np.allclose(op.mass, direct, rtol=1e-8, atol=1e-12)

    def test_zero_storage(self):
        op = self._makeFUT(PENTAGON, Material(1.0, 1.0, 0.0))
        assert not np.any(op.mass)

    def test_clockwise(self):
        with pytest.raises(GeometryError):
            self._makeFUT(UNIT_SQUARE[::-1])

    def test_sliver(self):
        flat = [(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (1.0, 1e-13)]
        with pytest.raises(GeometryError):
            self._makeFUT(flat)

    def test_decomposition_failure(self):
        coefficients = element_coefficients(
            ScaledBoundaryGeometry.from_polygon(UNIT_SQUARE),
            Material(1.0, 1.0))
        Z = build_hamiltonian(coefficients)
        with pytest.raises(ElementDecompositionError):
            modal_decomposition(Z, condition_limit=0.5)

    def test_translation_invariant(self):
        a = self._makeFUT(PENTAGON)
        b = self._makeFUT([(x + 100.0, y - 50.0) for x, y in PENTAGON])
        assert np.allclose(a.stiffness, b.stiffness, atol=1e-10)
        assert np.allclose(a.mass, b.mass, atol=1e-10)

    def test_dump(self):
        op = self._makeFUT(UNIT_SQUARE)
        text = dump_element(7, op)
        lines = text.splitlines()
        assert lines[0] == "element 7"
        for name in ("E0", "E1", "E2", "M0", "K", "M"):
            assert "{} 4x4".format(name) in lines
        k_row = lines[lines.index("K 4x4") + 1].split()
        assert float(k_row[0]) == pytest.approx(4.0 / 6.0, abs=1e-12)


class ScalarElementTestCase(unittest.TestCase):
    """One boundary dof, E0 = E2 = 1, E1 = 0"""

    def setUp(self):
        self.coefficients = CoefficientMatrices(
            np.array([[1.0]]), np.array([[0.0]]), np.array([[1.0]]),
            np.array([[4.0]]))

    def test_hamiltonian(self):
        Z = build_hamiltonian(self.coefficients)
        assert np.allclose(Z, [[0.0, 1.0], [1.0, 0.0]], atol=1e-15)
        assert np.allclose(np.sort(np.linalg.eigvals(Z).real), [-1.0, 1.0])

    def test_modes_stiffness_and_mass(self):
        modal = modal_decomposition(build_hamiltonian(self.coefficients))
        assert np.allclose(modal.exponents, [1.0], atol=1e-12)
        assert not modal.constant_mode
        K = steady_stiffness(modal)
        assert np.allclose(K, [[1.0]], atol=1e-12)
        M = mass_matrix(modal, self.coefficients.M0)
        assert np.allclose(M, [[1.0]], atol=1e-12)


class ElementCacheTestCase(unittest.TestCase):
    def _model(self, n=3):
        mesh = rectangle_mesh(0.0, 0.0, 1.0, 1.0, n, n,
                              tags=("bottom", "right", "top", "left"))
        return SeepageModel(
            mesh, {"default": Material(1.0, 1.0, 1.0)},
            [DirichletSet("left", mesh.nodes_with_tag("left"), 1.0),
             DirichletSet("right", mesh.nodes_with_tag("right"), 0.0)])

    def test_repeated_cells(self):
        cache = ElementCache(1e-9)
        material = Material(1.0, 1.0)
        first = cache.get(UNIT_SQUARE, material, (1, 2, 3, 4))
        shifted = [(x + 5.0, y) for x, y in UNIT_SQUARE]
        second = cache.get(shifted, material, (5, 6, 7, 8))
        assert (cache.misses, cache.hits) == (1, 1)
        assert second.stiffness is first.stiffness
        assert second.geometry.dof_map == (5, 6, 7, 8)
        assert np.allclose(second.geometry.scaling_center, (5.5, 0.5),
                           atol=1e-12)

    def test_material_in_key(self):
        cache = ElementCache(1e-9)
        cache.get(UNIT_SQUARE, Material(1.0, 1.0), (1, 2, 3, 4))
        cache.get(UNIT_SQUARE, Material(2.0, 1.0), (1, 2, 3, 4))
        assert cache.misses == 2

    def test_grid_forms_one_element(self):
        model = self._model()
        cache_hits = []

        class Recorder(object):
            def timing(self, name, value, **kwargs):
                pass

            def increment(self, name, count=1, **kwargs):
                cache_hits.append((name, count))

        ops = form_elements(model, metrics=Recorder())
        assert len(ops) == 9
        assert cache_hits == [("element.cache_hit", 8)]

    def test_cache_matches_direct(self):
        model = self._model()
        cached = solve_model(model, use_cache=True)
        direct = solve_model(model, use_cache=False)
        assert np.allclose(cached.steady.heads, direct.steady.heads,
                           rtol=0, atol=1e-12)
        expected = 1.0 - model.mesh.xy[:, 0]
        assert np.allclose(cached.steady.heads, expected, atol=1e-12)

    def test_debug_dumps(self):
        tmp = tempfile.mkdtemp()
        try:
            out = os.path.join(tmp, "elements")
            form_elements(self._model(2), debug_dir=out)
            assert sorted(os.listdir(out)) == [
                "element_{:06d}.txt".format(i) for i in range(1, 5)]
        finally:
            shutil.rmtree(tmp)


def random_convex_polygon(rng):
    """CCW polygon with vertices on a rotated ellipse"""
    n = rng.randint(3, 9)
    sector = 2.0 * np.pi / n
    angles = sector * (np.arange(n) + rng.uniform(0.2, 0.8, size=n))
    a, b = rng.uniform(0.5, 2.0, size=2)
    turn = rng.uniform(0.0, 2.0 * np.pi)
    pts = np.column_stack([a * np.cos(angles), b * np.sin(angles)])
    rot = np.array([[np.cos(turn), -np.sin(turn)],
                    [np.sin(turn), np.cos(turn)]])
    return pts @ rot.T + rng.uniform(-10.0, 10.0, size=2)


def random_star_polygon(rng):
    """CCW polygon with jittered radii, usually not convex, whose edges are
    all seen from the centroid"""
    while True:
        n = rng.randint(4, 9)
        sector = 2.0 * np.pi / n
        angles = sector * (np.arange(n) + rng.uniform(0.2, 0.8, size=n))
        radii = rng.uniform(0.5, 1.0, size=n) * rng.uniform(0.5, 2.0)
        pts = np.column_stack([radii * np.cos(angles),
                               radii * np.sin(angles)])
        area, center = polygon_area_centroid(pts)
        rel = pts - np.asarray(center)
        nxt = np.roll(rel, -1, axis=0)
        seen = rel[:, 0] * nxt[:, 1] - rel[:, 1] * nxt[:, 0]
        if seen.min() > 0.05 * area / n:
            return pts + rng.uniform(-10.0, 10.0, size=2)


def is_convex(polygon):
    d = np.diff(np.vstack([polygon, polygon[:1]]), axis=0)
    turn = d[:, 0] * np.roll(d[:, 1], -1) - d[:, 1] * np.roll(d[:, 0], -1)
    return bool(np.all(turn >= 0))


class RandomElementTestCase(unittest.TestCase):
    """Structural properties over randomized polygons and materials"""

    def test_invariants(self):
        rng = np.random.RandomState(1729)
        reflex = 0
        for trial in range(100):
            if trial % 2:
                polygon = random_star_polygon(rng)
                reflex += not is_convex(polygon)
            else:
                polygon = random_convex_polygon(rng)
            kx, ky = rng.uniform(0.1, 10.0, size=2)
            material = Material(kx, ky, rng.uniform(0.0, 1.0))
            self._check(trial, polygon, material)
        assert reflex >= 5

    def _check(self, trial, polygon, material):
        n = len(polygon)
        geometry = ScaledBoundaryGeometry.from_polygon(polygon)
        c = element_coefficients(geometry, material)
        assert np.linalg.eigvalsh(c.E0).min() > 0, trial
        e2 = np.linalg.eigvalsh(c.E2)
        assert e2.min() >= -1e-12 * abs(e2).max(), trial

        lam = np.linalg.eigvals(build_hamiltonian(c))
        radius = np.abs(lam).max()
        for value in lam[np.abs(lam) > 1e-6 * radius]:
            assert np.abs(lam + value).min() < 1e-8 * radius, trial

        op = form_element(polygon, material)
        K = op.stiffness
        assert np.array_equal(K, K.T), trial
        eig = np.linalg.eigvalsh(K)
        assert abs(eig[0]) < 1e-10 * eig[-1], trial
        assert eig[1] > 1e-8 * eig[-1], trial
        assert np.abs(K @ np.ones(n)).max() < 1e-10 * eig[-1], trial

        m0_norm = np.linalg.norm(op.coefficients.M0)
        assert op.diagnostics["mass_residual"] <= 1e-8 * m0_norm, trial
        total = np.ones(n) @ op.mass @ np.ones(n)
        assert total == pytest.approx(material.ss * geometry.area,
                                      rel=1e-8), trial
