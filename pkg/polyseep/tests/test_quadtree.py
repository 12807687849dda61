import unittest

import numpy as np
import pytest

from polyseep.exceptions import QuadtreeError
from polyseep.mesh import (
    QuadtreeSpec,
    RefineRegion,
    build_quadtree_mesh,
    generate_quadtree,
    polygon_area_centroid,
    polygonize_hanging_nodes,
    rectangle_mesh,
    validate_mesh,
)
from polyseep.mesh.quadtree import balance_leaves, children
from polyseep.tests.support import SIDES, UNIT_SQUARE

# hole aligned with the depth 5 grid, 0.3125 wide
ALIGNED_HOLE = [(11 / 32.0, 11 / 32.0), (21 / 32.0, 11 / 32.0),
                (21 / 32.0, 21 / 32.0), (11 / 32.0, 21 / 32.0)]


def _extent(cell, depth):
    d, i, j = cell
    size = 1 << (depth - d)
    return i * size, j * size, (i + 1) * size, (j + 1) * size


def _share_edge(a, b):
    ax0, ay0, ax1, ay1 = a
    bx0, by0, bx1, by1 = b
    if ax1 == bx0 or bx1 == ax0:
        return min(ay1, by1) - max(ay0, by0) > 0
    if ay1 == by0 or by1 == ay0:
        return min(ax1, bx1) - max(ax0, bx0) > 0
    return False


class QuadtreeSpecTestCase(unittest.TestCase):
    def test_unreachable_depth(self):
        with pytest.raises(QuadtreeError):
            QuadtreeSpec(UNIT_SQUARE, max_depth=3, min_depth=4)
        with pytest.raises(QuadtreeError):
            QuadtreeSpec(UNIT_SQUARE, max_depth=3,
                         refine_regions=[RefineRegion([(0, 0)], 5)])
        with pytest.raises(QuadtreeError):
            QuadtreeSpec(UNIT_SQUARE, max_depth=0)

    def test_bad_tags(self):
        with pytest.raises(QuadtreeError):
            QuadtreeSpec(UNIT_SQUARE, max_depth=2, edge_tags=["a", "b"])

    def test_invalid_domain(self):
        bowtie = QuadtreeSpec([(0, 0), (1, 1), (1, 0), (0, 1)], max_depth=2)
        with pytest.raises(QuadtreeError):
            generate_quadtree(bowtie)

    def test_regions_from_dicts(self):
        spec = QuadtreeSpec(UNIT_SQUARE, max_depth=3, refine_regions=[
            {"points": [[0, 0], [1, 0]], "depth": 2}])
        assert spec.refine_regions == [RefineRegion([(0.0, 0.0),
                                                     (1.0, 0.0)], 2)]
        assert spec.side_tag(1) == "edge1"


class GenerateQuadtreeTestCase(unittest.TestCase):
    def test_uniform_depth_two(self):
        mesh = generate_quadtree(QuadtreeSpec(UNIT_SQUARE, max_depth=2,
                                              min_depth=2, edge_tags=SIDES))
        assert len(mesh.elements) == 16
        assert mesh.n_nodes == 25
        assert validate_mesh(mesh).ok
        assert mesh.area() == pytest.approx(1.0, rel=1e-14)
        for tag in SIDES:
            assert len(mesh.edges_with_tag(tag)) == 4
        # numbered by (y, x)
        assert tuple(mesh.xy[0]) == (0.0, 0.0)
        assert tuple(mesh.xy[-1]) == (1.0, 1.0)

    def test_aligned_hole(self):
        spec = QuadtreeSpec(UNIT_SQUARE, max_depth=5, min_depth=5,
                            holes=[ALIGNED_HOLE], edge_tags=SIDES)
        mesh = generate_quadtree(spec)
        assert len(mesh.elements) == 32 * 32 - 10 * 10
        assert mesh.n_nodes == 33 * 33 - 9 * 9
        assert len(mesh.edges_with_tag("impermeable")) == 40
        lo, hi = ALIGNED_HOLE[0][0], ALIGNED_HOLE[2][0]
        for el in mesh.elements:
            cx, cy = polygon_area_centroid(mesh.element_coords(el))[1]
            assert not (lo < cx < hi and lo < cy < hi)

    def test_unaligned_hole(self):
        hole = [(1 / 3.0, 1 / 3.0), (2 / 3.0, 1 / 3.0), (2 / 3.0, 2 / 3.0),
                (1 / 3.0, 2 / 3.0)]
        spec = QuadtreeSpec(UNIT_SQUARE, max_depth=4, min_depth=4,
                            holes=[hole], edge_tags=SIDES)
        mesh = generate_quadtree(spec)
        # cells centered in the hole go whole, widening it to six cells
        assert len(mesh.edges_with_tag("impermeable")) == 24
        assert mesh.area() == pytest.approx(1.0 - 0.375 ** 2, rel=1e-12)
        assert validate_mesh(mesh).ok

    def test_clipped_to_rectangle(self):
        spec = QuadtreeSpec([(0, 0), (40, 0), (40, 20), (0, 20)],
                            max_depth=3, min_depth=3, edge_tags=SIDES)
        mesh = generate_quadtree(spec)
        assert len(mesh.elements) == 32
        assert mesh.n_nodes == 45
        assert len(mesh.edges_with_tag("left")) == 4
        assert len(mesh.edges_with_tag("top")) == 8


class BalanceTestCase(unittest.TestCase):
    def _leaves(self):
        leaves = set(children((0, 0, 0)))
        leaves.remove((1, 0, 0))
        leaves.update(children((1, 0, 0)))
        leaves.remove((2, 1, 1))
        leaves.update(children((2, 1, 1)))
        return leaves

    def test_unbalanced_input(self):
        leaves = self._leaves()
        boxes = [(c, _extent(c, 3)) for c in leaves]
        assert any(_share_edge(a, b) and abs(c[0] - d[0]) > 1
                   for c, a in boxes for d, b in boxes)

    def test_neighbours_within_one_level(self):
        leaves = balance_leaves(self._leaves())
        depth = max(c[0] for c in leaves)
        boxes = [(c, _extent(c, depth)) for c in leaves]
        for c, a in boxes:
            for d, b in boxes:
                if c != d and _share_edge(a, b):
                    assert abs(c[0] - d[0]) <= 1, (c, d)
        area = sum((a[2] - a[0]) * (a[3] - a[1]) for _, a in boxes)
        assert area == (1 << depth) ** 2

    def test_corner_refinement(self):
        spec = QuadtreeSpec(UNIT_SQUARE, max_depth=4, edge_tags=SIDES,
                            refine_regions=[RefineRegion([(0, 0)], 4)])
        mesh = build_quadtree_mesh(spec)
        assert validate_mesh(mesh).ok
        assert mesh.area() == pytest.approx(1.0, rel=1e-14)
        sizes = set()
        for el in mesh.elements:
            coords = mesh.element_coords(el)
            sizes.add(round(float(np.ptp(coords[:, 0])), 12))
        assert min(sizes) == 1 / 16.0


class PolygonizeTestCase(unittest.TestCase):
    def _spec(self):
        return QuadtreeSpec(UNIT_SQUARE, max_depth=3, min_depth=2,
                            edge_tags=SIDES,
                            refine_regions=[RefineRegion([(0.3, 0.3)], 3)])

    def test_hanging_nodes_inserted(self):
        raw = generate_quadtree(self._spec())
        assert not validate_mesh(raw).ok
        mesh = polygonize_hanging_nodes(raw)
        assert validate_mesh(mesh).ok
        assert max(len(el.node_ids) for el in mesh.elements) >= 5
        assert mesh.n_nodes == raw.n_nodes
        assert mesh.area() == pytest.approx(1.0, rel=1e-14)

    def test_boundary_tags_kept(self):
        mesh = build_quadtree_mesh(self._spec())
        total = 0.0
        for a, b in mesh.edges_with_tag("bottom"):
            pa, pb = mesh.coordinates((a, b))
            assert pa[1] == 0.0 and pb[1] == 0.0
            total += abs(pb[0] - pa[0])
        assert total == pytest.approx(1.0, rel=1e-14)

    def test_conforming_unchanged(self):
        mesh = rectangle_mesh(0, 0, 1, 1, 2, 2)
        assert polygonize_hanging_nodes(mesh).elements == mesh.elements


class RectangleMeshTestCase(unittest.TestCase):
    def test_numbering(self):
        mesh = rectangle_mesh(0.0, 0.0, 2.0, 1.0, 2, 1, tags=SIDES)
        assert mesh.node_ids == [1, 2, 3, 4, 5, 6]
        assert [el.node_ids for el in mesh.elements] == [(1, 2, 5, 4),
                                                         (2, 3, 6, 5)]
        assert mesh.nodes_with_tag("left") == [1, 4]
        assert validate_mesh(mesh).ok

    def test_bad_counts(self):
        with pytest.raises(QuadtreeError):
            rectangle_mesh(0, 0, 1, 1, 0, 1)
