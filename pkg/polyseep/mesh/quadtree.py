"""Quadtree meshing.

Leaves are addressed as ``(depth, i, j)`` over the bounding square of the
domain. Leaves are refined to the depth asked for by the refinement
regions, optionally 2:1 balanced, clipped to the domain and finally turned
into a polygon mesh. Hanging nodes become ordinary polygon vertices in
:func:`polygonize_hanging_nodes`.

"""
from collections import deque, Counter

import numpy as np
from attr import (
    attrs,
    attrib,
    Factory,
)
from scipy.spatial import cKDTree
from shapely.geometry import (
    box,
    LineString,
    Point as ShapelyPoint,
    Polygon,
)
from shapely.geometry.polygon import orient
from twisted.logger import Logger
from typing import (  # noqa
    Any,
    Dict,
    Iterable,
    List,
    Optional,
    Sequence,
    Set,
    Tuple,
)

from polyseep.constants import (
    AREA_TOL,
    DEFAULT_MATERIAL,
    GEOMETRY_TOL,
    IMPERMEABLE_TAG,
)
from polyseep.exceptions import QuadtreeError
from polyseep.mesh.core import (
    BoundaryEdge,
    Node,
    PolygonElement,
    PolygonMesh,
    coincidence_tol,
    nodes_on_segment,
    polygon_area_centroid,
)
from polyseep.types import Point  # noqa
from polyseep.utils import diameter

log = Logger()

Cell = Tuple[int, int, int]


def _as_ring(points):
    # type: (Iterable) -> Tuple[Point, ...]
    return tuple((float(x), float(y)) for x, y in points)


def _as_regions(regions):
    # type: (Iterable) -> List[RefineRegion]
    return [r if isinstance(r, RefineRegion) else RefineRegion(**r)
            for r in regions]


@attrs(frozen=True)
class RefineRegion(object):
    """A point (one coordinate pair) or segment (two) refined to ``depth``"""
    points = attrib(converter=_as_ring)  # type: Tuple[Point, ...]
    depth = attrib(converter=int)  # type: int

    def geometry(self):
        if len(self.points) == 1:
            return ShapelyPoint(self.points[0])
        return LineString(self.points)


@attrs
class QuadtreeSpec(object):
    """Quadtree meshing request.

    ``edge_tags`` names the sides of the outer polygon in order (side k
    runs from vertex k to vertex k+1); unnamed sides become ``edge<k>``.
    Hole boundaries and faces of removed cells are tagged ``hole_tag``.

    """
    domain = attrib(converter=_as_ring)  # type: Tuple[Point, ...]
    max_depth = attrib(converter=int)  # type: int
    holes = attrib(
        default=Factory(list),
        converter=lambda hs: [_as_ring(h) for h in hs]
    )  # type: List[Tuple[Point, ...]]
    refine_regions = attrib(
        default=Factory(list), converter=_as_regions
    )  # type: List[RefineRegion]
    balance = attrib(default=True, converter=bool)  # type: bool
    min_depth = attrib(default=0, converter=int)  # type: int
    boundary_depth = attrib(default=None)  # type: Optional[int]
    edge_tags = attrib(default=None)  # type: Optional[Sequence[str]]
    hole_tag = attrib(default=IMPERMEABLE_TAG)  # type: str
    material_id = attrib(default=DEFAULT_MATERIAL)  # type: str

    def __attrs_post_init__(self):
        if self.max_depth < 1:
            raise QuadtreeError("max_depth must be at least 1")
        depths = [("min_depth", self.min_depth)]
        depths.extend(("refine region", r.depth)
                      for r in self.refine_regions)
        if self.boundary_depth is not None:
            depths.append(("boundary_depth", int(self.boundary_depth)))
        for label, depth in depths:
            if depth < 0 or depth > self.max_depth:
                raise QuadtreeError(
                    "Unreachable target depth {} for {} (max_depth {})"
                    .format(depth, label, self.max_depth))
        for region in self.refine_regions:
            if len(region.points) not in (1, 2):
                raise QuadtreeError(
                    "Refine regions are a point or a segment")
        if self.edge_tags is not None and \
                len(self.edge_tags) != len(self.domain):
            raise QuadtreeError("edge_tags needs one tag per domain side")

    def polygon(self):
        # type: () -> Polygon
        """The meshed region as a valid shapely polygon"""
        if len(self.domain) < 3:
            raise QuadtreeError("Domain polygon needs at least 3 vertices")
        try:
            poly = Polygon(self.domain, [h for h in self.holes])
        except (ValueError, TypeError) as ex:
            raise QuadtreeError("Invalid domain polygon: {}".format(ex))
        if not poly.is_valid or poly.area <= 0:
            raise QuadtreeError("Invalid domain polygon")
        return poly

    def side_tag(self, k):
        # type: (int) -> str
        if self.edge_tags is None:
            return "edge{}".format(k)
        return self.edge_tags[k]


@attrs(frozen=True)
class _Grid(object):
    x0 = attrib()  # type: float
    y0 = attrib()  # type: float
    side = attrib()  # type: float

    def bounds(self, cell):
        # type: (Cell) -> Tuple[float, float, float, float]
        d, i, j = cell
        h = self.side / (1 << d)
        return (self.x0 + i * h, self.y0 + j * h,
                self.x0 + (i + 1) * h, self.y0 + (j + 1) * h)

    def box(self, cell):
        return box(*self.bounds(cell))


def children(cell):
    # type: (Cell) -> List[Cell]
    d, i, j = cell
    return [(d + 1, 2 * i + a, 2 * j + b) for b in (0, 1) for a in (0, 1)]


def _refine(spec, domain, grid):
    # type: (QuadtreeSpec, Polygon, _Grid) -> Set[Cell]
    regions = [(r.depth, r.geometry()) for r in spec.refine_regions]
    boundary = domain.boundary
    leaves = set()  # type: Set[Cell]
    stack = [(0, 0, 0)]
    while stack:
        cell = stack.pop()
        cell_box = grid.box(cell)
        target = spec.min_depth
        for depth, geom in regions:
            if depth > target and cell_box.intersects(geom):
                target = depth
        if spec.boundary_depth is not None and \
                spec.boundary_depth > target and \
                cell_box.intersects(boundary):
            target = spec.boundary_depth
        if cell[0] < target and cell_box.intersects(domain):
            stack.extend(children(cell))
        else:
            leaves.add(cell)
    return leaves


def _covering_leaf(leaves, depth, i, j):
    # type: (Set[Cell], int, int, int) -> Optional[Cell]
    """The leaf at ``depth`` or coarser that contains cell (depth, i, j)"""
    for k in range(depth, -1, -1):
        shift = depth - k
        cell = (k, i >> shift, j >> shift)
        if cell in leaves:
            return cell
    return None


def balance_leaves(leaves):
    # type: (Iterable[Cell]) -> Set[Cell]
    """Split leaves until edge neighbours differ by at most one level"""
    leaves = set(leaves)
    queue = deque(sorted(leaves, reverse=True))
    while queue:
        cell = queue.popleft()
        if cell not in leaves:
            continue
        d, i, j = cell
        n = 1 << d
        for ni, nj in ((i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)):
            if not (0 <= ni < n and 0 <= nj < n):
                continue
            coarse = _covering_leaf(leaves, d, ni, nj)
            if coarse is not None and coarse[0] < d - 1:
                leaves.remove(coarse)
                kids = children(coarse)
                leaves.update(kids)
                queue.extend(kids)
                queue.append(cell)
                break
    return leaves


def _polygon_parts(geom):
    # type: (Any) -> List[Polygon]
    if geom.is_empty:
        return []
    if geom.geom_type == "Polygon":
        return [geom]
    parts = []
    for g in getattr(geom, "geoms", []):
        parts.extend(_polygon_parts(g))
    return parts


def _clip(leaves, domain, spec, grid):
    # type: (Set[Cell], Polygon, QuadtreeSpec, _Grid) -> List[np.ndarray]
    """Leaf polygons: whole squares inside the domain, clipped pieces where
    the boundary cuts them, nothing for leaves centered in a hole"""
    holes = [Polygon(h) for h in spec.holes]
    area_tol = AREA_TOL * grid.side ** 2
    polygons = []
    for cell in sorted(leaves):
        x0, y0, x1, y1 = grid.bounds(cell)
        cell_box = box(x0, y0, x1, y1)
        if domain.contains(cell_box):
            polygons.append(np.array([(x0, y0), (x1, y0), (x1, y1),
                                      (x0, y1)]))
            continue
        if not domain.intersects(cell_box):
            continue
        center = ShapelyPoint(0.5 * (x0 + x1), 0.5 * (y0 + y1))
        if any(h.contains(center) for h in holes):
            continue
        for part in _polygon_parts(cell_box.intersection(domain)):
            if part.area <= area_tol:
                continue
            if len(part.interiors):
                raise QuadtreeError(
                    "Leaf {} encloses a hole; refine further".format(cell))
            ring = orient(part, 1.0).exterior.coords[:-1]
            polygons.append(np.array(ring, dtype=float))
    return polygons


def _snap(polygons, tol, origin):
    # type: (List[np.ndarray], float, np.ndarray) -> Tuple[np.ndarray, List[List[int]]]  # noqa
    """Merge coincident vertices; returns unique points and index loops"""
    keys = {}  # type: Dict[Tuple[int, int], int]
    points = []  # type: List[np.ndarray]
    loops = []
    for poly in polygons:
        loop = []  # type: List[int]
        for p in poly:
            q = np.round((p - origin) / tol).astype(np.int64)
            key = (int(q[0]), int(q[1]))
            if key not in keys:
                keys[key] = len(points)
                points.append(p)
            idx = keys[key]
            if not loop or loop[-1] != idx:
                loop.append(idx)
        while len(loop) > 1 and loop[0] == loop[-1]:
            loop.pop()
        if len(loop) >= 3:
            loops.append(loop)
    return np.array(points, dtype=float).reshape(-1, 2), loops


def _split_loop(loop_ids, mesh, index, tree, tol):
    # type: (Sequence[int], PolygonMesh, Dict[int, int], cKDTree, float) -> List[int]  # noqa
    """Loop of node ids with every node lying inside an edge inserted"""
    xy = mesh.xy
    out = []
    n = len(loop_ids)
    for k in range(n):
        a, b = loop_ids[k], loop_ids[(k + 1) % n]
        out.append(a)
        pa, pb = xy[index[a]], xy[index[b]]
        out.extend(mesh.nodes[pos].id
                   for pos in nodes_on_segment(tree, xy, pa, pb, tol))
    return out


def generate_quadtree(spec):
    # type: (QuadtreeSpec) -> PolygonMesh
    """Quadtree leaves clipped to the domain, as a (possibly non-conforming)
    polygon mesh whose boundary edges are already split at hanging nodes.

    Nodes are numbered from 1 by (y, x), elements from 1 by centroid.

    """
    domain = spec.polygon()
    minx, miny, maxx, maxy = domain.bounds
    grid = _Grid(minx, miny, max(maxx - minx, maxy - miny))
    leaves = _refine(spec, domain, grid)
    if spec.balance:
        leaves = balance_leaves(leaves)
    polygons = _clip(leaves, domain, spec, grid)
    if not polygons:
        raise QuadtreeError("Quadtree produced no cells")

    tol = GEOMETRY_TOL * diameter([(minx, miny), (maxx, maxy)])
    origin = np.array([minx, miny])
    points, loops = _snap(polygons, tol, origin)

    order = np.lexsort((points[:, 0], points[:, 1]))
    node_id = np.empty(len(points), dtype=int)
    node_id[order] = np.arange(1, len(points) + 1)
    nodes = [Node(k + 1, *points[pos]) for k, pos in enumerate(order)]

    def centroid_key(loop):
        c = polygon_area_centroid(points[loop])[1]
        return (round(c[1] / tol), round(c[0] / tol))

    loops.sort(key=centroid_key)
    elements = [PolygonElement(k + 1, [int(node_id[i]) for i in loop],
                               spec.material_id)
                for k, loop in enumerate(loops)]
    mesh = PolygonMesh(nodes, elements)
    mesh = PolygonMesh(nodes, elements, _boundary(mesh, spec, tol))
    log.info("Quadtree generated", leaves=len(leaves),
             elements=len(elements), nodes=len(nodes))
    return mesh


def _boundary(mesh, spec, tol):
    # type: (PolygonMesh, QuadtreeSpec, float) -> List[BoundaryEdge]
    """Segments used by one element once split at every node lying on them,
    tagged by the outer side they sit on or as hole boundary"""
    index = mesh.node_index()
    tree = cKDTree(mesh.xy)
    segments = []
    for el in mesh.elements:
        loop = _split_loop(el.node_ids, mesh, index, tree, tol)
        segments.extend(PolygonElement(el.id, loop).edges())
    usage = Counter((min(a, b), max(a, b)) for a, b in segments)

    sides = []
    ring = spec.domain
    for k in range(len(ring)):
        sides.append(LineString([ring[k], ring[(k + 1) % len(ring)]]))

    edges = []
    for a, b in segments:
        if usage[(min(a, b), max(a, b))] != 1:
            continue
        pa, pb = mesh.xy[index[a]], mesh.xy[index[b]]
        tag = spec.hole_tag
        for k, side in enumerate(sides):
            if side.distance(ShapelyPoint(pa)) <= tol and \
                    side.distance(ShapelyPoint(pb)) <= tol:
                tag = spec.side_tag(k)
                break
        edges.append(BoundaryEdge((a, b), tag))
    return edges


def polygonize_hanging_nodes(mesh):
    # type: (PolygonMesh) -> PolygonMesh
    """Insert every node lying inside an element edge as a vertex of that
    element, and split boundary edges the same way keeping their tags"""
    if not mesh.elements:
        return mesh
    tol = coincidence_tol(mesh)
    index = mesh.node_index()
    tree = cKDTree(mesh.xy)
    inserted = 0
    elements = []
    for el in mesh.elements:
        loop = _split_loop(el.node_ids, mesh, index, tree, tol)
        inserted += len(loop) - len(el.node_ids)
        elements.append(PolygonElement(el.id, loop, el.material_id))
    boundary = []
    for edge in mesh.boundary_edges:
        a, b = edge.nodes
        pa, pb = mesh.xy[index[a]], mesh.xy[index[b]]
        chain = [a] + [mesh.nodes[pos].id for pos in
                     nodes_on_segment(tree, mesh.xy, pa, pb, tol)] + [b]
        boundary.extend(BoundaryEdge((p, q), edge.tag)
                        for p, q in zip(chain[:-1], chain[1:]))
    log.debug("Polygonized hanging nodes", inserted=inserted)
    return PolygonMesh(mesh.nodes, elements, boundary)


def build_quadtree_mesh(spec):
    # type: (QuadtreeSpec) -> PolygonMesh
    """Conforming polygon mesh for ``spec``"""
    return polygonize_hanging_nodes(generate_quadtree(spec))


def rectangle_mesh(x0, y0, x1, y1, nx, ny, material_id=DEFAULT_MATERIAL,
                   tags=("bottom", "right", "top", "left")):
    # type: (float, float, float, float, int, int, str, Sequence[str]) -> PolygonMesh  # noqa
    """Structured nx by ny quadrilateral mesh, nodes numbered row by row
    from 1"""
    if nx < 1 or ny < 1:
        raise QuadtreeError("Rectangle mesh needs nx, ny >= 1")
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)

    def nid(i, j):
        return j * (nx + 1) + i + 1

    nodes = [Node(nid(i, j), xs[i], ys[j])
             for j in range(ny + 1) for i in range(nx + 1)]
    elements = []
    for j in range(ny):
        for i in range(nx):
            elements.append(PolygonElement(
                j * nx + i + 1,
                (nid(i, j), nid(i + 1, j), nid(i + 1, j + 1), nid(i, j + 1)),
                material_id))
    bottom, right, top, left = tags
    edges = [BoundaryEdge((nid(i, 0), nid(i + 1, 0)), bottom)
             for i in range(nx)]
    edges += [BoundaryEdge((nid(nx, j), nid(nx, j + 1)), right)
              for j in range(ny)]
    edges += [BoundaryEdge((nid(i + 1, ny), nid(i, ny)), top)
              for i in reversed(range(nx))]
    edges += [BoundaryEdge((nid(0, j + 1), nid(0, j)), left)
              for j in reversed(range(ny))]
    return PolygonMesh(nodes, elements, edges)
