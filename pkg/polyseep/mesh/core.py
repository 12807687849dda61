"""Polygonal meshes: nodes, star-convex polygon elements, tagged boundaries
and validation."""
from collections import defaultdict

import numpy as np
from attr import (
    attrs,
    attrib,
    Factory,
)
from scipy.spatial import cKDTree
from shapely.geometry import LinearRing
from twisted.logger import Logger
from typing import (  # noqa
    Dict,
    Iterable,
    List,
    Optional,
    Sequence,
    Tuple,
)

from polyseep.constants import (
    AREA_TOL,
    DEFAULT_MATERIAL,
    GEOMETRY_TOL,
)
from polyseep.exceptions import GeometryError, MeshValidationError
from polyseep.types import EdgeKey, Point  # noqa
from polyseep.utils import diameter

log = Logger()


@attrs(frozen=True)
class Node(object):
    """Mesh vertex"""
    id = attrib(converter=int)  # type: int
    x = attrib(converter=float)  # type: float
    y = attrib(converter=float)  # type: float


@attrs(frozen=True)
class PolygonElement(object):
    """S-element: an ordered loop of node ids"""
    id = attrib(converter=int)  # type: int
    node_ids = attrib(converter=tuple)  # type: Tuple[int, ...]
    material_id = attrib(default=DEFAULT_MATERIAL,
                         converter=str)  # type: str

    def edges(self):
        # type: () -> List[EdgeKey]
        ids = self.node_ids
        return [(ids[i], ids[(i + 1) % len(ids)]) for i in range(len(ids))]


@attrs(frozen=True)
class BoundaryEdge(object):
    """Boundary segment between two nodes carrying a tag"""
    nodes = attrib(converter=tuple)  # type: EdgeKey
    tag = attrib(converter=str)  # type: str


@attrs(frozen=True)
class PolygonMesh(object):
    """Immutable polygon mesh"""
    nodes = attrib(converter=tuple)  # type: Tuple[Node, ...]
    elements = attrib(converter=tuple)  # type: Tuple[PolygonElement, ...]
    boundary_edges = attrib(
        converter=tuple, default=Factory(tuple)
    )  # type: Tuple[BoundaryEdge, ...]

    _index = attrib(init=False, repr=False, eq=False)  # type: Dict[int, int]
    _xy = attrib(init=False, repr=False, eq=False)  # type: np.ndarray

    def __attrs_post_init__(self):
        index = {}
        for pos, node in enumerate(self.nodes):
            index.setdefault(node.id, pos)
        xy = np.array([(n.x, n.y) for n in self.nodes],
                      dtype=float).reshape(-1, 2)
        xy.setflags(write=False)
        object.__setattr__(self, "_index", index)
        object.__setattr__(self, "_xy", xy)

    @property
    def n_nodes(self):
        # type: () -> int
        return len(self.nodes)

    @property
    def node_ids(self):
        # type: () -> List[int]
        return [n.id for n in self.nodes]

    @property
    def xy(self):
        # type: () -> np.ndarray
        """(n_nodes, 2) coordinate array in node order"""
        return self._xy

    def node_index(self):
        # type: () -> Dict[int, int]
        """Node id to position in :attr:`nodes`"""
        return dict(self._index)

    def has_node(self, node_id):
        # type: (int) -> bool
        return node_id in self._index

    def positions(self, node_ids):
        # type: (Iterable[int]) -> np.ndarray
        try:
            return np.array([self._index[i] for i in node_ids], dtype=int)
        except KeyError as ex:
            raise GeometryError("Unknown node id {}".format(ex.args[0]))

    def coordinates(self, node_ids):
        # type: (Iterable[int]) -> np.ndarray
        return self._xy[self.positions(node_ids)]

    def element_coords(self, element):
        # type: (PolygonElement) -> np.ndarray
        return self.coordinates(element.node_ids)

    def element(self, element_id):
        # type: (int) -> PolygonElement
        for el in self.elements:
            if el.id == element_id:
                return el
        raise KeyError(element_id)

    def tags(self):
        # type: () -> List[str]
        return sorted(set(e.tag for e in self.boundary_edges))

    def edges_with_tag(self, tag):
        # type: (str) -> List[EdgeKey]
        return [e.nodes for e in self.boundary_edges if e.tag == tag]

    def nodes_with_tag(self, tag):
        # type: (str) -> List[int]
        ids = set()  # type: set
        for a, b in self.edges_with_tag(tag):
            ids.update((a, b))
        return sorted(ids)

    def diameter(self):
        # type: () -> float
        return diameter(self._xy)

    def area(self):
        # type: () -> float
        return sum(polygon_area_centroid(self.element_coords(el))[0]
                   for el in self.elements)


def polygon_area_centroid(polygon):
    # type: (Sequence[Point]) -> Tuple[float, Point]
    """Signed shoelace area and area centroid of a simple polygon.

    The area is positive for counter-clockwise vertex order.

    :raises GeometryError: fewer than three vertices or an area below
        tolerance

    """
    pts = np.asarray(polygon, dtype=float)
    if pts.ndim != 2 or len(pts) < 3:
        raise GeometryError("Polygon needs at least 3 vertices")
    # shift to the first vertex for round-off
    origin = pts[0]
    local = pts - origin
    x, y = local[:, 0], local[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = 0.5 * cross.sum()
    scale = diameter(pts) ** 2
    if abs(area) <= AREA_TOL * scale or not np.isfinite(area):
        raise GeometryError("Degenerate polygon", area=float(area))
    cx = ((x + xn) * cross).sum() / (6.0 * area)
    cy = ((y + yn) * cross).sum() / (6.0 * area)
    return float(area), (float(cx + origin[0]), float(cy + origin[1]))


def star_convex(polygon, center=None):
    # type: (Sequence[Point], Optional[Point]) -> bool
    """True when every edge is seen from ``center`` (default centroid)
    under a strictly positive angle, for a CCW polygon."""
    pts = np.asarray(polygon, dtype=float)
    if center is None:
        center = polygon_area_centroid(pts)[1]
    rel = pts - np.asarray(center)
    nxt = np.roll(rel, -1, axis=0)
    jac = rel[:, 0] * nxt[:, 1] - rel[:, 1] * nxt[:, 0]
    tol = AREA_TOL * diameter(pts) ** 2
    return bool(np.all(jac > tol))


@attrs
class ValidationReport(object):
    """Outcome of :func:`validate_mesh`.

    ``mesh`` is the input with clockwise elements re-ordered CCW, the only
    repair ever made.

    """
    mesh = attrib()  # type: PolygonMesh
    violations = attrib(default=Factory(list))  # type: List[str]
    warnings = attrib(default=Factory(list))  # type: List[str]

    @property
    def ok(self):
        # type: () -> bool
        return not self.violations


def validate_mesh(mesh):
    # type: (PolygonMesh) -> ValidationReport
    """Check ids, orientation, simplicity, star-convexity and conformity"""
    violations = []  # type: List[str]
    warnings = []  # type: List[str]

    seen = set()  # type: set
    for node in mesh.nodes:
        if node.id < 0:
            violations.append("node {}: negative id".format(node.id))
        if node.id in seen:
            violations.append("node {}: duplicate node id".format(node.id))
        seen.add(node.id)
        if not (np.isfinite(node.x) and np.isfinite(node.y)):
            violations.append("node {}: non-finite coordinates".format(
                node.id))

    tol = coincidence_tol(mesh)
    if mesh.n_nodes > 1 and np.all(np.isfinite(mesh.xy)):
        tree = cKDTree(mesh.xy)
        for i, j in sorted(tree.query_pairs(tol)):
            violations.append("nodes {} and {}: duplicate node at {}".format(
                mesh.nodes[i].id, mesh.nodes[j].id, tuple(mesh.xy[i])))

    elements = []
    element_ids = set()  # type: set
    for el in mesh.elements:
        if el.id in element_ids:
            violations.append("element {}: duplicate element id".format(
                el.id))
        element_ids.add(el.id)
        if len(el.node_ids) < 3:
            violations.append("element {}: fewer than 3 nodes".format(el.id))
            elements.append(el)
            continue
        if len(set(el.node_ids)) != len(el.node_ids):
            violations.append("element {}: repeated node id".format(el.id))
            elements.append(el)
            continue
        missing = [i for i in el.node_ids if not mesh.has_node(i)]
        if missing:
            violations.append("element {}: unknown nodes {}".format(
                el.id, missing))
            elements.append(el)
            continue
        coords = mesh.element_coords(el)
        try:
            area, centroid = polygon_area_centroid(coords)
        except GeometryError:
            violations.append("element {}: degenerate polygon".format(el.id))
            elements.append(el)
            continue
        if area < 0:
            warnings.append("element {}: clockwise, reordered".format(el.id))
            log.warn("Element orientation repaired", element=el.id)
            el = PolygonElement(el.id, el.node_ids[::-1], el.material_id)
            coords = coords[::-1]
        elements.append(el)
        if not LinearRing(coords).is_simple:
            violations.append("element {}: not a simple polygon".format(
                el.id))
        elif not star_convex(coords, centroid):
            violations.append(
                "element {}: not star-convex from its centroid".format(el.id))

    repaired = PolygonMesh(mesh.nodes, elements, mesh.boundary_edges)
    if not violations:
        violations.extend(_conformity(repaired, tol))
    return ValidationReport(repaired, violations, warnings)


def edge_usage(mesh):
    # type: (PolygonMesh) -> Dict[EdgeKey, List[int]]
    """Undirected edge key to the ids of the elements using it"""
    usage = defaultdict(list)  # type: Dict[EdgeKey, List[int]]
    for el in mesh.elements:
        for a, b in el.edges():
            usage[(min(a, b), max(a, b))].append(el.id)
    return usage


def _conformity(mesh, tol):
    # type: (PolygonMesh, float) -> List[str]
    violations = []
    usage = edge_usage(mesh)
    for (a, b), users in sorted(usage.items()):
        if len(users) > 2:
            violations.append("edge {}-{}: shared by {} elements".format(
                a, b, len(users)))

    # nodes lying inside another element's edge are hanging
    tree = cKDTree(mesh.xy)
    index = mesh.node_index()
    for (a, b) in sorted(usage):
        pa, pb = mesh.xy[index[a]], mesh.xy[index[b]]
        for pos in nodes_on_segment(tree, mesh.xy, pa, pb, tol):
            violations.append(
                "edge {}-{}: non-conforming, node {} lies on it".format(
                    a, b, mesh.nodes[pos].id))

    for edge in mesh.boundary_edges:
        a, b = edge.nodes
        key = (min(a, b), max(a, b))
        users = usage.get(key, [])
        if len(users) != 1:
            violations.append(
                "boundary edge {}-{} ({}): on {} elements".format(
                    a, b, edge.tag, len(users)))
    return violations


def nodes_on_segment(tree, xy, pa, pb, tol):
    # type: (cKDTree, np.ndarray, np.ndarray, np.ndarray, float) -> List[int]
    """Positions of nodes strictly between pa and pb, ordered along it"""
    length = float(np.linalg.norm(pb - pa))
    candidates = tree.query_ball_point(0.5 * (pa + pb), 0.5 * length + tol)
    d = pb - pa
    found = []
    for pos in candidates:
        p = xy[pos]
        t = float((p - pa) @ d) / (length * length)
        dist = abs(float(d[0] * (p[1] - pa[1]) - d[1] * (p[0] - pa[0]))) / \
            length
        if dist <= tol and tol < t * length < length - tol:
            found.append((t, pos))
    return [pos for _, pos in sorted(found)]


def require_valid(mesh):
    # type: (PolygonMesh) -> PolygonMesh
    """Validated (and orientation-repaired) mesh or MeshValidationError"""
    report = validate_mesh(mesh)
    if not report.ok:
        raise MeshValidationError(
            "Mesh failed validation: {}".format("; ".join(
                report.violations[:5])),
            violations=report.violations)
    return report.mesh


def coincidence_tol(mesh):
    # type: (PolygonMesh) -> float
    return GEOMETRY_TOL * (mesh.diameter() or 1.0)
