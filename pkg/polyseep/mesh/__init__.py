"""Polygon mesh types, validation and quadtree generation"""
from polyseep.mesh.core import (  # noqa
    BoundaryEdge,
    Node,
    PolygonElement,
    PolygonMesh,
    ValidationReport,
    polygon_area_centroid,
    require_valid,
    star_convex,
    validate_mesh,
)
from polyseep.mesh.quadtree import (  # noqa
    QuadtreeSpec,
    RefineRegion,
    build_quadtree_mesh,
    generate_quadtree,
    polygonize_hanging_nodes,
    rectangle_mesh,
)
