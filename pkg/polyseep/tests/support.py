import io
import json
import os

import meshio
from twisted.logger import ILogObserver
from zope.interface import implementer

from polyseep.mesh import (
    BoundaryEdge,
    Node,
    PolygonElement,
    PolygonMesh,
    rectangle_mesh,
)
from polyseep.model import (
    DirichletSet,
    Material,
    SeepageModel,
    TransientSettings,
)
from polyseep.tests import fixture_path

SIDES = ("bottom", "right", "top", "left")

# the pentagon of the polygon deck, nodes 2, 3, 4, 8, 7
PENTAGON = [(1.0, 0.0), (2.0, 0.0), (3.0, 0.0), (3.0, 2.0), (1.5, 2.0)]

UNIT_SQUARE = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]


@implementer(ILogObserver)
class _TestingLogObserver(object):
    def __init__(self):
        self._events = []

    def __call__(self, event):
        self._events.append(event)

    def __len__(self):
        return len(self._events)

    def logged(self, predicate):
        """Determine if any log events satisfy the callable"""
        assert callable(predicate)
        return any(predicate(e) for e in self._events)

    def formats(self):
        return [e.get("log_format") for e in self._events]


def one_square():
    """Unit square as one element, nodes numbered row by row"""
    return rectangle_mesh(0.0, 0.0, 1.0, 1.0, 1, 1, tags=SIDES)


def square_pair():
    """Two unit squares side by side sharing the edge 2-5"""
    nodes = [Node(1, 0, 0), Node(2, 1, 0), Node(3, 2, 0),
             Node(4, 0, 1), Node(5, 1, 1), Node(6, 2, 1)]
    elements = [PolygonElement(1, (1, 2, 5, 4)),
                PolygonElement(2, (2, 3, 6, 5))]
    edges = [BoundaryEdge((1, 2), "bottom"), BoundaryEdge((2, 3), "bottom"),
             BoundaryEdge((3, 6), "right"), BoundaryEdge((6, 5), "top"),
             BoundaryEdge((5, 4), "top"), BoundaryEdge((4, 1), "left")]
    return PolygonMesh(nodes, elements, edges)


def column(layers=2, top=10.0, bottom=0.0, ss=0.0, transient=None,
           material=None):
    """Unit-width column of unit squares, heads on top and bottom"""
    mesh = rectangle_mesh(0.0, 0.0, 1.0, float(layers), 1, layers,
                          tags=SIDES)
    return SeepageModel(
        mesh, {"default": material or Material(1.0, 1.0, ss)},
        [DirichletSet("top", mesh.nodes_with_tag("top"), top),
         DirichletSet("bottom", mesh.nodes_with_tag("bottom"), bottom)],
        transient=transient)


def transient_column(t_end=50.0, dt=10.0, initial_head=0.0, stride=1):
    return column(ss=1.0, transient=TransientSettings(
        t_end, dt, initial_head, stride))


def read_fixture(name):
    with io.open(fixture_path(name), encoding="utf8") as f:
        return f.read()


def write_json(directory, name, data):
    path = os.path.join(directory, name)
    with io.open(path, "w", encoding="utf8") as f:
        f.write(json.dumps(data))
    return path


def vtk_point_data(path, name="head"):
    """Scalar values of ``name`` from a legacy VTK file"""
    return [float(v) for v in meshio.read(path).point_data[name]]
