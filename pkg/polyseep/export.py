"""Legacy ASCII VTK and CSV writers.

Output is byte-stable: floats are written with ``repr`` and fields in the
order given.

"""
import io
import os

import numpy as np
from twisted.logger import Logger
from typing import (  # noqa
    Dict,
    List,
    Mapping,
    Optional,
    Sequence,
)

from polyseep.exceptions import InvalidConfig
from polyseep.mesh import PolygonMesh  # noqa

log = Logger()

VTK_POLYGON = 7  # VTK cell type for a general polygon
VTK_TITLE = "polyseep output"


def _num(value):
    # type: (float) -> str
    return repr(float(value))


def _name(name):
    # type: (str) -> str
    return "_".join(str(name).split()) or "field"


def vtk_text(mesh, fields, cell_vectors=None):
    # type: (PolygonMesh, Mapping[str, Sequence[float]], Optional[Mapping[str, np.ndarray]]) -> str  # noqa
    """Render ``mesh`` with nodal scalar ``fields`` and optional
    cell-centered vectors"""
    n = mesh.n_nodes
    for name, values in fields.items():
        if len(values) != n:
            raise InvalidConfig(
                "Field {!r} has {} values for {} nodes".format(
                    name, len(values), n))
    lines = [
        "# vtk DataFile Version 3.0",
        VTK_TITLE,
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        "POINTS {} double".format(n),
    ]
    lines.extend("{} {} 0.0".format(_num(x), _num(y)) for x, y in mesh.xy)

    cells = [mesh.positions(el.node_ids) for el in mesh.elements]
    size = sum(len(c) + 1 for c in cells)
    lines.append("CELLS {} {}".format(len(cells), size))
    lines.extend(" ".join(str(v) for v in [len(c)] + c.tolist())
                 for c in cells)
    lines.append("CELL_TYPES {}".format(len(cells)))
    lines.extend(str(VTK_POLYGON) for _ in cells)

    if fields:
        lines.append("POINT_DATA {}".format(n))
        for name, values in fields.items():
            lines.append("SCALARS {} double 1".format(_name(name)))
            lines.append("LOOKUP_TABLE default")
            lines.extend(_num(v) for v in values)

    if cell_vectors:
        lines.append("CELL_DATA {}".format(len(cells)))
        for name, vectors in cell_vectors.items():
            vectors = np.asarray(vectors, dtype=float).reshape(-1, 2)
            if len(vectors) != len(cells):
                raise InvalidConfig(
                    "Vectors {!r} do not match the cell count".format(name))
            lines.append("VECTORS {} double".format(_name(name)))
            lines.extend("{} {} 0.0".format(_num(vx), _num(vy))
                         for vx, vy in vectors)
    return "\n".join(lines) + "\n"


def _write(path, text):
    # type: (str, str) -> str
    with io.open(path, "w", encoding="ascii", newline="\n") as f:
        f.write(text)
    return path


def export_vtk(mesh, fields, path, cell_vectors=None):
    # type: (PolygonMesh, Mapping[str, Sequence[float]], str, Optional[Mapping[str, np.ndarray]]) -> str  # noqa
    """Write a legacy VTK file, returning its path"""
    _write(path, vtk_text(mesh, fields, cell_vectors))
    log.debug("Wrote VTK", path=path, nodes=mesh.n_nodes)
    return path


def step_filename(stem, step, total, suffix="vtk"):
    # type: (str, int, int, str) -> str
    width = max(4, len(str(max(total - 1, 0))))
    return "{}_{:0{}d}.{}".format(stem, step, width, suffix)


def export_history(mesh, times, fields, directory, stem="heads",
                   cell_vectors=None, output_format="vtk"):
    # type: (PolygonMesh, Sequence[float], Sequence[np.ndarray], str, str, Optional[Sequence[np.ndarray]], str) -> List[str]  # noqa
    """One VTK (or heads CSV) file per stored step plus a
    ``<stem>_steps.csv`` index"""
    paths = []
    index = ["step,t,file"]
    total = len(fields)
    for step, (t, heads) in enumerate(zip(times, fields)):
        name = step_filename(stem, step, total, output_format)
        path = os.path.join(directory, name)
        index.append("{},{},{}".format(step, _num(t), name))
        if output_format == "csv":
            paths.append(write_heads_csv(path, mesh, heads))
            continue
        vectors = None
        if cell_vectors is not None:
            vectors = {"flux": cell_vectors[step]}
        paths.append(export_vtk(mesh, {"head": heads}, path, vectors))
    _write(os.path.join(directory, "{}_steps.csv".format(stem)),
           "\n".join(index) + "\n")
    return paths


def monitor_csv_text(times, traces):
    # type: (Sequence[float], Mapping[str, Sequence[float]]) -> str
    names = list(traces)
    lines = [",".join(["t"] + names)]
    for k, t in enumerate(times):
        lines.append(",".join([_num(t)] +
                              [_num(traces[name][k]) for name in names]))
    return "\n".join(lines) + "\n"


def write_monitor_csv(path, times, traces):
    # type: (str, Sequence[float], Mapping[str, Sequence[float]]) -> str
    """Monitor traces with header ``t,<name>...``"""
    return _write(path, monitor_csv_text(times, traces))


def write_heads_csv(path, mesh, heads):
    # type: (str, PolygonMesh, Sequence[float]) -> str
    lines = ["node,x,y,head"]
    for node, h in zip(mesh.nodes, heads):
        lines.append("{},{},{},{}".format(node.id, _num(node.x),
                                          _num(node.y), _num(h)))
    return _write(path, "\n".join(lines) + "\n")


def read_heads_csv(path):
    # type: (str) -> Dict[int, float]
    """Node id to head from a file written by :func:`write_heads_csv`"""
    heads = {}
    with io.open(path, encoding="ascii") as f:
        header = f.readline().strip()
        if header != "node,x,y,head":
            raise InvalidConfig("{} is not a heads file".format(path))
        for lineno, line in enumerate(f, 2):
            if not line.strip():
                continue
            try:
                node, _, _, head = line.strip().split(",")
                heads[int(node)] = float(head)
            except ValueError:
                raise InvalidConfig(
                    "{}: line {} is malformed".format(path, lineno))
    return heads
