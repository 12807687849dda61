"""Seepage model: mesh, materials, boundary conditions and schedules"""
import math

import attr
import numpy as np
from attr import (
    attrs,
    attrib,
    Factory,
)
from twisted.logger import Logger
from typing import (  # noqa
    Dict,
    List,
    Optional,
    Sequence,
    Tuple,
    Union,
)

from polyseep.exceptions import (
    DanglingReferenceError,
    ModelError,
)
from polyseep.mesh import PolygonElement, PolygonMesh  # noqa
from polyseep.mesh.core import edge_usage
from polyseep.types import EdgeKey  # noqa

log = Logger()

STEADY_START = "steady"


@attrs(frozen=True)
class Material(object):
    """Diagonal permeability and specific storage"""
    kx = attrib(converter=float)  # type: float
    ky = attrib(converter=float)  # type: float
    ss = attrib(default=0.0, converter=float)  # type: float

    def __attrs_post_init__(self):
        if not (self.kx > 0 and self.ky > 0):
            raise ModelError("Permeability must be positive",
                             kx=self.kx, ky=self.ky)
        if not self.ss >= 0:
            raise ModelError("Specific storage must be non-negative",
                             ss=self.ss)
        if not all(map(math.isfinite, (self.kx, self.ky, self.ss))):
            raise ModelError("Material values must be finite")

    def conductivity(self):
        # type: () -> np.ndarray
        return np.diag([self.kx, self.ky])


def _knots(knots):
    return tuple((float(t), float(h)) for t, h in knots)


@attrs(frozen=True)
class Schedule(object):
    """Piecewise-linear head against time, held flat outside its knots"""
    knots = attrib(converter=_knots)  # type: Tuple[Tuple[float, float], ...]

    def __attrs_post_init__(self):
        if not self.knots:
            raise ModelError("Schedule needs at least one knot")
        times = [t for t, _ in self.knots]
        if any(b <= a for a, b in zip(times[:-1], times[1:])):
            raise ModelError("Schedule times must be strictly increasing")
        if not all(math.isfinite(v) for k in self.knots for v in k):
            raise ModelError("Schedule knots must be finite")

    def __call__(self, t):
        # type: (float) -> float
        ts, hs = zip(*self.knots)
        return float(np.interp(t, ts, hs))

    def covers(self, t_end):
        # type: (float) -> bool
        return self.knots[0][0] <= 0.0 and self.knots[-1][0] >= t_end


def _node_tuple(nodes):
    return tuple(int(n) for n in nodes)


def _edge_tuple(edges):
    return tuple((int(a), int(b)) for a, b in edges)


def _optional_float(value):
    return None if value is None else float(value)


@attrs(frozen=True)
class DirichletSet(object):
    """Prescribed head on nodes, fixed or following a schedule"""
    name = attrib(converter=str)  # type: str
    nodes = attrib(converter=_node_tuple)  # type: Tuple[int, ...]
    value = attrib(default=None,
                   converter=_optional_float)  # type: Optional[float]
    schedule = attrib(default=None)  # type: Optional[str]

    def __attrs_post_init__(self):
        if (self.value is None) == (self.schedule is None):
            raise ModelError(
                "Dirichlet set {!r} needs exactly one of value or schedule"
                .format(self.name))

    def head(self, t, schedules):
        # type: (float, Dict[str, Schedule]) -> float
        if self.schedule is None:
            return self.value
        return schedules[self.schedule](t)


@attrs(frozen=True)
class FluxSet(object):
    """Prescribed inflow per unit boundary length on edges"""
    name = attrib(converter=str)  # type: str
    edges = attrib(converter=_edge_tuple)  # type: Tuple[EdgeKey, ...]
    value = attrib(converter=float)  # type: float


@attrs(frozen=True)
class MonitorPoint(object):
    name = attrib(converter=str)  # type: str
    x = attrib(converter=float)  # type: float
    y = attrib(converter=float)  # type: float


def _initial_head(value):
    if isinstance(value, str):
        if value != STEADY_START:
            raise ModelError("initial_head must be a number, a list or "
                             "{!r}".format(STEADY_START))
        return value
    if isinstance(value, (list, tuple, np.ndarray)):
        return tuple(float(v) for v in value)
    return float(value)


@attrs(frozen=True)
class TransientSettings(object):
    """Backward-Euler marching parameters"""
    t_end = attrib(converter=float)  # type: float
    dt = attrib(converter=float)  # type: float
    initial_head = attrib(
        default=0.0, converter=_initial_head
    )  # type: Union[float, Tuple[float, ...], str]
    output_stride = attrib(default=1, converter=int)  # type: int

    def __attrs_post_init__(self):
        if not self.dt > 0:
            raise ModelError("Time step must be positive", dt=self.dt)
        if not self.t_end >= self.dt:
            raise ModelError("t_end must be at least one time step",
                             t_end=self.t_end, dt=self.dt)
        if self.output_stride < 1:
            raise ModelError("output_stride must be at least 1")

    def times(self):
        # type: () -> List[float]
        """Step end times dt, 2dt, ... closing exactly on t_end"""
        n = int(math.ceil(self.t_end / self.dt * (1.0 - 1e-12)))
        times = [k * self.dt for k in range(1, n)]
        times.append(self.t_end)
        return times


@attrs(frozen=True)
class SeepageModel(object):
    """A complete, cross-checked problem definition"""
    mesh = attrib()  # type: PolygonMesh
    materials = attrib(converter=dict)  # type: Dict[str, Material]
    dirichlet_sets = attrib(
        default=Factory(tuple), converter=tuple
    )  # type: Tuple[DirichletSet, ...]
    flux_sets = attrib(
        default=Factory(tuple), converter=tuple
    )  # type: Tuple[FluxSet, ...]
    schedules = attrib(
        default=Factory(dict), converter=dict
    )  # type: Dict[str, Schedule]
    transient = attrib(default=None)  # type: Optional[TransientSettings]
    monitors = attrib(
        default=Factory(tuple), converter=tuple
    )  # type: Tuple[MonitorPoint, ...]
    title = attrib(default="")  # type: str
    # note for humans, never used to convert
    units = attrib(default="")  # type: str

    def __attrs_post_init__(self):
        check_references(self)

    def material_for(self, element):
        # type: (PolygonElement) -> Material
        return self.materials[element.material_id]

    def dirichlet_at(self, t=0.0):
        # type: (float) -> Tuple[np.ndarray, np.ndarray]
        """Constrained node ids (sorted) and their heads at time ``t``.

        Later sets override earlier ones on shared nodes.

        """
        heads = {}  # type: Dict[int, float]
        for dset in self.dirichlet_sets:
            value = dset.head(t, self.schedules)
            for node in dset.nodes:
                heads[node] = value
        ids = np.array(sorted(heads), dtype=int)
        return ids, np.array([heads[i] for i in ids], dtype=float)

    def with_overrides(self, dt=None, t_end=None, monitors=None):
        # type: (Optional[float], Optional[float], Optional[Sequence[MonitorPoint]]) -> SeepageModel  # noqa
        """Copy with time stepping and monitor overrides applied"""
        changes = {}
        if dt is not None or t_end is not None:
            if self.transient is None:
                raise ModelError("Time overrides given for a steady model")
            changes["transient"] = attr.evolve(
                self.transient,
                dt=self.transient.dt if dt is None else dt,
                t_end=self.transient.t_end if t_end is None else t_end)
        if monitors:
            changes["monitors"] = tuple(monitors)
        return attr.evolve(self, **changes) if changes else self


def check_references(model):
    # type: (SeepageModel) -> None
    """Raise DanglingReferenceError for any unresolved reference"""
    mesh = model.mesh
    for el in mesh.elements:
        if el.material_id not in model.materials:
            raise DanglingReferenceError(
                "Element {} refers to missing material {!r}".format(
                    el.id, el.material_id))
    for dset in model.dirichlet_sets:
        missing = [n for n in dset.nodes if not mesh.has_node(n)]
        if missing:
            raise DanglingReferenceError(
                "Dirichlet set {!r} refers to missing nodes {}".format(
                    dset.name, missing))
        if dset.schedule is not None and \
                dset.schedule not in model.schedules:
            raise DanglingReferenceError(
                "Dirichlet set {!r} refers to missing schedule {!r}".format(
                    dset.name, dset.schedule))
    if model.flux_sets:
        usage = edge_usage(mesh)
        for fset in model.flux_sets:
            for a, b in fset.edges:
                if len(usage.get((min(a, b), max(a, b)), [])) != 1:
                    raise DanglingReferenceError(
                        "Flux set {!r}: {}-{} is not a boundary edge".format(
                            fset.name, a, b))
    if model.transient is not None:
        init = model.transient.initial_head
        if isinstance(init, tuple) and len(init) != mesh.n_nodes:
            raise ModelError(
                "initial_head lists {} values for {} nodes".format(
                    len(init), mesh.n_nodes))
        for name, sched in model.schedules.items():
            if not sched.covers(model.transient.t_end):
                raise ModelError(
                    "Schedule {!r} does not cover [0, {}]".format(
                        name, model.transient.t_end))
