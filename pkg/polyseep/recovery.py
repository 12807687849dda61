"""Interior heads and Darcy fluxes from nodal solutions.

S-elements are evaluated semi-analytically from their modal data; any
other operator (the bilinear reference quads) supplies its own
``interpolate``.

"""
import numpy as np
from attr import (
    attrs,
    attrib,
)
from twisted.logger import Logger
from typing import (  # noqa
    Any,
    Callable,
    Dict,
    List,
    Mapping,
    Optional,
    Sequence,
    Tuple,
)

from polyseep import constants
from polyseep.element import SHAPE_DERIV, SElementOperator, shape  # noqa
from polyseep.exceptions import LocationError, SolverError
from polyseep.mesh import PolygonMesh, polygon_area_centroid  # noqa
from polyseep.model import MonitorPoint  # noqa

log = Logger()

# Exponents this close to 1 carry the gradient at the scaling center
UNIT_EXPONENT_TOL = 1e-6

# Allowed imaginary residue of recombined complex modes
IMAGINARY_TOL = 1e-10

# Edge parameter slack when a ray hits a polygon vertex
RAY_SLACK = 1e-9


@attrs(frozen=True, eq=False)
class ModalParticipation(object):
    """Integration constants of the bounded modes"""
    coefficients = attrib()  # type: np.ndarray

    @classmethod
    def from_heads(cls, op, heads):
        # type: (SElementOperator, Sequence[float]) -> ModalParticipation
        hb = np.asarray(heads, dtype=complex)
        return cls(np.linalg.solve(op.modal.psi_h, hb))

    def boundary_heads(self, op):
        # type: (SElementOperator) -> np.ndarray
        return (op.modal.psi_h @ self.coefficients).real


def _real(value, scale, what):
    value = np.asarray(value)
    if np.any(np.abs(value.imag) > IMAGINARY_TOL * scale):
        raise SolverError("{} has an imaginary residue".format(what),
                          residue=float(np.max(np.abs(value.imag))))
    return value.real


def recover_interior(op, heads, xi, edge, eta, participation=None):
    # type: (SElementOperator, Sequence[float], float, int, float, Optional[ModalParticipation]) -> Tuple[float, np.ndarray]  # noqa
    """Head and Darcy flux at (xi, eta) of sector ``edge``"""
    if not 0.0 <= xi <= 1.0:
        raise LocationError("Radial coordinate {} outside [0, 1]".format(xi))
    if participation is None:
        participation = ModalParticipation.from_heads(op, heads)
    c = participation.coefficients
    mu = op.modal.exponents
    psi = op.modal.psi_h
    a, b = op.geometry.edges()[edge]
    n_eta = shape(eta)
    phi = n_eta[0] * psi[a] + n_eta[1] * psi[b]
    phi_eta = SHAPE_DERIV[0] * psi[a] + SHAPE_DERIV[1] * psi[b]

    if xi == 0.0:
        power = (np.abs(mu) < UNIT_EXPONENT_TOL).astype(complex)
        dpower = (np.abs(mu - 1.0) < UNIT_EXPONENT_TOL).astype(complex)
    else:
        power = np.power(complex(xi), mu)
        dpower = np.power(complex(xi), mu - 1.0)

    scale = float(np.max(np.abs(heads))) or 1.0
    head = _real(np.sum(phi * power * c), scale, "Head")
    b1, b2, _ = op.geometry.edge_operators(edge, eta)
    radial = np.sum(dpower * c * mu * phi)
    circumferential = np.sum(dpower * c * phi_eta)
    grad = _real(b1 * radial + b2 * circumferential,
                 scale / np.sqrt(abs(op.geometry.area)), "Gradient")
    flux = -op.material.conductivity() @ grad
    return float(head), flux


@attrs(frozen=True)
class Location(object):
    """Containing element and its scaled boundary coordinates"""
    element_id = attrib()  # type: int
    xi = attrib()  # type: float
    edge = attrib()  # type: int
    eta = attrib()  # type: float


class PointLocator(object):
    """Point-in-polygon through the scaling-center ray.

    Elements are tried in id order so points on shared edges resolve to
    the lowest element id.

    """
    def __init__(self, mesh, tol=constants.LOCATION_TOL):
        # type: (PolygonMesh, float) -> None
        self.mesh = mesh
        self.tol = tol
        self._elements = sorted(mesh.elements, key=lambda e: e.id)
        self._rel = []  # type: List[np.ndarray]
        self._centers = []  # type: List[np.ndarray]
        boxes = []
        for el in self._elements:
            coords = mesh.element_coords(el)
            center = np.asarray(polygon_area_centroid(coords)[1])
            self._centers.append(center)
            self._rel.append(coords - center)
            boxes.append(np.concatenate([coords.min(axis=0),
                                         coords.max(axis=0)]))
        self._boxes = np.array(boxes).reshape(-1, 4)
        self._slack = constants.GEOMETRY_TOL * (mesh.diameter() or 1.0)

    def locate(self, point):
        # type: (Sequence[float]) -> Location
        p = np.asarray(point, dtype=float)
        box = self._boxes
        s = self._slack
        inside = np.nonzero((box[:, 0] - s <= p[0]) & (p[0] <= box[:, 2] + s) &
                            (box[:, 1] - s <= p[1]) & (p[1] <= box[:, 3] + s))
        for idx in inside[0]:
            loc = self._ray(idx, p)
            if loc is not None:
                return loc
        raise LocationError("Point ({}, {}) is outside the mesh".format(*p))

    def _ray(self, idx, p):
        # type: (int, np.ndarray) -> Optional[Location]
        el = self._elements[idx]
        rel = self._rel[idx]
        q = p - self._centers[idx]
        if np.linalg.norm(q) <= self._slack:
            return Location(el.id, 0.0, 0, -1.0)
        n = len(rel)
        for k in range(n):
            xa, xb = rel[k], rel[(k + 1) % n]
            A = np.column_stack([xa, xb - xa])
            det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
            if abs(det) <= self._slack ** 2:
                continue
            alpha, beta = np.linalg.solve(A, q)
            if alpha <= 0.0:
                continue
            t = beta / alpha
            if -RAY_SLACK <= t <= 1.0 + RAY_SLACK and \
                    alpha <= 1.0 + self.tol:
                t = min(max(t, 0.0), 1.0)
                return Location(el.id, float(min(alpha, 1.0)), k,
                                2.0 * t - 1.0)
        return None


def _heads(solution):
    return np.asarray(getattr(solution, "heads", solution), dtype=float)


def _element_heads(mesh, heads, element):
    return heads[mesh.positions(element.node_ids)]


def evaluate(mesh, operators, heads, location, point):
    # type: (PolygonMesh, Mapping[int, Any], np.ndarray, Location, Sequence[float]) -> Tuple[float, np.ndarray]  # noqa
    el = mesh.element(location.element_id)
    op = operators[el.id]
    hb = _element_heads(mesh, heads, el)
    if getattr(op, "modal", None) is not None:
        return recover_interior(op, hb, location.xi, location.edge,
                                location.eta)
    return op.interpolate(hb, point)


def sample_point(solution, mesh, operators, point, locator=None):
    # type: (Any, PolygonMesh, Mapping[int, Any], Sequence[float], Optional[PointLocator]) -> float  # noqa
    """Head at ``point`` of a solution field or head vector"""
    locator = locator or PointLocator(mesh)
    location = locator.locate(point)
    return evaluate(mesh, operators, _heads(solution), location, point)[0]


def sample_flux(solution, mesh, operators, point, locator=None):
    # type: (Any, PolygonMesh, Mapping[int, Any], Sequence[float], Optional[PointLocator]) -> np.ndarray  # noqa
    locator = locator or PointLocator(mesh)
    location = locator.locate(point)
    return evaluate(mesh, operators, _heads(solution), location, point)[1]


def monitor_sampler(mesh, monitors):
    # type: (PolygonMesh, Sequence[MonitorPoint]) -> Callable[[Mapping[int, Any]], Callable[[np.ndarray], Dict[str, float]]]  # noqa
    """Bind monitor points once; the result maps operators to a
    head-field sampler"""
    def bind(operators):
        locator = PointLocator(mesh)
        located = [(m, locator.locate((m.x, m.y))) for m in monitors]

        def sample(heads):
            return {m.name: evaluate(mesh, operators, heads, loc,
                                     (m.x, m.y))[0]
                    for m, loc in located}
        return sample
    return bind


def element_flux_vectors(mesh, operators, solution):
    # type: (PolygonMesh, Mapping[int, Any], Any) -> np.ndarray
    """Darcy flux per element, averaged over the sector midpoints at
    xi = 0.5, in mesh element order"""
    heads = _heads(solution)
    out = np.zeros((len(mesh.elements), 2))
    for row, el in enumerate(mesh.elements):
        op = operators[el.id]
        hb = _element_heads(mesh, heads, el)
        if getattr(op, "modal", None) is None:
            center = polygon_area_centroid(mesh.element_coords(el))[1]
            out[row] = op.interpolate(hb, center)[1]
            continue
        part = ModalParticipation.from_heads(op, hb)
        flux = [recover_interior(op, hb, 0.5, k, 0.0, part)[1]
                for k in range(op.n)]
        out[row] = np.mean(flux, axis=0)
    return out
