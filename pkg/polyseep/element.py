"""S-element operators.

Each polygon is described from its area centroid (the scaling center) by
its straight boundary edges with linear shape functions. From the boundary
integrals E0, E1, E2 and M0 the Hamiltonian matrix is formed and
decomposed; the bounded branch gives the steady stiffness and the
low-frequency mass.

Exponent convention: the head field inside an element is
``N(eta) * sum_i psi_h[:, i] * xi**mu_i * c_i`` with ``Re(mu_i) >= 0``.

"""
import io
import os
import time

import attr
import numpy as np
import scipy.linalg
from attr import (
    attrs,
    attrib,
    Factory,
)
from twisted.logger import Logger
from typing import (  # noqa
    Any,
    Dict,
    Optional,
    Sequence,
    Tuple,
)

from polyseep import constants
from polyseep.exceptions import (
    ElementDecompositionError,
    GeometryError,
    MassSolveError,
)
from polyseep.mesh.core import polygon_area_centroid
from polyseep.metrics import IMetrics, SinkMetrics  # noqa
from polyseep.model import Material, SeepageModel  # noqa
from polyseep.utils import diameter, elapsed_ms, format_matrix

log = Logger()

# 2-point Gauss-Legendre on [-1, 1]
GAUSS_POINTS = np.array([-1.0, 1.0]) / np.sqrt(3.0)
GAUSS_WEIGHTS = np.array([1.0, 1.0])


def shape(eta):
    # type: (float) -> np.ndarray
    return np.array([0.5 * (1.0 - eta), 0.5 * (1.0 + eta)])


SHAPE_DERIV = np.array([-0.5, 0.5])


@attrs(frozen=True, eq=False)
class ScaledBoundaryGeometry(object):
    """Boundary nodes relative to the scaling center, CCW.

    Edge ``k`` runs from local node ``k`` to ``k + 1`` (wrapping).

    """
    scaling_center = attrib()  # type: Tuple[float, float]
    coords = attrib()  # type: np.ndarray
    dof_map = attrib(default=None)  # type: Optional[Tuple[int, ...]]
    area = attrib(default=0.0)  # type: float

    @classmethod
    def from_polygon(cls, polygon, dof_map=None):
        # type: (Any, Optional[Sequence[int]]) -> ScaledBoundaryGeometry
        pts = np.asarray(polygon, dtype=float)
        area, center = polygon_area_centroid(pts)
        if area < 0:
            raise GeometryError("Element vertices must be counter-clockwise")
        rel = pts - np.asarray(center)
        rel.setflags(write=False)
        geom = cls(center, rel,
                   None if dof_map is None else tuple(dof_map), area)
        jac = geom.edge_jacobians()
        tol = constants.AREA_TOL * diameter(pts) ** 2
        bad = np.nonzero(jac <= tol)[0]
        if len(bad):
            raise GeometryError(
                "Scaling center does not see edges {}".format(bad.tolist()),
                jacobians=jac.tolist())
        return geom

    @property
    def n(self):
        # type: () -> int
        return len(self.coords)

    def edges(self):
        n = self.n
        return [(k, (k + 1) % n) for k in range(n)]

    def edge_jacobians(self):
        # type: () -> np.ndarray
        """|J_b| per edge, the area of triangle (center, a, b)"""
        a = self.coords
        b = np.roll(self.coords, -1, axis=0)
        return 0.5 * (a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0])

    def edge_operators(self, k, eta):
        # type: (int, float) -> Tuple[np.ndarray, np.ndarray, float]
        """b1, b2 and |J_b| of edge ``k`` at ``eta``"""
        a, b = self.edges()[k]
        xa, xb = self.coords[a], self.coords[b]
        n = shape(eta)
        xy = n[0] * xa + n[1] * xb
        d = 0.5 * (xb - xa)
        jac = xy[0] * d[1] - xy[1] * d[0]
        b1 = np.array([d[1], -d[0]]) / jac
        b2 = np.array([-xy[1], xy[0]]) / jac
        return b1, b2, jac


@attrs(frozen=True, eq=False)
class CoefficientMatrices(object):
    E0 = attrib()  # type: np.ndarray
    E1 = attrib()  # type: np.ndarray
    E2 = attrib()  # type: np.ndarray
    M0 = attrib()  # type: np.ndarray


@attrs(frozen=True, eq=False)
class ModalData(object):
    """Bounded branch of the Hamiltonian eigenproblem.

    Column ``i`` of ``psi_h``/``psi_q`` is the head/flux part of the mode
    with exponent ``exponents[i]``. ``spectrum`` holds every eigenvalue of
    Z_p.

    """
    exponents = attrib()  # type: np.ndarray
    psi_h = attrib()  # type: np.ndarray
    psi_q = attrib()  # type: np.ndarray
    condition = attrib(default=1.0)  # type: float
    spectrum = attrib(default=None)  # type: Optional[np.ndarray]
    constant_mode = attrib(default=True)  # type: bool


@attrs(frozen=True, eq=False)
class SElementOperator(object):
    """Formed S-element"""
    stiffness = attrib()  # type: np.ndarray
    mass = attrib()  # type: np.ndarray
    modal = attrib()  # type: ModalData
    geometry = attrib()  # type: ScaledBoundaryGeometry
    coefficients = attrib()  # type: CoefficientMatrices
    diagnostics = attrib(default=Factory(dict))  # type: Dict[str, float]
    material = attrib(default=None)  # type: Optional[Material]

    @property
    def n(self):
        # type: () -> int
        return self.geometry.n


def element_coefficients(geometry, material):
    # type: (ScaledBoundaryGeometry, Material) -> CoefficientMatrices
    """Boundary integrals E0, E1, E2 and M0, 2-point Gauss per edge"""
    n = geometry.n
    k = material.conductivity()
    E0 = np.zeros((n, n))
    E1 = np.zeros((n, n))
    E2 = np.zeros((n, n))
    M0 = np.zeros((n, n))
    for edge, (a, b) in enumerate(geometry.edges()):
        idx = np.ix_([a, b], [a, b])
        for eta, w in zip(GAUSS_POINTS, GAUSS_WEIGHTS):
            b1, b2, jac = geometry.edge_operators(edge, eta)
            if jac <= 0:
                raise GeometryError("Non-positive boundary Jacobian",
                                    edge=edge)
            n_eta = shape(eta)
            B1 = np.outer(b1, n_eta)
            B2 = np.outer(b2, SHAPE_DERIV)
            E0[idx] += w * jac * B1.T @ k @ B1
            E1[idx] += w * jac * B2.T @ k @ B1
            E2[idx] += w * jac * B2.T @ k @ B2
            M0[idx] += w * jac * material.ss * np.outer(n_eta, n_eta)
    # integrands are symmetric; remove round-off
    E0 = 0.5 * (E0 + E0.T)
    E2 = 0.5 * (E2 + E2.T)
    M0 = 0.5 * (M0 + M0.T)
    return CoefficientMatrices(E0, E1, E2, M0)


def build_hamiltonian(coefficients):
    # type: (CoefficientMatrices) -> np.ndarray
    """Z_p = [[-E0^-1 E1^T, E0^-1], [E2 - E1 E0^-1 E1^T, E1 E0^-1]]"""
    E0, E1, E2 = coefficients.E0, coefficients.E1, coefficients.E2
    n = E0.shape[0]
    try:
        cho = scipy.linalg.cho_factor(E0)
    except np.linalg.LinAlgError:
        raise ElementDecompositionError("E0 is not positive definite")
    e0_inv = scipy.linalg.cho_solve(cho, np.eye(n))
    e0_inv_e1t = scipy.linalg.cho_solve(cho, E1.T)
    Z = np.empty((2 * n, 2 * n))
    Z[:n, :n] = -e0_inv_e1t
    Z[:n, n:] = e0_inv
    Z[n:, :n] = E2 - E1 @ e0_inv_e1t
    Z[n:, n:] = E1 @ e0_inv
    return Z


def modal_decomposition(Z, zero_tol=constants.ZERO_MODE_TOL,
                        condition_limit=constants.CONDITION_LIMIT):
    # type: (np.ndarray, float, float) -> ModalData
    """Select the n modes bounded at the scaling center.

    The decay form ``-Z`` is decomposed; eigenvalues ``lam`` with
    ``Re(lam) <= 0`` are kept and ``mu = -lam``. The defective double zero
    contributes one mode, the constant head with zero flux.

    """
    n = Z.shape[0] // 2
    lam, vecs = scipy.linalg.eig(-Z)
    radius = float(np.max(np.abs(lam))) or 1.0
    near_zero = np.abs(lam) < zero_tol * radius
    stable = np.nonzero((lam.real < -zero_tol * radius) & ~near_zero)[0]
    need = n - len(stable)
    diagnostics = {"radius": radius, "stable": len(stable),
                   "near_zero": int(near_zero.sum())}
    if need not in (0, 1) or (need == 1 and not near_zero.any()):
        raise ElementDecompositionError(
            "Selected {} modes for {} nodes".format(len(stable) + 1, n),
            diagnostics=diagnostics)

    order = stable[np.lexsort((lam[stable].imag, -lam[stable].real))]
    modes = vecs[:, order].astype(complex)
    mu = -lam[order]
    if need:
        zero_idx = np.nonzero(near_zero)[0]
        flux_norm = np.linalg.norm(vecs[n:, zero_idx], axis=0)
        pick = zero_idx[np.argmin(flux_norm)]
        head = vecs[:n, pick]
        head_norm = np.linalg.norm(head)
        ones = np.ones(n) / np.sqrt(n)
        # head part must be the constant vector
        if head_norm < zero_tol or abs(
                abs(np.vdot(ones, head)) / head_norm - 1.0) > \
                np.sqrt(zero_tol):
            raise ElementDecompositionError(
                "Zero mode is not the constant head",
                diagnostics=diagnostics)
        const = np.concatenate([ones, np.zeros(n)]).astype(complex)
        modes = np.column_stack([const, modes])
        mu = np.concatenate([[0.0], mu])

    modes = modes / np.linalg.norm(modes, axis=0)
    psi_h, psi_q = modes[:n], modes[n:]
    condition = float(np.linalg.cond(psi_h))
    diagnostics["condition"] = condition
    if not np.isfinite(condition) or condition > condition_limit:
        raise ElementDecompositionError(
            "Head eigenvector block is ill-conditioned",
            diagnostics=diagnostics)
    spectrum = -lam
    return ModalData(mu, psi_h, psi_q, condition, spectrum, bool(need))


def _realify(matrix, what):
    # type: (np.ndarray, str) -> np.ndarray
    scale = np.linalg.norm(matrix.real) or 1.0
    residue = np.linalg.norm(matrix.imag) / scale
    real = matrix.real
    asym = np.linalg.norm(real - real.T) / scale
    if residue > constants.REALNESS_TOL or asym > constants.REALNESS_TOL:
        raise ElementDecompositionError(
            "{} is not real symmetric".format(what),
            diagnostics={"imaginary": float(residue),
                         "asymmetry": float(asym)})
    return 0.5 * (real + real.T)


def steady_stiffness(modal):
    # type: (ModalData) -> np.ndarray
    """K_st = psi_q psi_h^-1, realness and symmetry checked"""
    K = np.linalg.solve(modal.psi_h.T, modal.psi_q.T).T
    return _realify(K, "Steady stiffness")


def mass_matrix(modal, M0):
    # type: (ModalData, np.ndarray) -> np.ndarray
    """Low-frequency mass M = Phi^-T m Phi^-1 with
    m_ij = (Phi^T M0 Phi)_ij / (2 + mu_i + mu_j)"""
    phi = modal.psi_h
    if not np.any(M0):
        return np.zeros_like(M0)
    r = phi.T @ M0 @ phi
    mu = modal.exponents
    m = r / (2.0 + mu[:, None] + mu[None, :])
    left = np.linalg.solve(phi.T, m)
    M = np.linalg.solve(phi.T, left.T).T
    return _realify(M, "Mass matrix")


def mass_residual(stiffness, mass, coefficients):
    # type: (np.ndarray, np.ndarray, CoefficientMatrices) -> float
    """Frobenius norm of
    (K - E1) E0^-1 M + M E0^-1 (K - E1^T) + 2 M - M0"""
    c = coefficients
    left = np.linalg.solve(c.E0, (stiffness - c.E1.T)).T
    right = np.linalg.solve(c.E0, stiffness - c.E1.T)
    R = left @ mass + mass @ right + 2.0 * mass - c.M0
    return float(np.linalg.norm(R))


def mass_matrix_sylvester(stiffness, coefficients):
    # type: (np.ndarray, CoefficientMatrices) -> np.ndarray
    """The same mass from a direct Sylvester solve, A M + M A^T = M0"""
    c = coefficients
    n = c.E0.shape[0]
    A = np.eye(n) + np.linalg.solve(c.E0, stiffness - c.E1.T).T
    M = scipy.linalg.solve_sylvester(A, A.T, c.M0)
    return 0.5 * (M + M.T)


def form_element(polygon, material, dof_map=None,
                 zero_tol=constants.ZERO_MODE_TOL,
                 condition_limit=constants.CONDITION_LIMIT):
    # type: (Any, Material, Optional[Sequence[int]], float, float) -> SElementOperator  # noqa
    """Geometry through mass for one polygon"""
    geometry = ScaledBoundaryGeometry.from_polygon(polygon, dof_map)
    coefficients = element_coefficients(geometry, material)
    Z = build_hamiltonian(coefficients)
    modal = modal_decomposition(Z, zero_tol, condition_limit)
    K = steady_stiffness(modal)
    M = mass_matrix(modal, coefficients.M0)
    residual = mass_residual(K, M, coefficients)
    m0_norm = np.linalg.norm(coefficients.M0)
    if residual > constants.MASS_RESIDUAL_TOL * max(m0_norm, 1e-300):
        raise MassSolveError("Mass equation residual too large",
                             diagnostics={"residual": residual,
                                          "m0_norm": float(m0_norm)})
    diagnostics = {"condition": modal.condition,
                   "mass_residual": residual}
    return SElementOperator(K, M, modal, geometry, coefficients,
                            diagnostics, material)


def dump_element(element_id, op):
    # type: (Any, SElementOperator) -> str
    """Plain-text matrices of one element for offline comparison"""
    parts = ["element {}\n".format(element_id)]
    c = op.coefficients
    for name, matrix in (("E0", c.E0), ("E1", c.E1), ("E2", c.E2),
                         ("M0", c.M0), ("K", op.stiffness), ("M", op.mass)):
        parts.append(format_matrix(name, matrix))
    return "".join(parts)


class ElementCache(object):
    """Operators keyed on relative geometry and material.

    Quadtree meshes repeat a handful of cell shapes, each formed once.

    """
    def __init__(self, tol):
        # type: (float) -> None
        self.tol = tol
        self._ops = {}  # type: Dict[Any, SElementOperator]
        self.hits = 0
        self.misses = 0

    def key(self, polygon, material):
        pts = np.asarray(polygon, dtype=float)
        rel = pts - pts.mean(axis=0)
        q = np.round(rel / self.tol).astype(np.int64)
        return (material, tuple(q.ravel()))

    def get(self, polygon, material, dof_map, **kwargs):
        # type: (Any, Material, Sequence[int], **Any) -> SElementOperator
        key = self.key(polygon, material)
        op = self._ops.get(key)
        if op is None:
            self.misses += 1
            op = form_element(polygon, material, dof_map, **kwargs)
            self._ops[key] = op
            return op
        self.hits += 1
        center = polygon_area_centroid(polygon)[1]
        return attr.evolve(op, geometry=attr.evolve(
            op.geometry, scaling_center=center, dof_map=tuple(dof_map)))


def form_elements(model, use_cache=True, metrics=None, debug_dir=None,
                  **kwargs):
    # type: (SeepageModel, bool, Optional[IMetrics], Optional[str], **Any) -> Dict[int, SElementOperator]  # noqa
    """Operators of every element of ``model`` keyed by element id"""
    metrics = metrics or SinkMetrics()
    mesh = model.mesh
    cache = ElementCache(constants.GEOMETRY_TOL * (mesh.diameter() or 1.0))
    start = time.time()
    ops = {}
    for el in mesh.elements:
        coords = mesh.element_coords(el)
        material = model.material_for(el)
        try:
            if use_cache:
                op = cache.get(coords, material, el.node_ids, **kwargs)
            else:
                op = form_element(coords, material, el.node_ids, **kwargs)
        except ElementDecompositionError as ex:
            ex.element_id = el.id
            raise
        except GeometryError as ex:
            raise GeometryError("Element {}: {}".format(el.id, ex),
                                element=el.id)
        ops[el.id] = op
    elapsed = elapsed_ms(start)
    metrics.timing("element.form", elapsed)
    metrics.increment("element.cache_hit", cache.hits)
    log.info("Formed elements", elements=len(ops), cache_hits=cache.hits,
             distinct=cache.misses, ms=round(elapsed, 3))
    if debug_dir:
        write_element_dumps(ops, debug_dir)
    return ops


def write_element_dumps(ops, directory):
    # type: (Dict[int, SElementOperator], str) -> None
    if not os.path.isdir(directory):
        os.makedirs(directory)
    for eid, op in sorted(ops.items()):
        path = os.path.join(directory, "element_{:06d}.txt".format(eid))
        with io.open(path, "w", encoding="utf8") as f:
            f.write(dump_element(eid, op))
