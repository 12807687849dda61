"""Bilinear quadrilateral reference discretization.

Conductivity ``int B^T k B`` and consistent storage ``int N^T Ss N`` with
2x2 Gauss. Assembly, boundary conditions and time stepping are the
solver's own.

"""
import numpy as np
from attr import (
    attrs,
    attrib,
)
from typing import (  # noqa
    Any,
    Dict,
    Optional,
    Sequence,
    Tuple,
)

from polyseep.element import GAUSS_POINTS, GAUSS_WEIGHTS
from polyseep.exceptions import GeometryError, ModelError
from polyseep.metrics import IMetrics  # noqa
from polyseep.model import Material, SeepageModel  # noqa
from polyseep.solver import ModelSolution, solve_model  # noqa

# natural coordinates of the corners, counter-clockwise
CORNERS = np.array([[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]])

NEWTON_ITERATIONS = 25


def q4_shape(r, s):
    # type: (float, float) -> Tuple[np.ndarray, np.ndarray]
    """Shape values (4,) and natural derivatives (2, 4)"""
    n = 0.25 * (1.0 + CORNERS[:, 0] * r) * (1.0 + CORNERS[:, 1] * s)
    dn = np.array([
        0.25 * CORNERS[:, 0] * (1.0 + CORNERS[:, 1] * s),
        0.25 * CORNERS[:, 1] * (1.0 + CORNERS[:, 0] * r),
    ])
    return n, dn


@attrs(frozen=True, eq=False)
class BilinearQuad(object):
    stiffness = attrib()  # type: np.ndarray
    mass = attrib()  # type: np.ndarray
    coords = attrib()  # type: np.ndarray
    material = attrib()  # type: Material

    def natural(self, point):
        # type: (Sequence[float]) -> np.ndarray
        """Invert the bilinear map by Newton iteration"""
        p = np.asarray(point, dtype=float)
        rs = np.zeros(2)
        for _ in range(NEWTON_ITERATIONS):
            n, dn = q4_shape(*rs)
            residual = n @ self.coords - p
            jac = dn @ self.coords
            step = np.linalg.solve(jac.T, residual)
            rs = rs - step
            if np.max(np.abs(step)) < 1e-14:
                break
        return np.clip(rs, -1.0, 1.0)

    def interpolate(self, heads, point):
        # type: (Sequence[float], Sequence[float]) -> Tuple[float, np.ndarray]
        hb = np.asarray(heads, dtype=float)
        n, dn = q4_shape(*self.natural(point))
        jac = dn @ self.coords
        grad = np.linalg.solve(jac, dn @ hb)
        return float(n @ hb), -self.material.conductivity() @ grad


def bilinear_quad(coords, material):
    # type: (Any, Material) -> BilinearQuad
    coords = np.asarray(coords, dtype=float)
    if coords.shape != (4, 2):
        raise ModelError("Bilinear reference needs 4-node elements")
    k = material.conductivity()
    K = np.zeros((4, 4))
    M = np.zeros((4, 4))
    for r, wr in zip(GAUSS_POINTS, GAUSS_WEIGHTS):
        for s, ws in zip(GAUSS_POINTS, GAUSS_WEIGHTS):
            n, dn = q4_shape(r, s)
            jac = dn @ coords
            det = np.linalg.det(jac)
            if det <= 0:
                raise GeometryError("Inverted quadrilateral", det=det)
            B = np.linalg.solve(jac, dn)
            K += wr * ws * det * B.T @ k @ B
            M += wr * ws * det * material.ss * np.outer(n, n)
    return BilinearQuad(0.5 * (K + K.T), 0.5 * (M + M.T), coords, material)


def form_fem_elements(model):
    # type: (SeepageModel) -> Dict[int, BilinearQuad]
    mesh = model.mesh
    ops = {}
    for el in mesh.elements:
        if len(el.node_ids) != 4:
            raise ModelError(
                "Element {} has {} nodes, the bilinear reference needs 4"
                .format(el.id, len(el.node_ids)), element=el.id)
        ops[el.id] = bilinear_quad(mesh.element_coords(el),
                                   model.material_for(el))
    return ops


def fem_reference(model, metrics=None, sampler=None):
    # type: (SeepageModel, Optional[IMetrics], Any) -> ModelSolution
    """Steady field or transient history on an all-quadrilateral mesh"""
    return solve_model(model, "fem", metrics=metrics, sampler=sampler)
