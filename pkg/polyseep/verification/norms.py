"""Error norms over polygon meshes.

Domain integrals use a triangle fan from each element's scaling center
with the 3-point edge-interior rule on every triangle, evaluating the
semi-analytic interior head.

"""
import numpy as np
from typing import (  # noqa
    Any,
    Callable,
    Iterator,
    Mapping,
    Sequence,
    Tuple,
    Union,
)

from polyseep.exceptions import VerificationFailure
from polyseep.mesh import PolygonMesh, polygon_area_centroid  # noqa
from polyseep.recovery import (
    ModalParticipation,
    recover_interior,
)

# barycentric (center, a, b) points, weight 1/3 each
FAN_POINTS = np.array([
    [2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0],
    [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
    [1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0],
])
FAN_WEIGHT = 1.0 / 3.0

Reference = Union[np.ndarray, Callable[[float, float], float]]


def fan_quadrature(mesh):
    # type: (PolygonMesh) -> Iterator[Tuple[Any, int, float, float, np.ndarray, float]]  # noqa
    """Yield (element, edge, xi, eta, point, weight) over the whole mesh"""
    for el in mesh.elements:
        coords = mesh.element_coords(el)
        center = np.asarray(polygon_area_centroid(coords)[1])
        n = len(coords)
        for k in range(n):
            a, b = coords[k], coords[(k + 1) % n]
            area = 0.5 * abs((a[0] - center[0]) * (b[1] - center[1]) -
                             (a[1] - center[1]) * (b[0] - center[0]))
            for l0, l1, l2 in FAN_POINTS:
                xi = l1 + l2
                eta = 2.0 * l2 / xi - 1.0
                point = l0 * center + l1 * a + l2 * b
                yield el, k, xi, eta, point, FAN_WEIGHT * area


class FieldEvaluator(object):
    """Interior head of a nodal field, element participations cached"""
    def __init__(self, mesh, operators, heads):
        # type: (PolygonMesh, Mapping[int, Any], Sequence[float]) -> None
        self.mesh = mesh
        self.operators = operators
        self.heads = np.asarray(heads, dtype=float)
        self._cache = {}  # type: dict

    def __call__(self, element, edge, xi, eta, point):
        op = self.operators[element.id]
        hb = self.heads[self.mesh.positions(element.node_ids)]
        if getattr(op, "modal", None) is None:
            return op.interpolate(hb, point)[0]
        part = self._cache.get(element.id)
        if part is None:
            part = self._cache[element.id] = \
                ModalParticipation.from_heads(op, hb)
        return recover_interior(op, hb, xi, edge, eta, part)[0]


def l2_relative_error(mesh, operators, heads, reference,
                      reference_operators=None):
    # type: (PolygonMesh, Mapping[int, Any], Sequence[float], Reference, Any) -> float  # noqa
    """sqrt(int (h - h_ref)^2) / sqrt(int h_ref^2).

    ``reference`` is an analytic ``f(x, y)`` or a nodal field on the same
    mesh, recovered with ``reference_operators`` (default ``operators``).

    """
    field = FieldEvaluator(mesh, operators, heads)
    if callable(reference):
        def ref(el, k, xi, eta, point):
            return float(reference(point[0], point[1]))
    else:
        if len(reference) != mesh.n_nodes:
            raise VerificationFailure(
                "Reference field does not match the mesh")
        ref = FieldEvaluator(mesh, reference_operators or operators,
                             reference)

    num = 0.0
    den = 0.0
    for el, k, xi, eta, point, w in fan_quadrature(mesh):
        r = ref(el, k, xi, eta, point)
        diff = field(el, k, xi, eta, point) - r
        num += w * diff * diff
        den += w * r * r
    if den == 0.0:
        raise VerificationFailure("Reference field has zero norm")
    return float(np.sqrt(num / den))


def pointwise_relative_error(values, reference):
    # type: (Sequence[float], Sequence[float]) -> float
    """||v - v_ref||_2 / ||v_ref||_2 over a set of monitor values"""
    v = np.asarray(values, dtype=float)
    r = np.asarray(reference, dtype=float)
    if v.shape != r.shape:
        raise VerificationFailure("Monitor value counts differ")
    den = np.linalg.norm(r)
    if den == 0.0:
        raise VerificationFailure("Reference values have zero norm")
    return float(np.linalg.norm(v - r) / den)


def max_nodal_error(mesh, heads, exact):
    # type: (PolygonMesh, Sequence[float], Callable[[float, float], float]) -> float  # noqa
    expected = np.array([exact(x, y) for x, y in mesh.xy])
    return float(np.max(np.abs(np.asarray(heads) - expected)))
