"""Global assembly, steady solves and backward-Euler time marching.

Dirichlet conditions are eliminated: constrained rows and columns are
removed and their contribution moved to the right-hand side. Reaction
fluxes are ``K h - Q`` at the constrained dofs.

"""
import time

import numpy as np
import scipy.sparse
import scipy.sparse.linalg
from attr import (
    attrs,
    attrib,
    Factory,
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
from polyseep.exceptions import (
    AssemblyError,
    InvalidConfig,
    SingularSystemError,
    SolverError,
)
from polyseep.mesh import PolygonMesh  # noqa
from polyseep.metrics import IMetrics, SinkMetrics  # noqa
from polyseep.model import STEADY_START, SeepageModel  # noqa
from polyseep.utils import elapsed_ms

log = Logger()

# Constrained dof positions and their values
Constraint = Tuple[np.ndarray, np.ndarray]


@attrs(frozen=True, eq=False)
class GlobalSystem(object):
    """Assembled sparse stiffness and mass, immutable once built"""
    K = attrib()  # type: scipy.sparse.csr_matrix
    M = attrib()  # type: scipy.sparse.csr_matrix
    dof_map = attrib()  # type: Dict[int, int]

    @property
    def n_dof(self):
        # type: () -> int
        return self.K.shape[0]

    def dofs(self, node_ids):
        # type: (Sequence[int]) -> np.ndarray
        try:
            return np.array([self.dof_map[n] for n in node_ids], dtype=int)
        except KeyError as ex:
            raise AssemblyError("Node {} has no dof".format(ex.args[0]))


def assemble_global(mesh, operators):
    # type: (PolygonMesh, Mapping[int, Any]) -> GlobalSystem
    """Scatter-add element stiffness and mass in mesh node order.

    ``operators`` maps element id to anything with ``stiffness`` and
    ``mass`` arrays ordered like the element's node loop.

    """
    dof_map = mesh.node_index()
    rows = []  # type: List[np.ndarray]
    cols = []  # type: List[np.ndarray]
    kvals = []  # type: List[np.ndarray]
    mvals = []  # type: List[np.ndarray]
    for el in mesh.elements:
        op = operators.get(el.id)
        if op is None:
            raise AssemblyError("Element {} was not formed".format(el.id))
        if len(set(el.node_ids)) != len(el.node_ids):
            raise AssemblyError(
                "Element {} maps two local nodes to one dof".format(el.id))
        geometry = getattr(op, "geometry", None)
        op_map = getattr(geometry, "dof_map", None)
        if op_map is not None and tuple(op_map) != tuple(el.node_ids):
            raise AssemblyError(
                "Element {} operator belongs to nodes {}".format(
                    el.id, list(op_map)))
        if op.stiffness.shape != (len(el.node_ids),) * 2:
            raise AssemblyError(
                "Element {} operator has the wrong size".format(el.id))
        dofs = np.array([dof_map[n] for n in el.node_ids], dtype=int)
        r, c = np.meshgrid(dofs, dofs, indexing="ij")
        rows.append(r.ravel())
        cols.append(c.ravel())
        kvals.append(np.asarray(op.stiffness, dtype=float).ravel())
        mvals.append(np.asarray(op.mass, dtype=float).ravel())

    n = mesh.n_nodes
    if rows:
        row, col = np.concatenate(rows), np.concatenate(cols)
        kdata, mdata = np.concatenate(kvals), np.concatenate(mvals)
    else:
        row = col = np.zeros(0, dtype=int)
        kdata = mdata = np.zeros(0)
    K = scipy.sparse.coo_matrix((kdata, (row, col)), shape=(n, n)).tocsr()
    M = scipy.sparse.coo_matrix((mdata, (row, col)), shape=(n, n)).tocsr()
    # exact symmetry regardless of summation order
    K = ((K + K.T) * 0.5).tocsr()
    M = ((M + M.T) * 0.5).tocsr()
    K.sort_indices()
    M.sort_indices()
    log.debug("Assembled global system", n_dof=n, nnz=int(K.nnz))
    return GlobalSystem(K, M, dof_map)


def flux_load(model, system, t=0.0):
    # type: (SeepageModel, GlobalSystem, float) -> np.ndarray
    """Edge inflow lumped half to each end node"""
    Q = np.zeros(system.n_dof)
    mesh = model.mesh
    for fset in model.flux_sets:
        for a, b in fset.edges:
            pa, pb = mesh.coordinates((a, b))
            share = 0.5 * fset.value * float(np.linalg.norm(pb - pa))
            Q[system.dof_map[a]] += share
            Q[system.dof_map[b]] += share
    return Q


def model_constraint(model, system, t=0.0):
    # type: (SeepageModel, GlobalSystem, float) -> Constraint
    ids, values = model.dirichlet_at(t)
    dofs = system.dofs(ids)
    order = np.argsort(dofs, kind="stable")
    return dofs[order], values[order]


def _free(n, fixed):
    # type: (int, np.ndarray) -> np.ndarray
    mask = np.ones(n, dtype=bool)
    mask[fixed] = False
    return np.nonzero(mask)[0]


def _factorize(matrix):
    # type: (scipy.sparse.spmatrix) -> Callable[[np.ndarray], np.ndarray]
    if matrix.shape[0] == 0:
        return lambda rhs: np.zeros(0)
    try:
        lu = scipy.sparse.linalg.splu(matrix.tocsc())
    except RuntimeError as ex:
        raise SingularSystemError("Singular system matrix: {}".format(ex))
    return lu.solve


def _eliminate(A, rhs, fixed, values, solve=None):
    # type: (scipy.sparse.csr_matrix, np.ndarray, np.ndarray, np.ndarray, Optional[Callable]) -> np.ndarray  # noqa
    """Solve ``A h = rhs`` with ``h[fixed] = values`` by elimination"""
    n = A.shape[0]
    free = _free(n, fixed)
    h = np.zeros(n)
    h[fixed] = values
    A_free = A[free]
    b = rhs[free] - A_free[:, fixed] @ values
    if solve is None:
        solve = _factorize(A_free[:, free])
    h[free] = solve(b)
    if not np.all(np.isfinite(h)):
        raise SingularSystemError("Solve produced non-finite heads")
    return h


def _residual(A, h, rhs, free):
    # type: (scipy.sparse.csr_matrix, np.ndarray, np.ndarray, np.ndarray) -> float  # noqa
    """Relative residual on the unconstrained rows"""
    r = (A @ h - rhs)[free]
    if not len(r):
        return 0.0
    scale = (abs(A).sum(axis=1).max() * np.abs(h).max() +
             np.abs(rhs).max())
    if scale == 0.0:
        return 0.0
    return float(np.abs(r).max() / scale)


@attrs(frozen=True, eq=False)
class SolutionField(object):
    """Nodal heads with reaction fluxes at the constrained dofs"""
    heads = attrib()  # type: np.ndarray
    fixed = attrib(default=Factory(lambda: np.zeros(0, dtype=int)))
    reactions = attrib(default=Factory(lambda: np.zeros(0)))
    t = attrib(default=0.0)  # type: float
    residual = attrib(default=0.0)  # type: float

    def reaction_total(self):
        # type: () -> float
        return float(np.sum(self.reactions))


def solve_steady(system, constraint, Q=None):
    # type: (GlobalSystem, Constraint, Optional[np.ndarray]) -> SolutionField
    """Solve ``K h = Q`` with the given Dirichlet constraint"""
    fixed, values = constraint
    fixed = np.asarray(fixed, dtype=int)
    values = np.asarray(values, dtype=float)
    if not len(fixed):
        raise SingularSystemError(
            "Steady solve needs at least one Dirichlet node")
    Q = np.zeros(system.n_dof) if Q is None else np.asarray(Q, dtype=float)
    start = time.time()
    h = _eliminate(system.K, Q, fixed, values)
    residual = _residual(system.K, h, Q, _free(system.n_dof, fixed))
    if residual > constants.STEADY_RESIDUAL_TOL:
        raise SolverError("Steady residual too large", residual=residual)
    reactions = (system.K @ h - Q)[fixed]
    log.info("Steady solve", n_dof=system.n_dof, fixed=len(fixed),
             residual=residual, ms=round(elapsed_ms(start), 3))
    return SolutionField(h, fixed, reactions, 0.0, residual)


def maximum_principle_excess(solution):
    # type: (SolutionField) -> float
    """How far any head strays outside the Dirichlet head range"""
    if not len(solution.fixed):
        return 0.0
    bounds = solution.heads[solution.fixed]
    lo, hi = bounds.min(), bounds.max()
    h = solution.heads
    return float(max(0.0, lo - h.min(), h.max() - hi))


def reaction_imbalance(system, solution):
    # type: (GlobalSystem, SolutionField) -> float
    """Net reaction flux relative to ||K|| ||h||"""
    scale = scipy.sparse.linalg.norm(system.K) * \
        np.linalg.norm(solution.heads)
    if scale == 0.0:
        return 0.0
    return abs(solution.reaction_total()) / scale


def report_steady(system, solution):
    # type: (GlobalSystem, SolutionField) -> Dict[str, float]
    diag = {"max_principle_excess": maximum_principle_excess(solution),
            "reaction_imbalance": reaction_imbalance(system, solution)}
    log.info("Steady diagnostics", diagnostics=diag)
    return diag


class TransientStepper(object):
    """Backward-Euler steps with the effective matrix factored once per
    (dt, constraint set)"""
    def __init__(self, system, metrics=None, reuse=True):
        # type: (GlobalSystem, Optional[IMetrics], bool) -> None
        self.system = system
        self.metrics = metrics or SinkMetrics()
        self.reuse = reuse
        self._key = None  # type: Optional[Tuple[float, Tuple[int, ...]]]
        self._solve = None  # type: Optional[Callable]
        self._effective = None  # type: Optional[scipy.sparse.csr_matrix]
        self.factorizations = 0

    def _prepare(self, dt, fixed):
        key = (float(dt), tuple(int(i) for i in fixed))
        if self.reuse and key == self._key:
            self.metrics.increment("solver.factorization_reuse")
            return
        start = time.time()
        A = (self.system.K + self.system.M * (1.0 / dt)).tocsr()
        free = _free(self.system.n_dof, fixed)
        try:
            self._solve = _factorize(A[free][:, free])
        except SingularSystemError:
            raise SingularSystemError(
                "Singular effective matrix", dt=dt, fixed=len(fixed))
        self._effective = A
        self._key = key
        self.factorizations += 1
        elapsed = elapsed_ms(start)
        self.metrics.timing("solver.factorize", elapsed)
        log.debug("Factored effective matrix", dt=dt, fixed=len(fixed),
                  ms=round(elapsed, 3))

    def step(self, dt, h_t, constraint, Q=None):
        # type: (float, np.ndarray, Constraint, Optional[np.ndarray]) -> np.ndarray  # noqa
        if not dt > 0:
            raise InvalidConfig("Time step must be positive", dt=dt)
        fixed, values = constraint
        fixed = np.asarray(fixed, dtype=int)
        values = np.asarray(values, dtype=float)
        start = time.time()
        self._prepare(dt, fixed)
        n = self.system.n_dof
        rhs = self.system.M @ np.asarray(h_t, dtype=float) * (1.0 / dt)
        if Q is not None:
            rhs = rhs + Q
        h = _eliminate(self._effective, rhs, fixed, values, self._solve)
        if n:
            self.metrics.timing("solver.step", elapsed_ms(start))
        return h

    def reactions(self, h, dt, h_t, fixed, Q=None):
        # type: (np.ndarray, float, np.ndarray, np.ndarray, Optional[np.ndarray]) -> np.ndarray  # noqa
        """Boundary inflow at constrained dofs, storage change included"""
        r = self.system.K @ h + self.system.M @ (h - h_t) * (1.0 / dt)
        if Q is not None:
            r = r - Q
        return r[fixed]


def step_transient(system, dt, h_t, constraint, Q=None):
    # type: (GlobalSystem, float, np.ndarray, Constraint, Optional[np.ndarray]) -> np.ndarray  # noqa
    """One backward-Euler step from ``h_t`` to ``h_{t+dt}``"""
    return TransientStepper(system).step(dt, h_t, constraint, Q)


@attrs(frozen=True, eq=False)
class SolutionHistory(object):
    """Stored output steps and monitor traces.

    ``monitors`` hold one value per entry of ``times``.

    """
    times = attrib()  # type: np.ndarray
    fields = attrib()  # type: List[np.ndarray]
    reactions = attrib(default=Factory(list))  # type: List[np.ndarray]
    monitors = attrib(default=Factory(dict))  # type: Dict[str, np.ndarray]
    fixed = attrib(default=Factory(lambda: np.zeros(0, dtype=int)))

    @property
    def final(self):
        # type: () -> np.ndarray
        return self.fields[-1]

    def __len__(self):
        return len(self.times)


def initial_field(model, system, metrics=None):
    # type: (SeepageModel, GlobalSystem, Optional[IMetrics]) -> np.ndarray
    """Initial heads with the t = 0 Dirichlet values imposed"""
    init = model.transient.initial_head
    constraint = model_constraint(model, system, 0.0)
    if init == STEADY_START:
        return solve_steady(system, constraint,
                            flux_load(model, system, 0.0)).heads
    if isinstance(init, tuple):
        # listed in mesh node order
        h = np.array(init, dtype=float)
    else:
        h = np.full(system.n_dof, float(init))
    fixed, values = constraint
    h[fixed] = values
    return h


def run_transient(model, system, sampler=None, metrics=None, reuse=True):
    # type: (SeepageModel, GlobalSystem, Optional[Callable[[np.ndarray], Dict[str, float]]], Optional[IMetrics], bool) -> SolutionHistory  # noqa
    """March from t = 0 to ``t_end``.

    ``sampler`` maps a head field to monitor values; it is called on every
    stored step.

    """
    settings = model.transient
    if settings is None:
        raise InvalidConfig("Model has no transient settings")
    metrics = metrics or SinkMetrics()
    stepper = TransientStepper(system, metrics, reuse=reuse)
    h = initial_field(model, system, metrics)
    fixed0, _ = model_constraint(model, system, 0.0)

    times = [0.0]
    fields = [h]
    reactions = [np.zeros(len(fixed0))]
    traces = []  # type: List[Dict[str, float]]
    if sampler is not None:
        traces.append(sampler(h))

    step_times = settings.times()
    start = time.time()
    t_prev = 0.0
    for k, t in enumerate(step_times, 1):
        dt = t - t_prev
        constraint = model_constraint(model, system, t)
        Q = flux_load(model, system, t) if model.flux_sets else None
        h_new = stepper.step(dt, h, constraint, Q)
        if k % settings.output_stride == 0 or k == len(step_times):
            times.append(t)
            fields.append(h_new)
            reactions.append(
                stepper.reactions(h_new, dt, h, constraint[0], Q))
            if sampler is not None:
                traces.append(sampler(h_new))
        h, t_prev = h_new, t

    monitors = {}  # type: Dict[str, np.ndarray]
    for name in (traces[0] if traces else {}):
        monitors[name] = np.array([tr[name] for tr in traces])
    log.info("Transient run", steps=len(step_times), stored=len(times),
             factorizations=stepper.factorizations,
             ms=round(elapsed_ms(start), 3))
    return SolutionHistory(np.array(times), fields, reactions, monitors,
                           fixed0)


def formulation_operators(model, formulation="sbfem", metrics=None,
                          **kwargs):
    # type: (SeepageModel, str, Optional[IMetrics], **Any) -> Dict[int, Any]
    """Element operators of the named discretization"""
    if formulation == "sbfem":
        from polyseep.element import form_elements
        return form_elements(model, metrics=metrics, **kwargs)
    if formulation == "fem":
        from polyseep.verification.fem import form_fem_elements
        return form_fem_elements(model)
    raise InvalidConfig("Unknown formulation {!r}".format(formulation))


@attrs(frozen=True, eq=False)
class ModelSolution(object):
    """Everything a run produced for one model"""
    model = attrib()  # type: SeepageModel
    system = attrib()  # type: GlobalSystem
    operators = attrib()  # type: Dict[int, Any]
    steady = attrib(default=None)  # type: Optional[SolutionField]
    history = attrib(default=None)  # type: Optional[SolutionHistory]

    @property
    def final(self):
        # type: () -> np.ndarray
        if self.history is not None:
            return self.history.final
        return self.steady.heads


def solve_model(model, formulation="sbfem", metrics=None, sampler=None,
                **kwargs):
    # type: (SeepageModel, str, Optional[IMetrics], Optional[Callable], **Any) -> ModelSolution  # noqa
    """Form, assemble and solve ``model``, transient when it says so.

    ``sampler`` takes the operators and returns a head-field sampler for
    monitor traces.

    """
    ops = formulation_operators(model, formulation, metrics, **kwargs)
    system = assemble_global(model.mesh, ops)
    if model.transient is None:
        steady = solve_steady(system, model_constraint(model, system),
                              flux_load(model, system))
        if not model.flux_sets:
            report_steady(system, steady)
        return ModelSolution(model, system, ops, steady=steady)
    fn = sampler(ops) if sampler is not None else None
    history = run_transient(model, system, fn, metrics)
    return ModelSolution(model, system, ops, history=history)
