"""Named verification suites and the benchmark models they run"""
import attr
import numpy as np
import scipy.linalg
import scipy.sparse
from twisted.logger import Logger
from typing import (  # noqa
    Callable,
    Dict,
    List,
    Optional,
    Sequence,
    Tuple,
)

from polyseep.constants import IMPERMEABLE_TAG
from polyseep.exceptions import InvalidConfig
from polyseep.mesh import (  # noqa
    PolygonMesh,
    QuadtreeSpec,
    RefineRegion,
    build_quadtree_mesh,
    generate_quadtree,
    rectangle_mesh,
)
from polyseep.model import (
    STEADY_START,
    DirichletSet,
    Material,
    MonitorPoint,
    Schedule,
    SeepageModel,
    TransientSettings,
)
from polyseep.recovery import PointLocator, monitor_sampler, sample_point
from polyseep.solver import (
    GlobalSystem,
    assemble_global,
    formulation_operators,
    model_constraint,
    solve_model,
)
from polyseep.verification.fem import fem_reference
from polyseep.verification.norms import max_nodal_error
from polyseep.verification.ode import (
    backward_euler,
    history_error,
    ode_oracle,
    time_order_study,
)
from polyseep.verification.study import (
    VerificationReport,
    convergence_study,
)

log = Logger()

UNIT_SQUARE = ((0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0))
SIDES = ("bottom", "right", "top", "left")

# Hole aligned with the 1/64 quadtree level
INCLUSION_HOLE = ((21 / 64.0, 21 / 64.0), (43 / 64.0, 21 / 64.0),
                  (43 / 64.0, 43 / 64.0), (21 / 64.0, 43 / 64.0))

DAM_BLOCK = ((0.0, 0.0), (40.0, 0.0), (40.0, 20.0), (0.0, 20.0))
DAM_RAMP_END = 100.0

# Largest step-to-step rise of the relative monitor gap allowed once the
# upstream ramp has ended
DAM_GAP_RISE_TOL = 2.5e-4


def patch_field(x, y):
    # type: (float, float) -> float
    return 1.0 + 2.0 * x + 3.0 * y


def harmonic_field(x, y):
    # type: (float, float) -> float
    return float(np.sin(np.pi * x) * np.sinh(np.pi * y) / np.sinh(np.pi))


def boundary_nodes(mesh):
    # type: (PolygonMesh) -> List[int]
    ids = set()  # type: set
    for edge in mesh.boundary_edges:
        ids.update(edge.nodes)
    return sorted(ids)


def prescribed_model(mesh, exact, material=None):
    # type: (PolygonMesh, Callable[[float, float], float], Optional[Material]) -> SeepageModel  # noqa
    """Steady model with ``exact`` imposed on every boundary node"""
    sets = []
    for node_id in boundary_nodes(mesh):
        x, y = mesh.coordinates([node_id])[0]
        sets.append(DirichletSet("n{}".format(node_id), [node_id],
                                 exact(x, y)))
    materials = {el.material_id: material or Material(1.0, 1.0)
                 for el in mesh.elements}
    return SeepageModel(mesh, materials, sets)


def patch_mesh():
    # type: () -> PolygonMesh
    """Unit square with squares and polygonized pentagons"""
    return build_quadtree_mesh(QuadtreeSpec(
        UNIT_SQUARE, max_depth=3, min_depth=2, edge_tags=SIDES,
        refine_regions=[RefineRegion([(0.3, 0.3)], 3)]))


def column_model(layers=2, top=10.0, bottom=0.0, ss=0.0, transient=None):
    # type: (int, float, float, float, Optional[TransientSettings]) -> SeepageModel  # noqa
    """Unit-width column of ``layers`` unit squares, heads on top and
    bottom"""
    mesh = rectangle_mesh(0.0, 0.0, 1.0, float(layers), 1, layers,
                          tags=SIDES)
    return SeepageModel(
        mesh, {"default": Material(1.0, 1.0, ss)},
        [DirichletSet("top", mesh.nodes_with_tag("top"), top),
         DirichletSet("bottom", mesh.nodes_with_tag("bottom"), bottom)],
        transient=transient)


def harmonic_family(size):
    # type: (float) -> Tuple[SeepageModel, Callable[[float, float], float]]
    n = int(round(1.0 / size))
    mesh = rectangle_mesh(0.0, 0.0, 1.0, 1.0, n, n, tags=SIDES)
    return prescribed_model(mesh, harmonic_field), harmonic_field


def inclusion_model(spec):
    # type: (QuadtreeSpec) -> SeepageModel
    """Unit square around an impermeable square hole, head 1 on top and
    0 on the bottom, impermeable sides"""
    mesh = build_quadtree_mesh(spec)
    return SeepageModel(
        mesh, {"default": Material(1.0, 1.0)},
        [DirichletSet("top", mesh.nodes_with_tag("top"), 1.0),
         DirichletSet("bottom", mesh.nodes_with_tag("bottom"), 0.0)])


def inclusion_specs():
    # type: () -> Tuple[QuadtreeSpec, QuadtreeSpec]
    """Graded polygon mesh and the uniform all-square reference mesh"""
    graded = QuadtreeSpec(UNIT_SQUARE, max_depth=6, min_depth=5,
                          boundary_depth=6, holes=[INCLUSION_HOLE],
                          edge_tags=SIDES)
    uniform = attr.evolve(graded, min_depth=6, boundary_depth=None)
    return graded, uniform


def dam_mesh():
    # type: () -> PolygonMesh
    """Quadtree mesh of the dam block, 2.5 m cells along the upstream face
    and 5 m cells elsewhere"""
    return build_quadtree_mesh(QuadtreeSpec(
        DAM_BLOCK, max_depth=4, min_depth=3, edge_tags=SIDES,
        refine_regions=[RefineRegion([DAM_BLOCK[0], DAM_BLOCK[3]], 4)]))


def dam_reference_mesh():
    # type: () -> PolygonMesh
    """Uniform 2.5 m quadrilaterals for the bilinear reference"""
    return rectangle_mesh(0.0, 0.0, 40.0, 20.0, 16, 8, tags=SIDES)


def dam_model(mesh=None):
    # type: (Optional[PolygonMesh]) -> SeepageModel
    """40 m by 20 m anisotropic block, upstream head ramped 10 to 30 over
    the first 100 s, downstream held at 5"""
    if mesh is None:
        mesh = dam_mesh()
    return SeepageModel(
        mesh, {"default": Material(0.001, 0.0005, 0.001)},
        [DirichletSet("upstream", mesh.nodes_with_tag("left"),
                      schedule="ramp"),
         DirichletSet("downstream", mesh.nodes_with_tag("right"), 5.0)],
        schedules={"ramp": Schedule([(0.0, 10.0), (100.0, 30.0),
                                     (3000.0, 30.0)])},
        transient=TransientSettings(3000.0, 10.0, STEADY_START),
        monitors=[MonitorPoint("P", 20.0, 10.0)],
        title="dam analog")


def largest_rise(times, values, t_from):
    # type: (np.ndarray, np.ndarray, float) -> float
    """Largest increase between successive ``values`` from ``t_from`` on,
    0 when they never increase"""
    tail = np.asarray(values)[np.asarray(times) >= t_from]
    if len(tail) < 2:
        return 0.0
    return max(0.0, float(np.max(np.diff(tail))))


def final_steady(model):
    # type: (SeepageModel) -> SeepageModel
    """Steady model with every Dirichlet set frozen at its t_end value"""
    t_end = model.transient.t_end
    sets = [DirichletSet(d.name, d.nodes, d.head(t_end, model.schedules))
            for d in model.dirichlet_sets]
    return attr.evolve(model, dirichlet_sets=sets, transient=None)


def patch_suite():
    # type: () -> VerificationReport
    report = VerificationReport("patch")
    mesh = patch_mesh()
    model = prescribed_model(mesh, patch_field)
    solution = solve_model(model)
    heads = solution.steady.heads
    report.check("sbfem max nodal error",
                 max_nodal_error(mesh, heads, patch_field), 1e-10)
    rng = np.random.RandomState(0)
    locator = PointLocator(mesh)
    worst = 0.0
    for x, y in rng.uniform(0.01, 0.99, size=(50, 2)):
        h = sample_point(heads, mesh, solution.operators, (x, y), locator)
        worst = max(worst, abs(h - patch_field(x, y)))
    report.check("sbfem max interior error", worst, 1e-10)

    quads = prescribed_model(
        rectangle_mesh(0.0, 0.0, 1.0, 1.0, 3, 3, tags=SIDES), patch_field)
    fem = fem_reference(quads)
    report.check("fem max nodal error",
                 max_nodal_error(quads.mesh, fem.steady.heads, patch_field),
                 1e-10)
    return report


def convergence_suite(sizes=(0.25, 0.125, 0.0625, 0.03125)):
    # type: (Sequence[float]) -> VerificationReport
    report = convergence_study(harmonic_family, sizes, name="convergence")
    fem = convergence_study(harmonic_family, sizes, formulation="fem",
                            name="convergence-fem")
    report.check("final rate", report.final_rate, 1.9, at_least=True)
    # on rectangles both discretizations span {1, x, y, xy}
    gap = max(abs(a.error - b.error) / b.error
              for a, b in zip(report.rows, fem.rows))
    report.check("sbfem vs fem on squares", gap, 1e-6)
    return report


def column_system(ss=1.0):
    # type: (float) -> Tuple[SeepageModel, GlobalSystem]
    model = column_model(ss=ss)
    ops = formulation_operators(model)
    return model, assemble_global(model.mesh, ops)


def slowest_time(system, fixed):
    # type: (GlobalSystem, np.ndarray) -> float
    """1 / smallest eigenvalue of the constrained pencil (K, M)"""
    free = np.setdiff1d(np.arange(system.n_dof), fixed)
    K = system.K.toarray()[np.ix_(free, free)]
    M = system.M.toarray()[np.ix_(free, free)]
    return 1.0 / float(scipy.linalg.eigh(K, M, eigvals_only=True)[0])


def oracle_suite():
    # type: () -> VerificationReport
    report = VerificationReport("oracle")
    scalar = GlobalSystem(scipy.sparse.csr_matrix([[1.0]]),
                          scipy.sparse.csr_matrix([[1.0]]), {1: 0})
    decay = ode_oracle(scalar, [1.0], [1.0])[-1, 0]
    report.check("scalar decay error", abs(decay - np.exp(-1.0)), 1e-9)

    model, system = column_system()
    constraint = model_constraint(model, system)

    def boundary(t):
        return constraint

    h0 = np.zeros(system.n_dof)
    T = slowest_time(system, constraint[0])
    errors, orders = time_order_study(system, h0, T, [16, 32, 64, 128],
                                      boundary)
    report.check("min time order", min(orders), 0.9, at_least=True)
    report.check("max time order", max(orders), 1.1)

    times = [T / 4.0, T / 2.0, T]
    coarse = ode_oracle(system, h0, times, boundary, substeps=1000)
    fine = ode_oracle(system, h0, times, boundary, substeps=2000)
    report.check("oracle self convergence", history_error(coarse, fine),
                 1e-10)

    dt = T / 64.0
    times = [dt * (k + 1) for k in range(128)]
    be = backward_euler(system, h0, times, boundary)
    ref = ode_oracle(system, h0, times, boundary)
    report.check("step response vs oracle", history_error(be, ref), 0.01)

    steady = solve_model(attr.evolve(model, transient=None)).steady.heads
    held = backward_euler(system, steady, times[:10], boundary)
    report.check("steady fixed point",
                 np.max(np.abs(held - steady)) / np.max(np.abs(steady)),
                 1e-10)
    return report


def inclusion_suite():
    # type: () -> VerificationReport
    """Quadtree mesh around an impermeable inclusion against the bilinear
    reference on the uniform square grid"""
    report = VerificationReport("inclusion")
    graded, uniform = inclusion_specs()
    model = inclusion_model(graded)
    reference = inclusion_model(uniform)
    solution = solve_model(model)
    fem = fem_reference(reference)
    locator = PointLocator(model.mesh)
    ref_mesh = reference.mesh
    for side in ("left", "right"):
        ids = ref_mesh.nodes_with_tag(side)
        pts = ref_mesh.coordinates(ids)
        ref = fem.steady.heads[ref_mesh.positions(ids)]
        got = np.array([sample_point(solution.steady, model.mesh,
                                     solution.operators, p, locator)
                        for p in pts])
        report.check("{} edge profile".format(side),
                     np.linalg.norm(got - ref) / np.linalg.norm(ref), 0.005)
    report.check("hole boundary edges",
                 len(model.mesh.edges_with_tag(IMPERMEABLE_TAG)), 1,
                 at_least=True)
    return report


def dam_suite():
    # type: () -> VerificationReport
    """Graded polygon mesh against the uniform bilinear reference through
    the ramp and relaxation, then against the steady limit"""
    report = VerificationReport("dam")
    model = dam_model()
    reference = dam_model(dam_reference_mesh())
    solution = solve_model(model, sampler=monitor_sampler(
        model.mesh, model.monitors))
    fem = fem_reference(reference, sampler=monitor_sampler(
        reference.mesh, reference.monitors))
    history = solution.history
    trace = history.monitors["P"]
    ref_trace = fem.history.monitors["P"]
    gap = np.abs(trace - ref_trace) / np.abs(ref_trace)
    report.check("sbfem vs fem monitor", float(np.max(gap)), 0.023)
    log.info("Dam monitor discrepancy", peak=float(np.max(gap)),
             peak_t=float(history.times[int(np.argmax(gap))]),
             final=float(gap[-1]))

    report.check("monitor gap rise after ramp",
                 largest_rise(history.times, gap, DAM_RAMP_END),
                 DAM_GAP_RISE_TOL)
    ramp_gap = gap[history.times >= DAM_RAMP_END][0]
    report.check("final gap over ramp-end gap", float(gap[-1] - ramp_gap),
                 0.0)

    after = trace[history.times >= DAM_RAMP_END]
    report.check("monitor drop after ramp",
                 max(0.0, -float(np.min(np.diff(after)))), 1e-9 * 30.0)
    steady = solve_model(final_steady(model))
    target = sample_point(steady.steady, model.mesh, steady.operators,
                          (20.0, 10.0))
    report.check("final vs steady", abs(trace[-1] - target) / abs(target),
                 1e-3)
    return report


SUITES = {
    "patch": patch_suite,
    "convergence": convergence_suite,
    "oracle": oracle_suite,
    "inclusion": inclusion_suite,
    "dam": dam_suite,
}  # type: Dict[str, Callable[[], VerificationReport]]


def run_suites(names):
    # type: (Sequence[str]) -> List[VerificationReport]
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise InvalidConfig("Unknown suites: {}".format(", ".join(unknown)))
    reports = []
    for name in names:
        report = SUITES[name]()
        log.info("Suite finished", suite=name, passed=report.passed)
        reports.append(report)
    return reports
