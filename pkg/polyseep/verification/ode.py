"""Dense reference integration of ``M h' + K h = Q`` and backward-Euler
histories to compare against it"""
import numpy as np
import scipy.linalg
from twisted.logger import Logger
from typing import (  # noqa
    Callable,
    List,
    Optional,
    Sequence,
    Tuple,
)

from polyseep import constants
from polyseep.exceptions import OracleSizeError, SingularSystemError
from polyseep.model import SeepageModel  # noqa
from polyseep.solver import (  # noqa
    Constraint,
    GlobalSystem,
    TransientStepper,
    model_constraint,
)
from polyseep.utils import relative_norm

log = Logger()

Boundary = Callable[[float], Constraint]

# step used to differentiate Dirichlet data, relative to the oracle step
DERIVATIVE_STEP = 1e-3


def model_boundary(model, system):
    # type: (SeepageModel, GlobalSystem) -> Boundary
    return lambda t: model_constraint(model, system, t)


def no_boundary(t):
    # type: (float) -> Constraint
    return np.zeros(0, dtype=int), np.zeros(0)


def ode_oracle(system, h0, times, boundary=no_boundary, Q=None,
               substeps=constants.ODE_ORACLE_SUBSTEPS):
    # type: (GlobalSystem, Sequence[float], Sequence[float], Boundary, Optional[np.ndarray], int) -> np.ndarray  # noqa
    """Classical RK4 on the unconstrained dofs, ``substeps`` per output
    interval; constrained dofs follow ``boundary`` exactly.

    Returns one row per entry of ``times``.

    """
    n = system.n_dof
    if n > constants.ODE_ORACLE_MAX_DOF:
        raise OracleSizeError(
            "Dense oracle limited to {} dofs".format(
                constants.ODE_ORACLE_MAX_DOF), n_dof=n)
    K = system.K.toarray()
    M = system.M.toarray()
    Q = np.zeros(n) if Q is None else np.asarray(Q, dtype=float)
    fixed, _ = boundary(0.0)
    mask = np.ones(n, dtype=bool)
    mask[fixed] = False
    free = np.nonzero(mask)[0]
    K_ff, K_fc = K[np.ix_(free, free)], K[np.ix_(free, fixed)]
    M_ff, M_fc = M[np.ix_(free, free)], M[np.ix_(free, fixed)]
    try:
        cho = scipy.linalg.cho_factor(M_ff)
    except np.linalg.LinAlgError:
        raise SingularSystemError("Oracle needs positive definite storage")

    def g(t):
        return boundary(t)[1]

    def rate(t, hf, dt):
        delta = DERIVATIVE_STEP * dt
        gdot = (g(t + delta) - g(max(t - delta, 0.0))) / \
            (t + delta - max(t - delta, 0.0))
        rhs = Q[free] - K_ff @ hf - K_fc @ g(t) - M_fc @ gdot
        return scipy.linalg.cho_solve(cho, rhs)

    h = np.asarray(h0, dtype=float).copy()
    h[fixed] = g(0.0)
    hf = h[free]
    out = []
    t = 0.0
    for t_out in times:
        dt = (t_out - t) / substeps
        for _ in range(substeps if t_out > t else 0):
            k1 = rate(t, hf, dt)
            k2 = rate(t + 0.5 * dt, hf + 0.5 * dt * k1, dt)
            k3 = rate(t + 0.5 * dt, hf + 0.5 * dt * k2, dt)
            k4 = rate(t + dt, hf + dt * k3, dt)
            hf = hf + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            t += dt
        t = t_out
        row = np.zeros(n)
        row[free] = hf
        row[fixed] = g(t_out)
        out.append(row)
    return np.array(out)


def backward_euler(system, h0, times, boundary=no_boundary, Q=None):
    # type: (GlobalSystem, Sequence[float], Sequence[float], Boundary, Optional[np.ndarray]) -> np.ndarray  # noqa
    """Backward-Euler fields at ``times`` (uniform steps from t = 0)"""
    stepper = TransientStepper(system)
    h = np.asarray(h0, dtype=float).copy()
    fixed, values = boundary(0.0)
    h[fixed] = values
    out = []
    t = 0.0
    for t_next in times:
        h = stepper.step(t_next - t, h, boundary(t_next), Q)
        out.append(h)
        t = t_next
    return np.array(out)


def history_error(approx, reference):
    # type: (np.ndarray, np.ndarray) -> float
    """Largest per-time relative difference"""
    return max(relative_norm(a - r, r) for a, r in zip(approx, reference))


def observed_order(errors, steps):
    # type: (Sequence[float], Sequence[float]) -> List[float]
    return [float(np.log(errors[i] / errors[i + 1]) /
                  np.log(steps[i] / steps[i + 1]))
            for i in range(len(errors) - 1)]


def time_order_study(system, h0, t_final, steps, boundary=no_boundary,
                     Q=None):
    # type: (GlobalSystem, Sequence[float], float, Sequence[int], Boundary, Optional[np.ndarray]) -> Tuple[List[float], List[float]]  # noqa
    """Backward-Euler error at ``t_final`` against the oracle for each
    number of steps; returns (errors, observed orders)"""
    # one reference at a thousandth of the coarsest step
    ref = ode_oracle(system, h0, [t_final], boundary, Q,
                     substeps=constants.ODE_ORACLE_SUBSTEPS * min(steps))[-1]
    errors = []
    dts = []
    for count in steps:
        dt = t_final / count
        times = [dt * (k + 1) for k in range(count)]
        be = backward_euler(system, h0, times, boundary, Q)[-1]
        errors.append(relative_norm(be - ref, ref))
        dts.append(dt)
    orders = observed_order(errors, dts)
    log.info("Time order study", errors=errors, orders=orders)
    return errors, orders
