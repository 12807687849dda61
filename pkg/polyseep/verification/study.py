"""Mesh refinement studies and their reports"""
import io

import numpy as np
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
    Optional,
    Sequence,
    Tuple,
)

from polyseep.model import SeepageModel  # noqa
from polyseep.recovery import PointLocator, sample_point
from polyseep.solver import solve_model
from polyseep.verification.norms import (
    l2_relative_error,
    pointwise_relative_error,
)

log = Logger()

# Errors below this are round-off; rates between them are meaningless
EXACT_TOL = 1e-10

# A family maps a mesh size to (model, analytic head f(x, y))
Family = Callable[[float], Tuple[SeepageModel, Callable[[float, float], float]]]  # noqa


@attrs
class RefinementRow(object):
    size = attrib()  # type: float
    n_dof = attrib()  # type: int
    error = attrib()  # type: float
    rate = attrib(default=None)  # type: Optional[float]
    pointwise = attrib(default=None)  # type: Optional[float]


@attrs
class VerificationReport(object):
    """Outcome of one verification suite or study"""
    name = attrib()  # type: str
    rows = attrib(default=Factory(list))  # type: List[RefinementRow]
    checks = attrib(default=Factory(dict))  # type: Dict[str, Tuple[float, float, bool]]  # noqa
    exact = attrib(default=False)  # type: bool

    @property
    def passed(self):
        # type: () -> bool
        return all(ok for _, _, ok in self.checks.values())

    def check(self, name, value, limit, at_least=False):
        # type: (str, float, float, bool) -> bool
        """Record ``value <= limit`` (or ``>=`` with ``at_least``)"""
        value = float(value)
        ok = value >= limit if at_least else value <= limit
        self.checks[name] = (value, float(limit), bool(ok))
        log.info("Verification check", suite=self.name, check=name,
                 value=value, limit=float(limit), ok=bool(ok))
        return ok

    @property
    def final_rate(self):
        # type: () -> Optional[float]
        rates = [r.rate for r in self.rows if r.rate is not None]
        return rates[-1] if rates else None

    def as_csv(self):
        # type: () -> str
        out = io.StringIO()
        out.write(u"size,n_dof,error,rate,pointwise\n")
        for r in self.rows:
            out.write(u"{},{},{},{},{}\n".format(
                repr(r.size), r.n_dof, repr(r.error),
                "" if r.rate is None else repr(r.rate),
                "" if r.pointwise is None else repr(r.pointwise)))
        return out.getvalue()

    def as_text(self):
        # type: () -> str
        lines = ["suite {}: {}".format(self.name,
                                       "passed" if self.passed else "FAILED")]
        for name, (value, limit, ok) in sorted(self.checks.items()):
            lines.append("  {:<32} {:>12.4e}  limit {:.4e}  {}".format(
                name, value, limit, "ok" if ok else "FAIL"))
        if self.rows:
            lines.append("  {:>10} {:>8} {:>12} {:>8}".format(
                "size", "n_dof", "error", "rate"))
            for r in self.rows:
                rate = "exact" if self.exact else (
                    "" if r.rate is None else "{:.3f}".format(r.rate))
                lines.append("  {:>10.5g} {:>8d} {:>12.4e} {:>8}".format(
                    r.size, r.n_dof, r.error, rate))
        return "\n".join(lines) + "\n"


def rates(sizes, errors):
    # type: (Sequence[float], Sequence[float]) -> List[Optional[float]]
    """log(e_i / e_i+1) / log(h_i / h_i+1), None for the first row"""
    out = [None]  # type: List[Optional[float]]
    for i in range(len(errors) - 1):
        out.append(float(np.log(errors[i] / errors[i + 1]) /
                         np.log(sizes[i] / sizes[i + 1])))
    return out


def convergence_study(family, sizes, formulation="sbfem", monitors=None,
                      name="convergence"):
    # type: (Family, Sequence[float], str, Optional[Sequence[Tuple[float, float]]], str) -> VerificationReport  # noqa
    """Solve the family at each size and tabulate relative L2 errors,
    with the pointwise error at ``monitors`` when given"""
    report = VerificationReport(name)
    errors = []
    for size in sizes:
        model, exact = family(size)
        solution = solve_model(model, formulation)
        heads = solution.final
        error = l2_relative_error(model.mesh, solution.operators, heads,
                                  exact)
        pointwise = None
        if monitors:
            locator = PointLocator(model.mesh)
            values = [sample_point(heads, model.mesh, solution.operators,
                                   p, locator) for p in monitors]
            pointwise = pointwise_relative_error(
                values, [exact(x, y) for x, y in monitors])
        errors.append(error)
        report.rows.append(RefinementRow(size, solution.system.n_dof, error,
                                         pointwise=pointwise))
        log.info("Refinement level", suite=name, size=size,
                 n_dof=solution.system.n_dof, error=error)
    report.exact = all(e < EXACT_TOL for e in errors)
    if not report.exact:
        for row, rate in zip(report.rows, rates(sizes, errors)):
            row.rate = rate
    return report
