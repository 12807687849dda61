"""PolySeep Config Object and Setup"""
import math
import os
import socket
from argparse import Namespace  # noqa
from typing import (  # noqa
    Any,
    List,
    Optional,
    Tuple,
)

from attr import (
    attrs,
    attrib,
    Factory
)

from polyseep import constants
from polyseep.exceptions import InvalidConfig
from polyseep.model import MonitorPoint
from polyseep.utils import parse_monitor

COMMANDS = ("mesh", "solve", "verify", "export")
FORMATS = ("vtk", "csv")
FORMULATIONS = ("sbfem", "fem")
DEFAULT_SUITES = ("patch", "convergence", "oracle")


def _positive(name, value):
    # type: (str, Optional[float]) -> Optional[float]
    if value is None:
        return None
    if not (math.isfinite(value) and value > 0):
        raise InvalidConfig("{} must be a positive number".format(name))
    return value


@attrs
class RunConfig(object):
    """One command line run"""

    command = attrib()  # type: str
    model_path = attrib(default=None)  # type: Optional[str]
    overlay_path = attrib(default=None)  # type: Optional[str]
    heads_path = attrib(default=None)  # type: Optional[str]
    out_dir = attrib(default=None)  # type: Optional[str]

    dt = attrib(default=None)  # type: Optional[float]
    t_end = attrib(default=None)  # type: Optional[float]
    monitors = attrib(default=Factory(tuple))  # type: Tuple[MonitorPoint, ...]
    suites = attrib(default=DEFAULT_SUITES)  # type: Tuple[str, ...]
    output_format = attrib(default="vtk")  # type: str
    formulation = attrib(default="sbfem")  # type: str

    verbose = attrib(default=False)  # type: bool
    debug = attrib(default=False)  # type: bool
    zero_tol = attrib(default=constants.ZERO_MODE_TOL)  # type: float
    condition_limit = attrib(
        default=constants.CONDITION_LIMIT)  # type: float

    hostname = attrib(default=None)  # type: Optional[str]
    statsd_host = attrib(default=None)  # type: Optional[str]
    statsd_port = attrib(default=8125)  # type: int
    log_metrics = attrib(default=False)  # type: bool

    def __attrs_post_init__(self):
        if not self.hostname:
            self.hostname = socket.gethostname()

    @property
    def needs_model(self):
        # type: () -> bool
        return self.command != "verify"

    @property
    def element_options(self):
        # type: () -> dict
        return {"zero_tol": self.zero_tol,
                "condition_limit": self.condition_limit}

    @classmethod
    def from_argparse(cls, ns, **kwargs):
        # type: (Namespace, **Any) -> RunConfig
        """Create an instance from argparse/additional kwargs

        Every override is checked here, before any model is read.

        """
        if ns.command not in COMMANDS:
            raise InvalidConfig("Unknown command {!r}".format(ns.command))
        if ns.command != "verify":
            if not ns.model:
                raise InvalidConfig(
                    "{} needs --model".format(ns.command))
            if not os.path.isfile(ns.model):
                raise InvalidConfig("No model file {}".format(ns.model))
            if not ns.out:
                raise InvalidConfig("{} needs --out".format(ns.command))
        if ns.overlay and not os.path.isfile(ns.overlay):
            raise InvalidConfig("No overlay file {}".format(ns.overlay))
        if ns.command == "export":
            if not ns.heads or not os.path.isfile(ns.heads):
                raise InvalidConfig("export needs an existing --heads file")
        if ns.format not in FORMATS:
            raise InvalidConfig("Unknown format {!r}".format(ns.format))
        if ns.formulation not in FORMULATIONS:
            raise InvalidConfig(
                "Unknown formulation {!r}".format(ns.formulation))
        if ns.dt is not None and ns.t_end is not None and ns.t_end < ns.dt:
            raise InvalidConfig("--t-end must be at least --dt")

        monitors = []  # type: List[MonitorPoint]
        for text in ns.monitor or []:
            name, x, y = parse_monitor(text)
            if any(m.name == name for m in monitors):
                raise InvalidConfig("Monitor {!r} given twice".format(name))
            monitors.append(MonitorPoint(name, x, y))

        suites = tuple(ns.suite) if ns.suite else DEFAULT_SUITES
        return cls(
            command=ns.command,
            model_path=ns.model,
            overlay_path=ns.overlay,
            heads_path=ns.heads,
            out_dir=ns.out,
            dt=_positive("--dt", ns.dt),
            t_end=_positive("--t-end", ns.t_end),
            monitors=tuple(monitors),
            suites=suites,
            output_format=ns.format,
            formulation=ns.formulation,
            verbose=ns.verbose,
            debug=ns.debug,
            zero_tol=_positive("--zero_tol", ns.zero_tol),
            condition_limit=_positive("--condition_limit",
                                      ns.condition_limit),
            hostname=ns.hostname,
            statsd_host=ns.statsd_host or None,
            statsd_port=ns.statsd_port,
            log_metrics=ns.log_metrics,
            **kwargs
        )
