"""polyseep command line entry point"""
import io
import os
import shutil
import tempfile
from argparse import Namespace  # noqa

from twisted.logger import Logger
from typing import (  # noqa
    Any,
    Dict,
    List,
    Optional,
    Sequence,
)

from polyseep import constants
from polyseep.config import RunConfig
from polyseep.exceptions import InvalidConfig, PolySeepException
from polyseep.export import (
    export_history,
    export_vtk,
    read_heads_csv,
    write_heads_csv,
    write_monitor_csv,
)
from polyseep.ingest import dump_model, load_model
from polyseep.logging import SeepLogger
from polyseep.main_argparse import parse_polyseep
from polyseep.metrics import IMetrics, from_config  # noqa
from polyseep.model import SeepageModel  # noqa
from polyseep.recovery import (
    PointLocator,
    element_flux_vectors,
    monitor_sampler,
    sample_point,
)
from polyseep.solver import (
    ModelSolution,
    formulation_operators,
    solve_model,
)
from polyseep.verification.suites import run_suites

log = Logger()

# Written into every output directory this tool publishes
RUN_MARKER = ".polyseep-run"
FAILURE_LOG = "failure.log"


class OutputStage(object):
    """Outputs are written to a sibling temporary directory and published
    by renaming it over the output directory; a failed run publishes only
    ``failure.log``."""
    def __init__(self, out_dir):
        # type: (str) -> None
        self.out_dir = os.path.abspath(out_dir)
        if os.path.isdir(self.out_dir) and os.listdir(self.out_dir) and \
                not os.path.exists(os.path.join(self.out_dir, RUN_MARKER)):
            raise InvalidConfig(
                "{} is not empty and holds no earlier run".format(out_dir))
        parent = os.path.dirname(self.out_dir)
        if not os.path.isdir(parent):
            os.makedirs(parent)
        self.path = tempfile.mkdtemp(prefix=".polyseep-", dir=parent)

    def join(self, *parts):
        # type: (*str) -> str
        return os.path.join(self.path, *parts)

    def publish(self):
        io.open(self.join(RUN_MARKER), "w").close()
        if os.path.isdir(self.out_dir):
            shutil.rmtree(self.out_dir)
        os.rename(self.path, self.out_dir)
        log.info("Published outputs", out=self.out_dir)

    def fail(self, message):
        # type: (str) -> None
        shutil.rmtree(self.path, ignore_errors=True)
        self.path = tempfile.mkdtemp(prefix=".polyseep-",
                                     dir=os.path.dirname(self.out_dir))
        with io.open(self.join(FAILURE_LOG), "w", encoding="utf8") as f:
            f.write(message)
        self.publish()


def failure_text(code, ex):
    # type: (int, BaseException) -> str
    lines = ["exit_code: {}".format(code),
             "error: {}".format(ex.__class__.__name__),
             "message: {}".format(ex)]
    for key, value in sorted(getattr(ex, "extra", {}).items()):
        lines.append("{}: {}".format(key, value))
    return "\n".join(lines) + "\n"


class PolySeepApp(object):
    """Runs one command of a :class:`RunConfig`"""

    config_files = (
        '/etc/polyseep.ini',
        '~/.polyseep.ini',
        '.polyseep.ini',
    )
    logger_name = "PolySeep"

    def __init__(self, conf, metrics=None):
        # type: (RunConfig, Optional[IMetrics]) -> None
        self.conf = conf
        self.metrics = metrics or from_config(conf)

    @classmethod
    def from_argparse(cls, ns):
        # type: (Namespace) -> PolySeepApp
        return cls(RunConfig.from_argparse(ns))

    def load(self):
        # type: () -> SeepageModel
        conf = self.conf
        model = load_model(conf.model_path, conf.overlay_path)
        return model.with_overrides(dt=conf.dt, t_end=conf.t_end,
                                    monitors=conf.monitors)

    def run(self):
        # type: () -> int
        if self.conf.command == "verify" and not self.conf.out_dir:
            return self.verify(None)
        stage = OutputStage(self.conf.out_dir)
        try:
            code = getattr(self, self.conf.command)(stage)
        except Exception as ex:
            code = getattr(ex, "exit_code", constants.EXIT_SOLVER_ERROR)
            stage.fail(failure_text(code, ex))
            raise
        stage.publish()
        return code

    def mesh(self, stage):
        # type: (OutputStage) -> int
        model = self.load()
        with io.open(stage.join("model.json"), "w", encoding="utf8") as f:
            f.write(dump_model(model))
        export_vtk(model.mesh, {}, stage.join("mesh.vtk"))
        log.info("Mesh written", nodes=model.mesh.n_nodes,
                 elements=len(model.mesh.elements))
        return constants.EXIT_OK

    def solve(self, stage):
        # type: (OutputStage) -> int
        conf = self.conf
        model = self.load()
        kwargs = dict(conf.element_options)
        if conf.debug and conf.formulation == "sbfem":
            kwargs["debug_dir"] = stage.join("elements")
        sampler = monitor_sampler(model.mesh, model.monitors) \
            if model.monitors else None
        solution = solve_model(model, conf.formulation, self.metrics,
                               sampler=sampler, **kwargs)
        self.write_solution(stage, solution)
        return constants.EXIT_OK

    def write_solution(self, stage, solution):
        # type: (OutputStage, ModelSolution) -> None
        model = solution.model
        mesh = model.mesh
        ops = solution.operators
        csv = self.conf.output_format == "csv"
        if solution.history is None:
            heads = solution.steady.heads
            if csv:
                write_heads_csv(stage.join("heads.csv"), mesh, heads)
            else:
                export_vtk(mesh, {"head": heads}, stage.join("heads.vtk"),
                           {"flux": element_flux_vectors(mesh, ops, heads)})
            if model.monitors:
                locator = PointLocator(mesh)
                traces = {m.name: [sample_point(heads, mesh, ops,
                                                (m.x, m.y), locator)]
                          for m in model.monitors}
                write_monitor_csv(stage.join("monitors.csv"), [0.0], traces)
            return
        history = solution.history
        if csv:
            export_history(mesh, history.times, history.fields, stage.path,
                           output_format="csv")
            write_heads_csv(stage.join("heads.csv"), mesh, history.final)
        else:
            vectors = [element_flux_vectors(mesh, ops, h)
                       for h in history.fields]
            export_history(mesh, history.times, history.fields, stage.path,
                           cell_vectors=vectors)
        if history.monitors:
            write_monitor_csv(stage.join("monitors.csv"), history.times,
                              history.monitors)

    def verify(self, stage):
        # type: (Optional[OutputStage]) -> int
        reports = run_suites(self.conf.suites)
        text = "".join(r.as_text() for r in reports)
        log.info("{text}", text=text)
        if stage is not None:
            with io.open(stage.join("report.txt"), "w",
                         encoding="utf8") as f:
                f.write(text)
            for r in reports:
                if r.rows:
                    with io.open(stage.join("{}.csv".format(r.name)), "w",
                                 encoding="utf8") as f:
                        f.write(r.as_csv())
        if all(r.passed for r in reports):
            return constants.EXIT_OK
        failed = [r.name for r in reports if not r.passed]
        log.critical("Verification failed", suites=failed)
        return constants.EXIT_VERIFICATION_FAILED

    def export(self, stage):
        # type: (OutputStage) -> int
        model = self.load()
        stored = read_heads_csv(self.conf.heads_path)
        missing = [i for i in model.mesh.node_ids if i not in stored]
        if missing:
            raise InvalidConfig(
                "Heads file lacks {} mesh nodes".format(len(missing)))
        heads = [stored[i] for i in model.mesh.node_ids]
        ops = formulation_operators(model, self.conf.formulation,
                                    self.metrics, **self.conf.element_options)
        export_vtk(model.mesh, {"head": heads}, stage.join("heads.vtk"),
                   {"flux": element_flux_vectors(model.mesh, ops, heads)})
        return constants.EXIT_OK


def run_cli(argv=None, use_files=True):
    # type: (Optional[Sequence[str]], bool) -> int
    """Entry point of the polyseep command; returns the exit code"""
    try:
        ns = parse_polyseep(PolySeepApp.config_files if use_files else [],
                            argv)
    except SystemExit as ex:
        return constants.EXIT_OK if not ex.code else \
            constants.EXIT_INVALID_ARGS
    logger = SeepLogger.setup_logging(
        PolySeepApp.logger_name,
        log_level=ns.log_level or ("debug" if ns.verbose else "info"),
        log_format="text" if ns.human_logs else "json",
        log_output=ns.log_output,
    )
    app = None
    try:
        app = PolySeepApp.from_argparse(ns)
        return app.run()
    except PolySeepException as ex:
        log.critical("{cmd} failed: {msg}", cmd=ns.command, msg=str(ex),
                     exit_code=ex.exit_code)
        return ex.exit_code
    except (IOError, OSError) as ex:
        log.critical("I/O failure: {msg}", msg=str(ex))
        return constants.EXIT_SOLVER_ERROR
    except Exception:
        log.failure("Unexpected failure")
        return constants.EXIT_SOLVER_ERROR
    finally:
        if app is not None:
            app.metrics.stop()
        logger.stop()


def main():  # pragma: nocover
    raise SystemExit(run_cli())
