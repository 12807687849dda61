"""
Diagnostic Command Line Interface for S-element operators.

Forms the elements of a model and prints their boundary coefficient
matrices, stiffness, mass and modal exponents as plain text, for offline
comparison with other implementations.

To use this tool:
```
polyseep_element_diagnostic model.json --element 3
```

"""
from __future__ import print_function

import configargparse
import numpy as np
from twisted.logger import Logger

from polyseep.config import RunConfig
from polyseep.element import dump_element, form_elements
from polyseep.exceptions import PolySeepException
from polyseep.ingest import load_model
from polyseep.main import PolySeepApp
from polyseep.main_argparse import add_shared_args


class ElementDiagnosticCLI(object):
    log = Logger()

    def __init__(self, sysargs, use_files=True):
        ns = self._load_args(sysargs, use_files)
        self._conf = RunConfig("mesh", model_path=ns.model_file,
                               overlay_path=ns.overlay,
                               zero_tol=ns.zero_tol,
                               condition_limit=ns.condition_limit)
        self._elements = ns.element

    def _load_args(self, sysargs, use_files):
        if use_files:
            config_files = PolySeepApp.config_files  # pragma: nocover
        else:
            config_files = []  # pragma: nocover

        parser = configargparse.ArgumentParser(
            description='Runs S-element diagnostics.',
            default_config_files=config_files)
        parser.add_argument('model_file', help="Model file to form")
        parser.add_argument('--element', help="Element id to print",
                            type=int, action="append", default=None)
        parser.add_argument('--overlay', help="JSON overlay for an input deck",
                            type=str, default=None)
        add_shared_args(parser)
        return parser.parse_args(sysargs)

    def run(self):
        conf = self._conf
        try:
            model = load_model(conf.model_path, conf.overlay_path)
            ops = form_elements(model, **conf.element_options)
        except PolySeepException as ex:
            print("Elements could not be formed: {}".format(ex))
            return "Formation failed"

        wanted = self._elements or sorted(ops)
        missing = [eid for eid in wanted if eid not in ops]
        if missing:
            print("No such elements: {}".format(missing))
            return "Not Found"
        for eid in wanted:
            op = ops[eid]
            print(dump_element(eid, op), end="")
            exponents = np.round(op.modal.exponents, 12)
            print("exponents {}".format(" ".join(
                repr(complex(e)) if e.imag else repr(float(e.real))
                for e in exponents)))
            print("condition {!r}".format(op.modal.condition))
            print("mass_residual {!r}\n".format(
                op.diagnostics["mass_residual"]))


def run_element_diagnostic_cli(sysargs=None, use_files=True):
    cli = ElementDiagnosticCLI(sysargs, use_files=use_files)
    return cli.run()
