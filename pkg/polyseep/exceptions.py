"""Polyseep Exceptions"""
from polyseep.constants import (
    EXIT_INVALID_ARGS,
    EXIT_MODEL_ERROR,
    EXIT_SOLVER_ERROR,
    EXIT_VERIFICATION_FAILED,
)


class PolySeepException(Exception):
    """Parent Polyseep Exception

    Carries the process exit code the command line maps it to, plus any
    structured extras for the logs.

    """
    exit_code = EXIT_SOLVER_ERROR

    def __init__(self, message, **kwargs):
        super(PolySeepException, self).__init__(message)
        self.extra = kwargs


class InvalidConfig(PolySeepException):
    """Error in the run configuration or command line overrides"""
    exit_code = EXIT_INVALID_ARGS


class ModelError(PolySeepException):
    """Problem definition could not be turned into a model"""
    exit_code = EXIT_MODEL_ERROR


class DeckParseError(ModelError):
    """Malformed input deck, always names the offending line"""
    def __init__(self, message, line=None, **kwargs):
        if line is not None:
            message = "line {}: {}".format(line, message)
        super(DeckParseError, self).__init__(message, **kwargs)
        self.line = line


class SchemaError(ModelError):
    """Native model file does not match its schema"""
    def __init__(self, message, messages=None, **kwargs):
        super(SchemaError, self).__init__(message, **kwargs)
        self.messages = {} if messages is None else messages


class DanglingReferenceError(ModelError):
    """A model entry refers to a node, edge, set or material that is missing
    """


class GeometryError(ModelError):
    """Degenerate or otherwise unusable geometry"""


class MeshValidationError(ModelError):
    """Mesh failed validation"""
    def __init__(self, message, violations=None, **kwargs):
        super(MeshValidationError, self).__init__(message, **kwargs)
        self.violations = list(violations or [])


class QuadtreeError(ModelError):
    """Quadtree request can not be meshed"""


class SolverError(PolySeepException):
    """Numerical failure"""
    exit_code = EXIT_SOLVER_ERROR


class ElementDecompositionError(SolverError):
    """Modal decomposition of an S-element is unusable"""
    def __init__(self, message, element_id=None, diagnostics=None, **kwargs):
        super(ElementDecompositionError, self).__init__(message, **kwargs)
        self.element_id = element_id
        self.diagnostics = {} if diagnostics is None else diagnostics


class MassSolveError(ElementDecompositionError):
    """Mass matrix does not satisfy its defining equation"""


class SingularSystemError(SolverError):
    """Global system can not be solved as posed"""


class AssemblyError(SolverError):
    """Element operators do not fit the global dof layout"""


class LocationError(SolverError):
    """Point lies outside every element, or the radial coordinate is out of
    range"""


class OracleSizeError(SolverError):
    """System too large for the dense oracle"""


class VerificationFailure(PolySeepException):
    """A verification suite missed its tolerance"""
    exit_code = EXIT_VERIFICATION_FAILED
