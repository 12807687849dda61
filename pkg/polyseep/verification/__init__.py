"""Error norms, reference discretizations and verification suites"""
from polyseep.verification.norms import (  # noqa
    l2_relative_error,
    pointwise_relative_error,
)
from polyseep.verification.fem import fem_reference  # noqa
from polyseep.verification.ode import ode_oracle  # noqa
from polyseep.verification.study import (  # noqa
    VerificationReport,
    convergence_study,
)
