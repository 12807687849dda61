"""Polyseep constants"""

# Version of the native model file layout
FORMAT_VERSION = 1

# Coordinates closer than this (times the domain diameter) are coincident
GEOMETRY_TOL = 1e-9

# Polygons with |area| below this (times diameter squared) are degenerate
AREA_TOL = 1e-12

# Near-zero Hamiltonian eigenvalues, relative to the spectral radius. The
# double zero eigenvalue is defective so it splits at sqrt(machine eps).
ZERO_MODE_TOL = 1e-6

# Largest accepted condition number of the head eigenvector block
CONDITION_LIMIT = 1e10

# Relative imaginary residue / asymmetry allowed in K_st and M
REALNESS_TOL = 1e-8

# Residual of the mass equation relative to ||M0||
MASS_RESIDUAL_TOL = 1e-8

# Relative residual required of a steady solve
STEADY_RESIDUAL_TOL = 1e-10

# Point location slack on the radial coordinate
LOCATION_TOL = 1e-12

# Dense ODE oracle limits
ODE_ORACLE_MAX_DOF = 500
ODE_ORACLE_SUBSTEPS = 1000

# Boundary tag given to hole and removed-cell faces of quadtree meshes
IMPERMEABLE_TAG = "impermeable"

# Default material id when a mesh does not say
DEFAULT_MATERIAL = "default"

# Exit codes of the command line front door
EXIT_OK = 0
EXIT_INVALID_ARGS = 1
EXIT_MODEL_ERROR = 2
EXIT_SOLVER_ERROR = 3
EXIT_VERIFICATION_FAILED = 4
