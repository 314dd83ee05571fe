"""Quasi-Newton solvers for square systems of polynomial equations.

The package stores each system as sparse per-degree coefficient blocks, so
the weighted residual combination that drives the rank-one update is exact
by construction rather than approximated.  Hot kernels run through a small
compiled extension when it built, with a pure NumPy fallback otherwise; see
:data:`polyqn.backend.BACKEND` for which one is active.
"""

from polyqn.backend import BACKEND, available_backends
from polyqn.polysys import (PolySystem, ProblemFile, ProblemFormatError,
                            euler_residual, eval_f, eval_f_tilde,
                            eval_homogeneous, finite_difference_jacobian,
                            jacobian, parse_problem, plant_root, random_system,
                            serialize_problem)
from polyqn.updates import (SingularMatrixError, UpdateOutcome,
                            broyden_inverse_update, broyden_update,
                            linear_solve, modified_inverse_update,
                            modified_update, sherman_morrison)
from polyqn.solver import (COMPARE_VARIANTS, IterRecord, SolveResult,
                           SolverConfig, broyden_tridiagonal, compare_methods,
                           newton_solve, planted_random, quasi_newton_solve,
                           scalar_cubic)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "COMPARE_VARIANTS",
    "IterRecord",
    "PolySystem",
    "ProblemFile",
    "ProblemFormatError",
    "SingularMatrixError",
    "SolveResult",
    "SolverConfig",
    "UpdateOutcome",
    "available_backends",
    "broyden_inverse_update",
    "broyden_tridiagonal",
    "broyden_update",
    "compare_methods",
    "euler_residual",
    "eval_f",
    "eval_f_tilde",
    "eval_homogeneous",
    "finite_difference_jacobian",
    "jacobian",
    "linear_solve",
    "modified_inverse_update",
    "modified_update",
    "newton_solve",
    "parse_problem",
    "plant_root",
    "planted_random",
    "quasi_newton_solve",
    "random_system",
    "scalar_cubic",
    "serialize_problem",
    "sherman_morrison",
]
