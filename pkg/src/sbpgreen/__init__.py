"""Summation-by-parts operators with SAT boundary penalties and their explicit inverses."""

from .errors import (DegenerateBC, GridTooSmall, NonIntegerSequence, NotCentrosymmetric, NotSymmetric,
                     NotWideStencil, OddN, SbpGreenError, SingularAbar, SingularMatrix, SingularPenalty,
                     SingularQbar, SingularSigma, SingularSystem, UnstableStep)
from .exact import QuadInt
from .green_first import (GreenFirst, SeqTables42, closed_form_21, closed_form_42, invert_general_first,
                          seq_tables_42)
from .green_second import (GreenSecond, Xi, closed_form_second, invert_general_second, sigma_matrix,
                           singularity_check, verify_preliminaries, xi_scalars)
from .linalg import lu_solve, min_eig_sym, rank_deficient
from .operators import Grid, SbpFirstOp, SbpSecondOp, build_first, build_second, load_operator_csv, verify_sbp
from .sat import (AssembledSystem, SatFirst, SatSecond, assemble_first, assemble_second, stability_first,
                  stability_second)
from .solver import SteadySolution, TransientRun, convergence_study, integrate, solve_steady
from .stability import (BorrowResult, QuadratureRoute, borrow_gamma, q_route_wide, qtilde_route,
                        stable_singular_witness, table1_report, verify_theorem3)

__all__ = [name for name in dir() if not name.startswith("_")]
