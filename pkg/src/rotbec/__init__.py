"""Finite element ground states of rotating Bose-Einstein condensates."""

from .mesh import MeshGrid, build_uniform_mesh, refine
from .fespace import (FeSpace, FeField, QuadratureRule, triangle_rule,
                      duffy_rule, interpolate, evaluate, prolongate,
                      write_field, read_field_dump, field_from_full)
from .assembly import (ModelParams, assemble_mass, assemble_stiffness,
                       assemble_r_form, assemble_direct_form,
                       assemble_weighted_mass)
from .sparse_linalg import (SparseOperator, matvec, solve_hpd,
                            lowest_eigenpairs, CgError, NotHpdError,
                            EigenConvergenceError)
from .model import (GpeOperators, build_operators, energy, quartic_integral,
                    apply_gpe_operator, rayleigh_lambda,
                    apply_second_derivative, phase_align, error_norms,
                    error_decomposition, eigenvalue_identity_check)
from .solver import (SolverConfig, GroundStateResult, initial_guess,
                     normalize, solve_ground_state, IterationLimitError,
                     StepUnderflowError)
from .spectrum import (RealLinearOperator, SpectrumResult,
                       build_second_derivative_matrix, lowest_spectrum,
                       check_tangent_inf_sup, write_spectrum_report)
from .convergence import (StudyConfig, ConvergenceTable, run_study,
                          compute_eoc, fit_rate, solve_chain)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
