"""Inspection-based presolve for semidefinite programs."""

from .core import (BlockStructure, GlobalIndex, SdpInstance, StructuralError, Support,
                   SymBlockMatrix, delete_indices, dot, restrict, support_of)
from .io_sdpa import (SolutionFile, parse_instance, parse_solution, read_instance,
                      write_instance, write_solution)
from .lift import lift_solution, restrict_solution, verify_certificate
from .linalg import cholesky, is_pd, lambda_min_lower
from .metrics import DimacsErrors, dimacs_errors, helped, worst_error
from .reduce import (ReductionCertificate, Tolerances, Verdict, VerdictKind,
                     apply_deletion, classify_constraint, preprocess)

__version__ = "0.1.0"
