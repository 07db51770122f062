"""DIMACS error measures and the before/after "helped" test."""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass

import numpy as np

from .core import BlockDense, BlockStructure, SdpInstance, StructuralError, dot
from .io_sdpa import SolutionFile
from .linalg import lambda_min_lower

ERROR_THRESHOLD = 1e-6
IMPROVEMENT_RATIO = 0.1
OBJECTIVE_GAP = 1e-6


class NotApplicable(ValueError):
    """No error measure could be evaluated."""


@dataclass(frozen=True)
class DimacsErrors:
    """The six measures; ``None`` marks one that needs a missing part (y or S)."""

    err1: float | None
    err2: float | None
    err3: float | None
    err4: float | None
    err5: float | None
    err6: float | None

    def as_dict(self) -> dict[str, float | None]:
        return asdict(self)


def block_lambda_min(structure: BlockStructure, X: BlockDense, tol: float) -> float:
    lam = math.inf
    for b, M in enumerate(X, start=1):
        if structure.is_diagonal(b):
            lam = min(lam, float(np.min(np.diag(M))))
        else:
            lam = min(lam, lambda_min_lower(M, tol))
    return lam


def _inner(structure: BlockStructure, X: BlockDense, Y: BlockDense) -> float:
    total = 0.0
    for b, (P, Q) in enumerate(zip(X, Y), start=1):
        if structure.is_diagonal(b):
            total += float(np.diag(P) @ np.diag(Q))
        else:
            total += float(np.sum(P * Q))
    return total


def dimacs_errors(inst: SdpInstance, sol: SolutionFile,
                  tol_eig: float = 1e-10) -> DimacsErrors:
    st = inst.structure
    for M in (sol.X, sol.S):
        if M is not None and M.structure != st:
            raise StructuralError("solution structure does not match the instance")
    if sol.y is not None and len(sol.y) != inst.m:
        raise StructuralError(f"y has {len(sol.y)} entries, instance has m={inst.m}")

    b = np.array(inst.rhs)
    b_inf = float(np.max(np.abs(b))) if b.size else 0.0
    C_inf = max((abs(v) for v in inst.objective.entries.values()), default=0.0)
    X = sol.X.to_dense()

    err1 = float(np.linalg.norm(inst.residuals(X))) / (1.0 + b_inf)
    lam_x = block_lambda_min(st, X, tol_eig)
    err2 = max(0.0, -lam_x) / (1.0 + b_inf)

    cx = dot(inst.objective, X)
    by = float(b @ sol.y) if sol.y is not None else None
    err3 = err4 = err5 = err6 = None
    if by is not None:
        err5 = (cx - by) / (1.0 + abs(cx) + abs(by))
    if sol.S is not None:
        S = sol.S.to_dense()
        err4 = max(0.0, -block_lambda_min(st, S, tol_eig)) / (1.0 + C_inf)
        denom = 1.0 + abs(cx) + (abs(by) if by is not None else 0.0)
        err6 = _inner(st, X, S) / denom
        if sol.y is not None:
            R = [s - c for s, c in zip(S, inst.objective.to_dense())]
            for yi, A in zip(sol.y, inst.constraints):
                for (blk, i, j), v in A.entries.items():
                    R[blk - 1][i - 1, j - 1] += yi * v
                    if i != j:
                        R[blk - 1][j - 1, i - 1] += yi * v
            err3 = math.sqrt(_inner(st, R, R)) / (1.0 + C_inf)
    return DimacsErrors(err1, err2, err3, err4, err5, err6)


def worst_error(e: DimacsErrors) -> float:
    vals = [v for v in e.as_dict().values() if v is not None]
    if not vals:
        raise NotApplicable("no DIMACS measure is defined")
    return max(vals)


class HelpedReason(enum.IntEnum):
    NOT_HELPED = 0
    INFEASIBILITY = 1
    ERROR_IMPROVED = 2
    OBJECTIVE_CHANGED = 3


def helped(err_before: float, err_after: float, infeasibility_detected: bool,
           obj_before: float | None = None, obj_after: float | None = None,
           as_printed: bool = False) -> tuple[bool, HelpedReason]:
    """Did preprocessing help?  Returns the verdict and the first clause that fired.

    The error clause asks for a tenfold drop of the worst error.  With
    ``as_printed`` the ratio is taken literally as before/after instead.
    """
    if infeasibility_detected:
        return True, HelpedReason.INFEASIBILITY
    if err_before > ERROR_THRESHOLD:
        if as_printed:
            ratio = err_before / err_after if err_after else math.inf
        else:
            ratio = err_after / err_before
        if ratio < IMPROVEMENT_RATIO:
            return True, HelpedReason.ERROR_IMPROVED
    if obj_before is not None and obj_after is not None:
        if abs(obj_before - obj_after) >= OBJECTIVE_GAP:
            return True, HelpedReason.OBJECTIVE_CHANGED
    return False, HelpedReason.NOT_HELPED
