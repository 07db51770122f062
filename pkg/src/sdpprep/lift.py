"""Moving solutions between original and reduced coordinates; certificate replay."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (BlockDense, SdpInstance, StructuralError, Support, SymBlockMatrix,
                   check_dense, restrict, support_of, zeros)
from .linalg import is_pd
from .reduce import Action, ReductionCertificate, Tolerances, _delete


def _kept_by_block(cert: ReductionCertificate) -> dict[int, list[int]]:
    out: dict[int, list[int]] = {}
    for g in cert.kept_indices:
        out.setdefault(g.block, []).append(g.local)
    return out


def lift_solution(X_reduced: BlockDense, cert: ReductionCertificate) -> BlockDense:
    """Embed a reduced-space matrix into the original space, zero elsewhere."""
    if cert.infeasible:
        raise ValueError("cannot lift through an infeasibility certificate")
    check_dense(cert.reduced_structure(), X_reduced)
    X = zeros(cert.original_structure)
    for k, (b, locs) in enumerate(sorted(_kept_by_block(cert).items())):
        ix = np.array(locs) - 1
        X[b - 1][np.ix_(ix, ix)] = X_reduced[k]
    return X


def restrict_solution(X_original: BlockDense, cert: ReductionCertificate) -> BlockDense:
    check_dense(cert.original_structure, X_original)
    out = []
    for b, locs in sorted(_kept_by_block(cert).items()):
        ix = np.array(locs) - 1
        out.append(np.array(X_original[b - 1][np.ix_(ix, ix)]))
    return out


def lift_matrix(M: SymBlockMatrix, cert: ReductionCertificate) -> SymBlockMatrix:
    """Sparse counterpart of :func:`lift_solution`."""
    if cert.infeasible:
        raise ValueError("cannot lift through an infeasibility certificate")
    if M.structure != cert.reduced_structure():
        raise StructuralError(
            f"solution structure {M.structure.sizes} does not match the reduced "
            f"structure {cert.reduced_structure().sizes}")
    kept = sorted(_kept_by_block(cert).items())
    out = {}
    for (b, i, j), v in M.entries.items():
        ob, locs = kept[b - 1]
        out[(ob, locs[i - 1], locs[j - 1])] = v
    return SymBlockMatrix(cert.original_structure, out)


@dataclass
class VerificationResult:
    ok: bool = True
    diagnostics: list[str] = field(default_factory=list)

    def fail(self, msg: str) -> None:
        self.ok = False
        self.diagnostics.append(msg)

    def __bool__(self) -> bool:
        return self.ok


def verify_certificate(original: SdpInstance, cert: ReductionCertificate,
                       tol: Tolerances | None = None) -> VerificationResult:
    """Replay ``cert`` against ``original`` and check every step independently."""
    tol = cert.tolerances if tol is None else tol
    res = VerificationResult()
    if original.structure != cert.original_structure or original.m != cert.original_m:
        res.fail(f"certificate is for n={cert.original_n}, m={cert.original_m}, "
                 f"blocks {cert.original_structure.sizes}; instance has n={original.n}, "
                 f"m={original.m}, blocks {original.structure.sizes}")
        return res

    inst = original
    ids = list(range(1, original.m + 1))
    to_original = list(range(original.n))
    deleted: set[int] = set()
    for k, step in enumerate(cert.steps, start=1):
        where = f"step {k} (constraint {step.constraint_id})"
        if step.constraint_id not in ids:
            res.fail(f"{where}: constraint is not present at this point")
            return res
        pos = ids.index(step.constraint_id)
        A, b = inst.constraints[pos], inst.rhs[pos]
        S = support_of(A, tol.eps_support)
        try:
            recorded = Support.from_pairs(inst.structure,
                                          ((g.block, g.local) for g in step.support))
        except StructuralError as exc:
            res.fail(f"{where}: recorded support invalid: {exc}")
            return res
        if recorded.flats != S.flats:
            res.fail(f"{where}: recorded support {recorded.pairs()} differs from "
                     f"actual support {S.pairs()}")
        orig_flats = sorted(to_original[f] for f in S.flats)
        if [g.flat for g in step.support_original] != orig_flats:
            res.fail(f"{where}: original-coordinate support does not match replay")
        if deleted.intersection(g.flat for g in step.support_original):
            res.fail(f"{where}: support overlaps rows deleted by an earlier step")
        if step.sign not in (1, -1):
            res.fail(f"{where}: sign must be +1 or -1, got {step.sign}")
        elif not all(is_pd(step.sign * M, tol.eps_pivot) for M in restrict(A, S)):
            res.fail(f"{where}: sign {step.sign:+d} times the supported submatrix "
                     f"is not positive definite")
        if step.rhs_at_step != b:
            res.fail(f"{where}: recorded rhs {step.rhs_at_step!r} but instance has {b!r}")
        if step.action is Action.DELETE_CONSTRAINT:
            if not abs(b) <= tol.eps_rhs:
                res.fail(f"{where}: deletion needs |b| <= {tol.eps_rhs}, b = {b!r}")
        else:
            if not step.sign * b < -tol.eps_rhs:
                res.fail(f"{where}: infeasibility needs sign*b < -{tol.eps_rhs}, "
                         f"sign*b = {step.sign * b!r}")
            if k != len(cert.steps):
                res.fail(f"{where}: infeasibility step is not the last step")
        if not res.ok:
            return res
        if step.action is Action.DECLARE_INFEASIBLE:
            break
        inst, _ = _delete(inst, pos, S)
        del ids[pos]
        deleted.update(orig_flats)
        gone = set(S.flats)
        to_original = [o for f, o in enumerate(to_original) if f not in gone]

    if [g.flat for g in cert.kept_indices] != to_original:
        res.fail("kept index list does not match the replayed deletions")
    if list(cert.kept_constraints) != ids:
        res.fail("kept constraint list does not match the replayed deletions")
    return res
