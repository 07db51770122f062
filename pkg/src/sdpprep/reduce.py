"""Presolve loop: find constraints of the form [[D, 0], [0, 0]] . X = b.

A constraint qualifies when, after dropping rows and columns that carry
no entries, the remaining submatrix ``D`` is positive definite for one
choice of global sign.  With ``b < 0`` the instance is infeasible; with
``b = 0`` every feasible ``X`` vanishes on the rows/columns of ``D``, so the
constraint is dropped and those rows/columns are removed everywhere.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field

from .core import (BlockStructure, GlobalIndex, SdpInstance, StructuralError,
                   Support, SymBlockMatrix, delete_with_map, restrict, shrink,
                   support_of)
from .linalg import is_pd

CERT_SCHEMA = "sdpprep.certificate/1"


@dataclass(frozen=True)
class Tolerances:
    eps_support: float = 0.0
    eps_rhs: float = 1e-9
    eps_pivot: float = 0.0

    def __post_init__(self) -> None:
        if min(self.eps_support, self.eps_rhs, self.eps_pivot) < 0:
            raise ValueError("tolerances must be nonnegative")

    @classmethod
    def strict(cls) -> Tolerances:
        return cls(eps_rhs=0.0)


class Kind(enum.Enum):
    NOT_REDUCIBLE = "not-reducible"
    REDUCIBLE = "reducible"
    INFEASIBLE_WITNESS = "infeasible-witness"


@dataclass(frozen=True)
class Classification:
    kind: Kind
    sign: int = 0


NOT_REDUCIBLE = Classification(Kind.NOT_REDUCIBLE)


class Action(enum.Enum):
    DELETE_CONSTRAINT = "delete"
    DECLARE_INFEASIBLE = "infeasible"


class VerdictKind(enum.Enum):
    INFEASIBLE = "infeasible"
    REDUCED = "reduced"
    UNCHANGED = "unchanged"


@dataclass(frozen=True)
class BasicStepRecord:
    constraint_id: int
    sign: int
    support: tuple[GlobalIndex, ...]
    support_original: tuple[GlobalIndex, ...]
    rhs_at_step: float
    action: Action


@dataclass(frozen=True)
class ReductionCertificate:
    original_structure: BlockStructure
    original_m: int
    steps: tuple[BasicStepRecord, ...]
    kept_indices: tuple[GlobalIndex, ...]
    kept_constraints: tuple[int, ...]
    tolerances: Tolerances = field(default_factory=Tolerances)

    @property
    def original_n(self) -> int:
        return self.original_structure.n

    @property
    def infeasible(self) -> bool:
        return bool(self.steps) and self.steps[-1].action is Action.DECLARE_INFEASIBLE

    def reduced_structure(self) -> BlockStructure:
        counts: dict[int, int] = {}
        for g in self.kept_indices:
            counts[g.block] = counts.get(g.block, 0) + 1
        sizes = []
        for b, s in enumerate(self.original_structure.sizes, start=1):
            if counts.get(b):
                sizes.append(counts[b] if s > 0 else -counts[b])
        return BlockStructure(tuple(sizes))

    def to_dict(self) -> dict:
        def pairs(idx):
            return [[g.block, g.local] for g in idx]
        return {
            "schema": CERT_SCHEMA,
            "original": {"n": self.original_n, "m": self.original_m,
                         "block_sizes": list(self.original_structure.sizes)},
            "tolerances": {"eps_support": self.tolerances.eps_support,
                           "eps_rhs": self.tolerances.eps_rhs,
                           "eps_pivot": self.tolerances.eps_pivot},
            "steps": [{"constraint": s.constraint_id, "sign": s.sign,
                       "action": s.action.value, "rhs": s.rhs_at_step,
                       "support": pairs(s.support),
                       "support_original": pairs(s.support_original)}
                      for s in self.steps],
            "kept_indices": pairs(self.kept_indices),
            "kept_constraints": list(self.kept_constraints),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> ReductionCertificate:
        if d.get("schema") != CERT_SCHEMA:
            raise ValueError(f"unknown certificate schema {d.get('schema')!r}")
        structure = BlockStructure(tuple(d["original"]["block_sizes"]))

        def gidx(st: BlockStructure, pairs) -> tuple[GlobalIndex, ...]:
            return tuple(GlobalIndex(int(b), int(l), st.flat(int(b), int(l)))
                         for b, l in pairs)

        steps = []
        for s in d["steps"]:
            orig = gidx(structure, s["support_original"])
            # current-coordinate flats are not recoverable without replay; keep
            # block/local as written and a provisional flat of -1
            current = tuple(GlobalIndex(int(b), int(l), -1) for b, l in s["support"])
            steps.append(BasicStepRecord(int(s["constraint"]), int(s["sign"]), current,
                                         orig, float(s["rhs"]), Action(s["action"])))
        return cls(structure, int(d["original"]["m"]), tuple(steps),
                   gidx(structure, d["kept_indices"]),
                   tuple(int(c) for c in d["kept_constraints"]),
                   Tolerances(**d["tolerances"]))

    @classmethod
    def from_json(cls, text: str) -> ReductionCertificate:
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class Verdict:
    kind: VerdictKind
    certificate: ReductionCertificate
    instance: SdpInstance | None = None


def _definite_sign(A: SymBlockMatrix, S: Support, eps_pivot: float) -> int:
    """+1 / -1 when ``sign * A`` restricted to ``S`` is PD, else 0."""
    blocks = restrict(A, S)
    diag = [v for M in blocks for v in (M if M.ndim == 1 else M.diagonal())]
    # a PD matrix has a strictly positive diagonal, so at most one sign survives
    if all(v > 0 for v in diag):
        sign = 1
    elif all(v < 0 for v in diag):
        sign = -1
    else:
        return 0
    if all(is_pd(sign * M, eps_pivot) for M in blocks):
        return sign
    return 0


def _classify(A: SymBlockMatrix, b: float,
              tol: Tolerances) -> tuple[Classification, Support]:
    S = support_of(A, tol.eps_support)
    signs = (1, -1) if not len(S) else (_definite_sign(A, S, tol.eps_pivot),)
    for sign in signs:
        if not sign:
            continue
        if sign * b < -tol.eps_rhs:
            return Classification(Kind.INFEASIBLE_WITNESS, sign), S
        if abs(b) <= tol.eps_rhs:
            return Classification(Kind.REDUCIBLE, sign), S
    return NOT_REDUCIBLE, S


def classify_constraint(A: SymBlockMatrix, b: float,
                        tol: Tolerances = Tolerances()) -> Classification:
    return _classify(A, b, tol)[0]


def _delete(inst: SdpInstance, pos: int, S: Support) -> tuple[SdpInstance, list[bool]]:
    """Remove constraint ``pos`` (0-based) and the rows/columns in ``S``.

    Also reports, per surviving constraint, whether its matrix lost entries.
    """
    if not 0 <= pos < inst.m:
        raise StructuralError(f"constraint {pos + 1} out of range 1..{inst.m}")
    rest = [A for k, A in enumerate(inst.constraints) if k != pos]
    rhs = [b for k, b in enumerate(inst.rhs) if k != pos]
    if not len(S):
        return (SdpInstance(inst.structure, inst.objective, tuple(rest), tuple(rhs),
                            inst.label), [False] * len(rest))
    imap = shrink(inst.structure, S)
    new = [delete_with_map(A, imap) for A in rest]
    changed = [a.nnz != b.nnz for a, b in zip(rest, new)]
    reduced = SdpInstance(imap.new, delete_with_map(inst.objective, imap), tuple(new),
                          tuple(rhs), inst.label)
    return reduced, changed


def apply_deletion(inst: SdpInstance, constraint_id: int, S: Support) -> SdpInstance:
    """Drop constraint ``constraint_id`` (1-based position) and rows/columns ``S``."""
    return _delete(inst, constraint_id - 1, S)[0]


def preprocess(inst: SdpInstance, tol: Tolerances = Tolerances(),
               max_steps: int | None = None) -> Verdict:
    original = inst.structure
    ids = list(range(1, inst.m + 1))
    to_original = list(range(original.n))
    # True once a constraint is known not to qualify; stays valid until a
    # deletion removes some of its entries
    settled = [False] * inst.m
    steps: list[BasicStepRecord] = []

    def record(pos: int, cls: Classification, S: Support, action: Action) -> None:
        steps.append(BasicStepRecord(
            ids[pos], cls.sign, S.indices,
            tuple(original.index(to_original[f]) for f in S.flats),
            inst.rhs[pos], action))

    def certificate() -> ReductionCertificate:
        return ReductionCertificate(
            original, len(ids) + sum(s.action is Action.DELETE_CONSTRAINT for s in steps),
            tuple(steps), tuple(original.index(f) for f in to_original), tuple(ids), tol)

    while max_steps is None or len(steps) < max_steps:
        hit = None
        for pos in range(inst.m):
            if settled[pos]:
                continue
            cls, S = _classify(inst.constraints[pos], inst.rhs[pos], tol)
            if cls.kind is Kind.INFEASIBLE_WITNESS:
                record(pos, cls, S, Action.DECLARE_INFEASIBLE)
                return Verdict(VerdictKind.INFEASIBLE, certificate())
            if cls.kind is Kind.REDUCIBLE:
                hit = pos
                break
            settled[pos] = True
        if hit is None:
            break
        record(hit, cls, S, Action.DELETE_CONSTRAINT)
        inst, changed = _delete(inst, hit, S)
        del ids[hit], settled[hit]
        settled = [s and not c for s, c in zip(settled, changed)]
        if len(S):
            gone = set(S.flats)
            to_original = [o for f, o in enumerate(to_original) if f not in gone]

    if not steps:
        return Verdict(VerdictKind.UNCHANGED, certificate(), inst)
    reduced = SdpInstance(inst.structure, inst.objective, inst.constraints, inst.rhs,
                          f"{inst.label} [presolved: {len(steps)} steps]".strip())
    return Verdict(VerdictKind.REDUCED, certificate(), reduced)
