"""Seeded instance generator with planted chains of reducible constraints.

All randomness comes from ``numpy.random.Generator(PCG64(seed))`` so that a
seed pins the instance exactly.

Layout before scrambling: one dense block holding the ``base_n`` base rows
followed by the planted sets ``S_1, ..., S_k``, and optionally a trailing
diagonal block that belongs to the base.  The witness ``X0`` is
``L L^T + I`` on the base rows (a positive diagonal on the diagonal block)
and zero on every planted row.  Base constraints get ``b = A . X0``; planted
constraint ``t`` is ``D_t`` on ``S_t`` plus off-diagonal coupling into the
earlier sets, whose diagonal it leaves empty, so it only qualifies once
those sets are gone.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np

from .core import BlockDense, BlockStructure, SdpInstance, SymBlockMatrix

DENSE = 1


@dataclass(frozen=True)
class GenParams:
    seed: int
    base_n: int = 6
    base_m: int = 4
    support_sizes: tuple[int, ...] = (2, 2, 2)
    plant_infeasible: bool = False
    coupling_density: float = 0.3
    value_scale: float = 1.0
    base_nnz: int = 6
    diag_block: int = 0
    pd_shift: float = 1.0
    scramble: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "support_sizes", tuple(int(s) for s in self.support_sizes))
        if any(s < 1 for s in self.support_sizes):
            raise ValueError("support sizes must be positive")
        if min(self.base_n, self.base_m, self.diag_block) < 0:
            raise ValueError("dimensions must be nonnegative")
        if not 0.0 <= self.coupling_density <= 1.0:
            raise ValueError("coupling_density must lie in [0, 1]")
        if not self.value_scale > 0 or not self.pd_shift > 0:
            raise ValueError("value_scale and pd_shift must be positive")
        if self.plant_infeasible and not self.support_sizes:
            raise ValueError("an infeasible plant needs k >= 1")
        if self.base_m and not (self.base_n or self.diag_block):
            raise ValueError("base constraints need base rows")
        if self.base_nnz < 1:
            raise ValueError("base_nnz must be at least 1")

    @property
    def k(self) -> int:
        return len(self.support_sizes)


@dataclass(frozen=True)
class PlantSummary:
    deleted_count: int
    infeasible: bool
    planted_ids: tuple[int, ...]
    planted_supports: tuple[tuple[int, ...], ...]
    params: GenParams = field(repr=False, default=None)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["planted_ids"] = list(self.planted_ids)
        d["planted_supports"] = [list(s) for s in self.planted_supports]
        d["params"]["support_sizes"] = list(self.params.support_sizes)
        return d


class Planted(NamedTuple):
    instance: SdpInstance
    summary: PlantSummary
    witness: BlockDense


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def _nonzero_uniform(rng: np.random.Generator, scale: float, size=None):
    # uniform on [-scale, -scale/10] U [scale/10, scale]
    mag = rng.uniform(0.1, 1.0, size) * scale
    sign = np.where(rng.random(size) < 0.5, -1.0, 1.0)
    return mag * sign


def gen_planted(p: GenParams) -> Planted:
    rng = _rng(p.seed)
    N = p.base_n + sum(p.support_sizes)
    sizes = []
    if N:
        sizes.append(N)
    if p.diag_block:
        sizes.append(-p.diag_block)
    structure = BlockStructure(tuple(sizes))
    dense_id = DENSE if N else 0
    diag_id = (2 if N else 1) if p.diag_block else 0

    # witness
    L = np.tril(rng.uniform(-1.0, 1.0, (p.base_n, p.base_n)))
    X0 = np.zeros((N, N))
    X0[:p.base_n, :p.base_n] = L @ L.T + np.eye(p.base_n)
    x_diag = 1.0 + rng.uniform(0.0, 1.0, p.diag_block)

    starts = np.cumsum((p.base_n,) + p.support_sizes)
    sets = [list(range(starts[t], starts[t + 1])) for t in range(p.k)]
    planted_rows = list(range(p.base_n, N))

    def random_entries(count: int) -> dict:
        out = {}
        nbase = p.base_n + p.diag_block
        for r, c, v in zip(rng.integers(0, nbase, count), rng.integers(0, nbase, count),
                           _nonzero_uniform(rng, p.value_scale, count)):
            r, c = int(r), int(c)
            if r >= p.base_n or c >= p.base_n:
                # diagonal block: only its diagonal may carry entries
                d = (r if r >= p.base_n else c) - p.base_n
                out[(diag_id, d, d)] = float(v)
            else:
                out[(dense_id, min(r, c), max(r, c))] = float(v)
        return out

    def coupling(entries: dict) -> None:
        count = rng.binomial(len(planted_rows), p.coupling_density) if planted_rows else 0
        for r, c, v in zip(rng.choice(planted_rows, count), rng.integers(0, N, count),
                           _nonzero_uniform(rng, p.value_scale, count)):
            entries[(dense_id, min(int(r), int(c)), max(int(r), int(c)))] = float(v)

    def value(entries: dict) -> float:
        total = 0.0
        for (blk, i, j), v in entries.items():
            if blk == diag_id and diag_id:
                total += v * x_diag[i]
            else:
                total += v * X0[i, j] * (1.0 if i == j else 2.0)
        return total

    mats: list[dict] = []
    rhs: list[float] = []
    for _ in range(p.base_m):
        e = random_entries(p.base_nnz)
        rhs.append(value(e))
        coupling(e)
        mats.append(e)

    planted_pos = []
    for t, S in enumerate(sets):
        s = len(S)
        Lt = np.tril(rng.uniform(-1.0, 1.0, (s, s)))
        D = p.value_scale * (Lt @ Lt.T + p.pd_shift * np.eye(s))
        e = {(dense_id, S[a], S[b]): float(D[a, b])
             for a in range(s) for b in range(a, s) if D[a, b] != 0.0}
        if t:
            earlier = [r for T in sets[:t] for r in T]
            count = rng.binomial(s * len(earlier), p.coupling_density)
            pairs = [(int(rng.choice(S)), int(rng.choice(sets[t - 1])))]
            pairs += [(int(a), int(b)) for a, b in
                      zip(rng.choice(S, count), rng.choice(earlier, count))]
            vals = _nonzero_uniform(rng, p.value_scale, len(pairs))
            for (a, b), v in zip(pairs, vals):
                e[(dense_id, b, a)] = float(v)  # b < a: earlier sets come first
        planted_pos.append(len(mats))
        mats.append(e)
        rhs.append(-1.0 if p.plant_infeasible and t == p.k - 1 else 0.0)

    nbase = p.base_n + p.diag_block
    C = random_entries(max(1, p.base_nnz)) if nbase else {}
    if planted_rows:
        coupling(C)

    # scramble
    perm = np.arange(N)
    dperm = np.arange(p.diag_block)
    order = np.arange(len(mats))
    signs = np.ones(len(mats))
    if p.scramble:
        perm = rng.permutation(N)
        dperm = rng.permutation(p.diag_block)
        order = rng.permutation(len(mats))
        signs[rng.choice(len(mats), len(mats) // 2, replace=False)] = -1.0

    def to_matrix(e: dict, sign: float = 1.0) -> SymBlockMatrix:
        out = {}
        for (blk, i, j), v in e.items():
            pm = dperm if blk == diag_id and diag_id else perm
            a, b = int(pm[i]), int(pm[j])
            out[(blk, min(a, b) + 1, max(a, b) + 1)] = float(sign * v)
        return SymBlockMatrix(structure, out)

    constraints = []
    new_rhs = []
    for k in order:
        constraints.append(to_matrix(mats[k], signs[k]))
        rhs_k = float(signs[k] * rhs[k])
        new_rhs.append(rhs_k + 0.0)  # avoid writing -0.0
    new_id = {int(k): pos + 1 for pos, k in enumerate(order)}

    witness: BlockDense = []
    if N:
        W = np.zeros((N, N))
        W[np.ix_(perm, perm)] = X0
        witness.append(W)
    if p.diag_block:
        witness.append(np.diag(x_diag[np.argsort(dperm)]))

    flat0 = 0  # the dense block comes first
    summary = PlantSummary(
        deleted_count=sum(p.support_sizes[:-1] if p.plant_infeasible else p.support_sizes),
        infeasible=p.plant_infeasible,
        planted_ids=tuple(new_id[k] for k in planted_pos),
        planted_supports=tuple(tuple(sorted(flat0 + int(perm[r]) for r in S)) for S in sets),
        params=p,
    )
    label = (f"gen seed={p.seed} base=({p.base_n},{p.base_m}) k={p.k} "
             f"{'infeasible' if p.plant_infeasible else 'reducible'}")
    inst = SdpInstance(structure, to_matrix(C), tuple(constraints), tuple(new_rhs), label)
    return Planted(inst, summary, witness)


def gen_strictly_feasible(seed: int, n: int, m: int, **kw) -> tuple[SdpInstance, BlockDense]:
    planted = gen_planted(GenParams(seed, base_n=n, base_m=m, support_sizes=(), **kw))
    inst = planted.instance
    inst = SdpInstance(inst.structure, inst.objective, inst.constraints, inst.rhs,
                       f"gen seed={seed} strictly feasible n={n} m={m}")
    return inst, planted.witness


PRESETS = {
    "reducible": dict(plant_infeasible=False),
    "infeasible": dict(plant_infeasible=True),
    "ill-conditioned": dict(plant_infeasible=False, pd_shift=1e-8),
}
