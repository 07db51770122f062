"""Block-sparse symmetric matrices and SDP instances.

Matrices are stored the way SDPA files store them: one coordinate entry
``(block, i, j) -> value`` per upper-triangle nonzero, with 1-based block
and row indices.  Index sets ("supports") are kept as sorted tuples of flat
0-based positions into the full ``n x n`` block-diagonal matrix.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

Key = tuple[int, int, int]
BlockDense = list[np.ndarray]


class StructuralError(ValueError):
    """Index, shape or structure mismatch."""


@dataclass(frozen=True)
class BlockStructure:
    """Signed SDPA block sizes; negative sizes are diagonal blocks."""

    sizes: tuple[int, ...]

    def __post_init__(self) -> None:
        sizes = tuple(int(s) for s in self.sizes)
        if any(s == 0 for s in sizes):
            raise StructuralError(f"block sizes must be nonzero, got {sizes}")
        object.__setattr__(self, "sizes", sizes)

    @property
    def nblocks(self) -> int:
        return len(self.sizes)

    @cached_property
    def offsets(self) -> tuple[int, ...]:
        out = [0]
        for s in self.sizes:
            out.append(out[-1] + abs(s))
        return tuple(out)

    @property
    def n(self) -> int:
        return self.offsets[-1]

    def dim(self, block: int) -> int:
        return abs(self.sizes[block - 1])

    def is_diagonal(self, block: int) -> bool:
        return self.sizes[block - 1] < 0

    def check(self, block: int, local: int) -> None:
        if not 1 <= block <= self.nblocks:
            raise StructuralError(f"block {block} out of range 1..{self.nblocks}")
        if not 1 <= local <= self.dim(block):
            raise StructuralError(
                f"index {local} out of range 1..{self.dim(block)} in block {block}")

    def flat(self, block: int, local: int) -> int:
        self.check(block, local)
        return self.offsets[block - 1] + local - 1

    def index(self, flat: int) -> GlobalIndex:
        if not 0 <= flat < self.n:
            raise StructuralError(f"flat index {flat} out of range 0..{self.n - 1}")
        block = bisect.bisect_right(self.offsets, flat)
        return GlobalIndex(block, flat - self.offsets[block - 1] + 1, flat)


@dataclass(frozen=True, order=True)
class GlobalIndex:
    block: int
    local: int
    flat: int


@dataclass(frozen=True)
class Support:
    """Sorted set of row/column indices of one block structure."""

    structure: BlockStructure
    flats: tuple[int, ...] = ()

    @classmethod
    def from_flats(cls, structure: BlockStructure, flats: Iterable[int]) -> Support:
        flats = tuple(sorted(set(int(f) for f in flats)))
        if flats and not (0 <= flats[0] and flats[-1] < structure.n):
            raise StructuralError(f"support {flats} outside 0..{structure.n - 1}")
        return cls(structure, flats)

    @classmethod
    def from_pairs(cls, structure: BlockStructure,
                   pairs: Iterable[tuple[int, int]]) -> Support:
        return cls.from_flats(structure, (structure.flat(b, l) for b, l in pairs))

    def __len__(self) -> int:
        return len(self.flats)

    def __iter__(self) -> Iterator[GlobalIndex]:
        return iter(self.indices)

    def __contains__(self, item: int | GlobalIndex) -> bool:
        flat = item.flat if isinstance(item, GlobalIndex) else item
        k = bisect.bisect_left(self.flats, flat)
        return k < len(self.flats) and self.flats[k] == flat

    @property
    def indices(self) -> tuple[GlobalIndex, ...]:
        return tuple(self.structure.index(f) for f in self.flats)

    def pairs(self) -> list[tuple[int, int]]:
        return [(g.block, g.local) for g in self.indices]

    def by_block(self) -> dict[int, list[int]]:
        """Local (1-based) indices grouped by block, in ascending order."""
        out: dict[int, list[int]] = {}
        for g in self.indices:
            out.setdefault(g.block, []).append(g.local)
        return out


@dataclass(frozen=True)
class SymBlockMatrix:
    """Upper-triangle coordinate storage of a symmetric block-diagonal matrix.

    Construct through :meth:`from_entries` to get validation; the plain
    constructor trusts its input.
    """

    structure: BlockStructure
    entries: Mapping[Key, float] = field(default_factory=dict)

    @classmethod
    def zero(cls, structure: BlockStructure) -> SymBlockMatrix:
        return cls(structure, {})

    @classmethod
    def from_entries(cls, structure: BlockStructure,
                     entries: Iterable[tuple[int, int, int, float]],
                     drop_zeros: bool = True) -> SymBlockMatrix:
        out: dict[Key, float] = {}
        for block, i, j, value in entries:
            block, i, j, value = int(block), int(i), int(j), float(value)
            if i > j:
                i, j = j, i
            structure.check(block, i)
            structure.check(block, j)
            if structure.is_diagonal(block) and i != j:
                raise StructuralError(
                    f"off-diagonal entry ({i}, {j}) in diagonal block {block}")
            if not np.isfinite(value):
                raise StructuralError(f"non-finite value at ({block}, {i}, {j})")
            if (block, i, j) in out:
                raise StructuralError(f"duplicate entry ({block}, {i}, {j})")
            out[(block, i, j)] = value
        if drop_zeros:
            out = {k: v for k, v in out.items() if v != 0.0}
        return cls(structure, out)

    @classmethod
    def from_dense(cls, structure: BlockStructure, blocks: BlockDense) -> SymBlockMatrix:
        check_dense(structure, blocks)
        out: dict[Key, float] = {}
        for b, M in enumerate(blocks, start=1):
            if structure.is_diagonal(b):
                rows = cols = np.flatnonzero(np.diag(M))
            else:
                rows, cols = np.nonzero(np.triu(M))
            for i, j in zip(rows, cols):
                out[(b, int(i) + 1, int(j) + 1)] = float(M[i, j])
        return cls(structure, out)

    @property
    def nnz(self) -> int:
        return len(self.entries)

    def items(self) -> list[tuple[int, int, int, float]]:
        return [(b, i, j, v) for (b, i, j), v in sorted(self.entries.items())]

    def scaled(self, factor: float) -> SymBlockMatrix:
        return SymBlockMatrix(self.structure,
                              {k: factor * v for k, v in self.entries.items()})

    def to_dense(self) -> BlockDense:
        blocks = zeros(self.structure)
        for (b, i, j), v in self.entries.items():
            blocks[b - 1][i - 1, j - 1] = v
            blocks[b - 1][j - 1, i - 1] = v
        return blocks

    def to_full(self) -> np.ndarray:
        return block_diag(self.structure, self.to_dense())


@dataclass(frozen=True)
class SdpInstance:
    """``inf C.X  s.t.  A_i.X = b_i (i = 1..m),  X psd``."""

    structure: BlockStructure
    objective: SymBlockMatrix
    constraints: tuple[SymBlockMatrix, ...]
    rhs: tuple[float, ...]
    label: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "constraints", tuple(self.constraints))
        object.__setattr__(self, "rhs", tuple(float(b) for b in self.rhs))
        if len(self.constraints) != len(self.rhs):
            raise StructuralError(
                f"{len(self.constraints)} constraints but {len(self.rhs)} rhs values")
        for A in (self.objective, *self.constraints):
            if A.structure != self.structure:
                raise StructuralError("all matrices must share the instance structure")

    @property
    def m(self) -> int:
        return len(self.constraints)

    @property
    def n(self) -> int:
        return self.structure.n

    def residuals(self, X: BlockDense) -> np.ndarray:
        return np.array([dot(A, X) for A in self.constraints]) - np.array(self.rhs)


def zeros(structure: BlockStructure) -> BlockDense:
    return [np.zeros((abs(s), abs(s))) for s in structure.sizes]


def check_dense(structure: BlockStructure, X: Sequence[np.ndarray]) -> None:
    if len(X) != structure.nblocks or any(
            np.shape(M) != (abs(s), abs(s)) for M, s in zip(X, structure.sizes)):
        raise StructuralError(
            f"dense blocks {[np.shape(M) for M in X]} do not match sizes {structure.sizes}")


def block_diag(structure: BlockStructure, X: Sequence[np.ndarray]) -> np.ndarray:
    check_dense(structure, X)
    full = np.zeros((structure.n, structure.n))
    for b, M in enumerate(X):
        lo, hi = structure.offsets[b], structure.offsets[b + 1]
        full[lo:hi, lo:hi] = np.diag(np.diag(M)) if structure.sizes[b] < 0 else M
    return full


def support_of(A: SymBlockMatrix, eps_support: float = 0.0) -> Support:
    """Rows/columns of ``A`` holding an entry with ``|value| > eps_support``."""
    if eps_support < 0:
        raise ValueError("eps_support must be nonnegative")
    offsets = A.structure.offsets
    flats = set()
    for (b, i, j), v in A.entries.items():
        if abs(v) > eps_support:
            flats.add(offsets[b - 1] + i - 1)
            flats.add(offsets[b - 1] + j - 1)
    return Support(A.structure, tuple(sorted(flats)))


def restrict(A: SymBlockMatrix, S: Support) -> list[np.ndarray]:
    """Principal submatrices of ``A`` on ``S``, one per block that ``S`` meets.

    Dense blocks give a 2-D array, diagonal blocks the 1-D vector of their
    diagonal.
    """
    if S.structure != A.structure:
        raise StructuralError("support and matrix have different structures")
    groups = S.by_block()
    pos = {b: {l: k for k, l in enumerate(locs)} for b, locs in groups.items()}
    out = {b: (np.zeros(len(locs)) if A.structure.is_diagonal(b)
               else np.zeros((len(locs), len(locs))))
           for b, locs in groups.items()}
    for (b, i, j), v in A.entries.items():
        p = pos.get(b)
        if p is None or i not in p or j not in p:
            continue
        M = out[b]
        if M.ndim == 1:
            M[p[i]] = v
        else:
            M[p[i], p[j]] = v
            M[p[j], p[i]] = v
    return [out[b] for b in sorted(out)]


@dataclass(frozen=True)
class IndexMap:
    """Renumbering induced by deleting a support from a structure.

    ``block_map[b-1]`` is the new block number (0 when the block vanished);
    ``local_maps[b-1][l-1]`` the new local index (0 when deleted).
    """

    old: BlockStructure
    new: BlockStructure
    block_map: tuple[int, ...]
    local_maps: tuple[tuple[int, ...], ...]

    def __call__(self, block: int, local: int) -> tuple[int, int] | None:
        nb = self.block_map[block - 1]
        nl = self.local_maps[block - 1][local - 1]
        return (nb, nl) if nb and nl else None

    def flat_map(self) -> list[int]:
        """Old flat index -> new flat index, ``-1`` for deleted rows."""
        out = []
        for b in range(1, self.old.nblocks + 1):
            for l in range(1, self.old.dim(b) + 1):
                hit = self(b, l)
                out.append(-1 if hit is None else self.new.flat(*hit))
        return out


def shrink(structure: BlockStructure, S: Support) -> IndexMap:
    if S.structure != structure:
        raise StructuralError("support does not belong to this structure")
    drop = S.by_block()
    sizes, block_map, local_maps = [], [], []
    for b, size in enumerate(structure.sizes, start=1):
        gone = set(drop.get(b, ()))
        kept = 0
        lm = []
        for l in range(1, abs(size) + 1):
            if l in gone:
                lm.append(0)
            else:
                kept += 1
                lm.append(kept)
        local_maps.append(tuple(lm))
        if kept:
            sizes.append(kept if size > 0 else -kept)
            block_map.append(len(sizes))
        else:
            block_map.append(0)
    return IndexMap(structure, BlockStructure(tuple(sizes)), tuple(block_map),
                    tuple(local_maps))


def delete_with_map(A: SymBlockMatrix, imap: IndexMap) -> SymBlockMatrix:
    out = {}
    bm, lms = imap.block_map, imap.local_maps
    for (b, i, j), v in A.entries.items():
        nb = bm[b - 1]
        if not nb:
            continue
        lm = lms[b - 1]
        ni, nj = lm[i - 1], lm[j - 1]
        if ni and nj:
            out[(nb, ni, nj)] = v
    return SymBlockMatrix(imap.new, out)


def delete_indices(A: SymBlockMatrix, S: Support) -> SymBlockMatrix:
    """Drop every row and column in ``S`` and renumber what is left."""
    if not len(S):
        return A
    return delete_with_map(A, shrink(A.structure, S))


def dot(A: SymBlockMatrix, X: Sequence[np.ndarray]) -> float:
    """Trace inner product of ``A`` with dense block matrix ``X``."""
    check_dense(A.structure, X)
    total = 0.0
    for (b, i, j), v in A.entries.items():
        x = X[b - 1][i - 1, j - 1]
        total += v * x if i == j else 2.0 * v * x
    return float(total)
