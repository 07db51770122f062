from __future__ import annotations

import numpy as np

from sdpprep.core import SdpInstance, SymBlockMatrix
from sdpprep.io_sdpa import parse_instance

EXAMPLE_1 = """\
"Example 1: x11 = 0 forces the first row/column of X to vanish
2
1
3
0 -1
1 1 1 1 1.0
2 1 1 3 1.0
2 1 2 2 1.0
"""


def example_1() -> SdpInstance:
    return parse_instance(EXAMPLE_1)


def block_perms(structure, rng) -> list[np.ndarray]:
    return [rng.permutation(abs(s)) for s in structure.sizes]


def permute_matrix(A: SymBlockMatrix, perms) -> SymBlockMatrix:
    out = {}
    for (b, i, j), v in A.entries.items():
        p = perms[b - 1]
        a, c = int(p[i - 1]) + 1, int(p[j - 1]) + 1
        out[(b, min(a, c), max(a, c))] = v
    return SymBlockMatrix(A.structure, out)


def permute_instance(inst: SdpInstance, perms, signs=None) -> SdpInstance:
    signs = np.ones(inst.m) if signs is None else signs
    cons = tuple(permute_matrix(A, perms).scaled(float(s))
                 for A, s in zip(inst.constraints, signs))
    rhs = tuple(float(s) * b + 0.0 for s, b in zip(signs, inst.rhs))
    return SdpInstance(inst.structure, permute_matrix(inst.objective, perms), cons, rhs,
                       inst.label)


def permute_flat(structure, perms, flat: int) -> int:
    g = structure.index(flat)
    return structure.flat(g.block, int(perms[g.block - 1][g.local - 1]) + 1)


def permute_dense(X, perms):
    out = []
    for M, p in zip(X, perms):
        N = np.zeros_like(M)
        N[np.ix_(p, p)] = M
        out.append(N)
    return out
