import numpy as np
import pytest

from sdpprep.core import BlockStructure, SdpInstance, SymBlockMatrix
from sdpprep.io_sdpa import SolutionFile
from sdpprep.metrics import (DimacsErrors, HelpedReason, NotApplicable, dimacs_errors,
                             helped, worst_error)

from helpers import block_perms, permute_instance, permute_matrix


def sym(st, blocks):
    return SymBlockMatrix.from_dense(st, [np.asarray(b, dtype=float) for b in blocks])


def test_feasible_pair_zero_errors():
    st = BlockStructure((2,))
    C = sym(st, [[[2.0, 1.0], [1.0, 2.0]]])
    A = sym(st, [np.eye(2)])
    inst = SdpInstance(st, C, (A,), (2.0,))
    sol = SolutionFile(np.zeros(1), sym(st, [np.eye(2)]), C)
    e = dimacs_errors(inst, sol)
    assert (e.err1, e.err2, e.err3, e.err4) == (0.0, 0.0, 0.0, 0.0)


def test_err1_direct():
    st = BlockStructure((2,))
    inst = SdpInstance(st, SymBlockMatrix.zero(st), (sym(st, [np.eye(2)]),), (1.0,))
    e = dimacs_errors(inst, SolutionFile(None, sym(st, [np.eye(2)])))
    assert e.err1 == pytest.approx(abs(2.0 - 1.0) / (1 + 1.0))
    assert e.err3 is None and e.err4 is None and e.err5 is None and e.err6 is None


def test_err2_negative_eigenvalue():
    st = BlockStructure((2,))
    inst = SdpInstance(st, SymBlockMatrix.zero(st), (sym(st, [np.eye(2)]),), (0.0,))
    e = dimacs_errors(inst, SolutionFile(None, sym(st, [np.diag([-1.0, 1.0])])))
    assert e.err2 == pytest.approx(1.0, abs=1e-10)


def test_optimal_pairs_have_zero_gap():
    # min x s.t. x = 1: X = 1, y = 1, S = 0
    st = BlockStructure((1,))
    one = sym(st, [[[1.0]]])
    inst = SdpInstance(st, one, (one,), (1.0,))
    e = dimacs_errors(inst, SolutionFile(np.array([1.0]), one, SymBlockMatrix.zero(st)))
    assert abs(e.err5) <= 1e-12 and abs(e.err6) <= 1e-12 and e.err3 <= 1e-12
    # min tr X s.t. X11 = 1: X = diag(1,0), y = 1, S = diag(0,1)
    st = BlockStructure((2,))
    inst = SdpInstance(st, sym(st, [np.eye(2)]), (sym(st, [np.diag([1.0, 0])]),), (1.0,))
    sol = SolutionFile(np.array([1.0]), sym(st, [np.diag([1.0, 0])]),
                       sym(st, [np.diag([0.0, 1])]))
    e = dimacs_errors(inst, sol)
    assert abs(e.err5) <= 1e-12 and abs(e.err6) <= 1e-12
    assert max(e.err1, e.err2, e.err3, e.err4) <= 1e-12


def test_diagonal_block_errors():
    st = BlockStructure((-2,))
    inst = SdpInstance(st, sym(st, [np.diag([1.0, 1.0])]), (sym(st, [np.diag([1.0, 0])]),),
                       (1.0,))
    sol = SolutionFile(np.array([1.0]), sym(st, [np.diag([1.0, -0.5])]),
                       sym(st, [np.diag([0.0, 1.0])]))
    e = dimacs_errors(inst, sol)
    assert e.err2 == pytest.approx(0.5 / 2)
    assert e.err3 == 0.0
    assert e.err6 == pytest.approx(-0.5 / (1 + 0.5 + 1))  # C.X = 0.5, b.y = 1


def test_worst_error():
    assert worst_error(DimacsErrors(0, 0, 0, 0, 0, 0)) == 0
    assert worst_error(DimacsErrors(1e-9, 2e-7, 0, 0, -1e-8, 3e-9)) == 2e-7
    assert worst_error(DimacsErrors(1e-9, None, None, None, None, None)) == 1e-9
    with pytest.raises(NotApplicable):
        worst_error(DimacsErrors(None, None, None, None, None, None))


def test_helped_clauses():
    assert helped(0, 0, True) == (True, HelpedReason.INFEASIBILITY)
    assert helped(1e-4, 1e-6, False) == (True, HelpedReason.ERROR_IMPROVED)
    assert helped(1e-8, 1e-9, False, 3.0, 3.0) == (False, HelpedReason.NOT_HELPED)
    assert helped(1e-8, 1e-9, False, 3.0, 3.0 + 2e-6) == (True,
                                                          HelpedReason.OBJECTIVE_CHANGED)
    assert helped(1e-4, 0.0, False)[0]
    assert not helped(1e-4, 2e-5, False)[0]
    assert not helped(1e-8, 1e-9, False, 3.0, None)[0]


def test_helped_as_printed():
    assert not helped(1e-4, 1e-6, False, as_printed=True)[0]
    assert helped(1e-4, 1e-2, False, as_printed=True) == (True, HelpedReason.ERROR_IMPROVED)
    assert not helped(1e-4, 0.0, False, as_printed=True)[0]


def _random_case(seed):
    rng = np.random.default_rng(seed)
    st = BlockStructure((3, -2))

    def rsym():
        B = rng.normal(size=(3, 3))
        return [B + B.T, np.diag(rng.normal(size=2))]

    inst = SdpInstance(st, sym(st, rsym()), (sym(st, rsym()), sym(st, rsym())),
                       tuple(rng.normal(size=2)))
    sol = SolutionFile(rng.normal(size=2), sym(st, rsym()), sym(st, rsym()))
    return inst, sol, rng


@pytest.mark.parametrize("seed", range(10))
def test_permutation_invariance(seed):
    inst, sol, rng = _random_case(seed)
    perms = block_perms(inst.structure, rng)
    psol = SolutionFile(sol.y, permute_matrix(sol.X, perms), permute_matrix(sol.S, perms))
    a = dimacs_errors(inst, sol).as_dict()
    b = dimacs_errors(permute_instance(inst, perms), psol).as_dict()
    for k in a:
        assert a[k] == pytest.approx(b[k], rel=1e-9, abs=1e-9)


@pytest.mark.parametrize("t", [0.0, 0.5, 2.0, 7.5])
def test_err2_homogeneous(t):
    inst, sol, _ = _random_case(99)
    base = dimacs_errors(inst, sol).err2
    scaled = dimacs_errors(inst, SolutionFile(sol.y, sol.X.scaled(t), sol.S)).err2
    assert scaled == pytest.approx(t * base, abs=1e-9)
