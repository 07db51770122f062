"""Reader and writer for sparse SDPA (``.dat-s``) files and solution files.

Sparse SDPA layout::

    "optional comment lines starting with " or *
    m
    nblocks
    size_1 size_2 ...        (separators , ( ) { } allowed)
    b_1 ... b_m
    matno blkno i j value    (matno 0 is the objective)

Solution files are line oriented::

    # comment
    y v_1 ... v_m
    X blk i j value
    S blk i j value
"""

from __future__ import annotations

import io
import re
from dataclasses import dataclass
from typing import IO, Iterator

import numpy as np

from .core import BlockStructure, SdpInstance, StructuralError, SymBlockMatrix


class SdpaError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class ParseError(SdpaError):
    pass


class DuplicateEntry(SdpaError):
    pass


class BadIndex(SdpaError):
    pass


class BadMatno(SdpaError):
    pass


class BadDiagonalBlockEntry(SdpaError):
    pass


_SEPARATORS = re.compile(r"[,(){}]")


def _lines(source: str | IO[str]) -> Iterator[tuple[int, str]]:
    text = source if isinstance(source, str) else source.read()
    for k, line in enumerate(io.StringIO(text), start=1):
        yield k, line.rstrip("\n")


def _int(tok: str, lineno: int) -> int:
    try:
        return int(tok)
    except ValueError:
        try:
            x = float(tok)
        except ValueError:
            raise ParseError(f"expected an integer, got {tok!r}", lineno) from None
        if not x.is_integer():
            raise ParseError(f"expected an integer, got {tok!r}", lineno)
        return int(x)


def _float(tok: str, lineno: int) -> float:
    try:
        x = float(tok)
    except ValueError:
        raise ParseError(f"expected a number, got {tok!r}", lineno) from None
    if not np.isfinite(x):
        raise ParseError(f"non-finite value {tok!r}", lineno)
    return x


def _is_number(tok: str) -> bool:
    try:
        float(tok)
    except ValueError:
        return False
    return True


def _check_entry(structure: BlockStructure, blk: int, i: int, j: int,
                 lineno: int) -> tuple[int, int]:
    if not 1 <= blk <= structure.nblocks:
        raise BadIndex(f"block {blk} out of range 1..{structure.nblocks}", lineno)
    dim = structure.dim(blk)
    if not (1 <= i <= dim and 1 <= j <= dim):
        raise BadIndex(f"index ({i}, {j}) out of range 1..{dim} in block {blk}", lineno)
    if structure.is_diagonal(blk) and i != j:
        raise BadDiagonalBlockEntry(
            f"off-diagonal entry ({i}, {j}) in diagonal block {blk}", lineno)
    return (i, j) if i <= j else (j, i)


def parse_instance(source: str | IO[str], label: str | None = None) -> SdpInstance:
    """Parse sparse SDPA text (or an open text stream)."""
    lines = list(_lines(source))
    pos = 0
    comments = []
    while pos < len(lines) and lines[pos][1][:1] in ('"', "*"):
        comments.append(lines[pos][1][1:].strip())
        pos += 1

    def header_tokens() -> Iterator[tuple[int, list[str]]]:
        nonlocal pos
        while pos < len(lines):
            lineno, text = lines[pos]
            pos += 1
            toks = _SEPARATORS.sub(" ", text).split()
            if toks:
                yield lineno, toks

    header = header_tokens()
    try:
        lineno, toks = next(header)
        m = _int(toks[0], lineno)
        lineno, toks = next(header)
        nblocks = _int(toks[0], lineno)
    except StopIteration:
        raise ParseError("truncated header", len(lines)) from None
    if m < 0 or nblocks < 0:
        raise ParseError("m and nblocks must be nonnegative", lineno)

    def collect(count: int, conv, what: str) -> list:
        nonlocal lineno
        out: list = []
        while len(out) < count:
            try:
                lineno, tks = next(header)
            except StopIteration:
                raise ParseError(f"expected {count} {what}, found {len(out)}",
                                 len(lines)) from None
            for tok in tks:
                if len(out) == count or not _is_number(tok):
                    break
                out.append(conv(tok, lineno))
        return out

    sizes = collect(nblocks, _int, "block sizes")
    try:
        structure = BlockStructure(tuple(sizes))
    except StructuralError as exc:
        raise ParseError(str(exc), lineno) from None
    rhs = collect(m, _float, "rhs values")

    entries: list[dict] = [dict() for _ in range(m + 1)]
    for lineno, text in lines[pos:]:
        toks = text.split()
        if not toks or text[:1] in ('"', "*", "#"):
            continue
        if len(toks) < 5:
            raise ParseError(f"entry line needs 5 fields, got {len(toks)}", lineno)
        matno, blk, i, j = (_int(t, lineno) for t in toks[:4])
        value = _float(toks[4], lineno)
        if not 0 <= matno <= m:
            raise BadMatno(f"matrix number {matno} out of range 0..{m}", lineno)
        i, j = _check_entry(structure, blk, i, j, lineno)
        bucket = entries[matno]
        if (blk, i, j) in bucket:
            raise DuplicateEntry(f"duplicate entry ({matno}, {blk}, {i}, {j})", lineno)
        bucket[(blk, i, j)] = value

    mats = [SymBlockMatrix(structure, {k: v for k, v in e.items() if v != 0.0})
            for e in entries]
    if label is None:
        label = comments[0] if comments else ""
    return SdpInstance(structure, mats[0], tuple(mats[1:]), tuple(rhs), label)


def write_instance(inst: SdpInstance) -> str:
    """Render ``inst`` as sparse SDPA; floats use the shortest round-trip repr."""
    out = []
    label = " ".join(inst.label.split())
    out.append(f'"{label}' if label else '"')
    out.append(str(inst.m))
    out.append(str(inst.structure.nblocks))
    out.append(" ".join(str(s) for s in inst.structure.sizes))
    out.append(" ".join(repr(float(b)) for b in inst.rhs))
    for matno, A in enumerate((inst.objective, *inst.constraints)):
        for b, i, j, v in A.items():
            out.append(f"{matno} {b} {i} {j} {float(v)!r}")
    return "\n".join(out) + "\n"


def read_instance(path) -> SdpInstance:
    with open(path, encoding="utf-8") as fh:
        return parse_instance(fh)


@dataclass(frozen=True)
class SolutionFile:
    """Candidate primal/dual point; absent parts are ``None``."""

    y: np.ndarray | None
    X: SymBlockMatrix
    S: SymBlockMatrix | None = None


def parse_solution(source: str | IO[str], structure: BlockStructure,
                   m: int) -> SolutionFile:
    y = None
    parts: dict[str, dict] = {"X": {}, "S": {}}
    for lineno, text in _lines(source):
        text = text.split("#", 1)[0]
        toks = text.split()
        if not toks:
            continue
        tag = toks[0]
        if tag == "y":
            if y is not None:
                raise DuplicateEntry("second y line", lineno)
            if len(toks) - 1 != m:
                raise ParseError(f"y needs {m} values, got {len(toks) - 1}", lineno)
            y = np.array([_float(t, lineno) for t in toks[1:]])
        elif tag in parts:
            if len(toks) != 5:
                raise ParseError(f"{tag} line needs 5 fields, got {len(toks)}", lineno)
            blk, i, j = (_int(t, lineno) for t in toks[1:4])
            value = _float(toks[4], lineno)
            i, j = _check_entry(structure, blk, i, j, lineno)
            if (blk, i, j) in parts[tag]:
                raise DuplicateEntry(f"duplicate {tag} entry ({blk}, {i}, {j})", lineno)
            parts[tag][(blk, i, j)] = value
        else:
            raise ParseError(f"unknown line tag {tag!r}", lineno)
    X = SymBlockMatrix(structure, {k: v for k, v in parts["X"].items() if v != 0.0})
    S = None
    if parts["S"]:
        S = SymBlockMatrix(structure, {k: v for k, v in parts["S"].items() if v != 0.0})
    return SolutionFile(y, X, S)


def write_solution(sol: SolutionFile) -> str:
    out = []
    if sol.y is not None:
        out.append(" ".join(["y"] + [repr(float(v)) for v in sol.y]))
    for tag, M in (("X", sol.X), ("S", sol.S)):
        if M is None:
            continue
        for b, i, j, v in M.items():
            out.append(f"{tag} {b} {i} {j} {float(v)!r}")
    return "\n".join(out) + "\n" if out else ""
