"""
Conic Benchmark Format (CBF, version 3) writer and reader.

Layout written by :func:`export_cbf`::

    VER 3
    OBJSENSE MIN
    VAR n 1 / F n
    INT k / indices
    CON m chunks: one L= chunk (equalities), one L- chunk (inequalities),
                  one Q chunk per second-order cone, one QR chunk per rotated cone
    OBJACOORD, OBJBCOORD, ACOORD, BCOORD

An equality ``A v = b`` is stored as ``A v - b`` in ``L=``, an inequality
``A v <= b`` as ``A v - b`` in ``L-``.  A cone ``||F v + g|| <= a v + b`` is the
stacked affine map ``(a v + b, F v + g)`` in ``Q``; a rotated cone is
``(a1 v + b1, a2 v + b2, F v + g)`` in ``QR``.  Lines starting with ``#`` are
comments and may carry a provenance header.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from ..exceptions import SolutionLoadError
from .program import ConicProgram, RsocBlock, SocBlock, _num


def _coo_lines(M, row_offset):
    M = sp.csr_matrix(M)
    M.sum_duplicates()
    M.sort_indices()
    out = []
    for i in range(M.shape[0]):
        lo, hi = M.indptr[i], M.indptr[i + 1]
        for j, val in zip(M.indices[lo:hi], M.data[lo:hi]):
            if val != 0:
                out.append(f"{row_offset + i} {j} {_num(val)}")
    return out


def write_cbf(program, header_lines=()):
    """Return the CBF text of ``program``."""
    p = program
    n = p.n
    chunks = []
    arows = []
    brows = []
    row = 0
    m_eq, m_ub = p.A_eq.shape[0], p.A_ub.shape[0]
    if m_eq:
        chunks.append(("L=", m_eq))
        arows += _coo_lines(p.A_eq, row)
        brows += [(row + i, -b) for i, b in enumerate(p.b_eq)]
        row += m_eq
    if m_ub:
        chunks.append(("L-", m_ub))
        arows += _coo_lines(p.A_ub, row)
        brows += [(row + i, -b) for i, b in enumerate(p.b_ub)]
        row += m_ub
    for blk in p.soc:
        chunks.append(("Q", blk.dim))
        stacked = sp.vstack([sp.csr_matrix(blk.a.reshape(1, -1)), blk.F], format="csr")
        arows += _coo_lines(stacked, row)
        brows += [(row, blk.b)] + [(row + 1 + i, g) for i, g in enumerate(blk.g)]
        row += blk.dim
    for blk in p.rsoc:
        chunks.append(("QR", blk.dim))
        stacked = sp.vstack([sp.csr_matrix(np.vstack([blk.a1, blk.a2])), blk.F], format="csr")
        arows += _coo_lines(stacked, row)
        brows += [(row, blk.b1), (row + 1, blk.b2)] + [(row + 2 + i, g) for i, g in enumerate(blk.g)]
        row += blk.dim
    brows = [(i, v) for i, v in brows if v != 0]

    out = [f"# {line}" for line in header_lines]
    out += ["VER", "3", "", "OBJSENSE", "MIN", "", "VAR", f"{n} 1", f"F {n}", ""]
    ints = p.binary_indices
    if ints.size:
        out += ["INT", str(ints.size)] + [str(j) for j in ints] + [""]
    if chunks:
        out += ["CON", f"{row} {len(chunks)}"] + [f"{k} {d}" for k, d in chunks] + [""]
    obj = [(j, v) for j, v in enumerate(p.c) if v != 0]
    if obj:
        out += ["OBJACOORD", str(len(obj))] + [f"{j} {_num(v)}" for j, v in obj] + [""]
    if p.c0 != 0:
        out += ["OBJBCOORD", _num(p.c0), ""]
    if arows:
        out += ["ACOORD", str(len(arows))] + arows + [""]
    if brows:
        out += ["BCOORD", str(len(brows))] + [f"{i} {_num(v)}" for i, v in brows] + [""]
    return "\n".join(out)


def export_cbf(program, path, header_lines=()):
    text = write_cbf(program, header_lines)
    with open(path, "w") as fh:
        fh.write(text)
    return path


def _tokens(text):
    for raw in text.splitlines():
        line = raw.strip()
        if line and not line.startswith("#"):
            yield line


def parse_cbf(text):
    """Parse CBF text produced by :func:`write_cbf` (or any file using the
    same cone types) back into a :class:`ConicProgram`.

    Variable domains other than ``F`` are turned into explicit bound rows.
    """
    lines = list(_tokens(text))
    pos = 0
    n = None
    sense = "MIN"
    var_cones = []
    ints = []
    con_cones = []
    m = 0
    c = {}
    c0 = 0.0
    acoord = []
    bcoord = {}

    def take():
        nonlocal pos
        if pos >= len(lines):
            raise SolutionLoadError("unexpected end of CBF data")
        pos += 1
        return lines[pos - 1]

    try:
        while pos < len(lines):
            key = take()
            if key == "VER":
                ver = int(take())
                if ver > 3:
                    raise SolutionLoadError(f"unsupported CBF version {ver}")
            elif key == "OBJSENSE":
                sense = take().upper()
            elif key == "VAR":
                n, k = map(int, take().split())
                for _ in range(k):
                    cone, d = take().split()
                    var_cones.append((cone, int(d)))
            elif key == "INT":
                ints = [int(take()) for _ in range(int(take()))]
            elif key == "CON":
                m, k = map(int, take().split())
                for _ in range(k):
                    cone, d = take().split()
                    con_cones.append((cone, int(d)))
            elif key == "OBJACOORD":
                for _ in range(int(take())):
                    j, v = take().split()
                    c[int(j)] = float(v)
            elif key == "OBJBCOORD":
                c0 = float(take())
            elif key == "ACOORD":
                for _ in range(int(take())):
                    i, j, v = take().split()
                    acoord.append((int(i), int(j), float(v)))
            elif key == "BCOORD":
                for _ in range(int(take())):
                    i, v = take().split()
                    bcoord[int(i)] = float(v)
            else:
                raise SolutionLoadError(f"unsupported CBF section {key!r}")
    except ValueError as exc:
        raise SolutionLoadError(f"malformed CBF near line {pos}: {exc}") from exc
    if n is None:
        raise SolutionLoadError("CBF data has no VAR section")

    cvec = np.zeros(n)
    for j, v in c.items():
        cvec[j] = v
    if sense == "MAX":
        cvec, c0 = -cvec, -c0
    if acoord:
        ii, jj, vv = zip(*acoord)
        A = sp.csr_matrix((vv, (ii, jj)), shape=(m, n))
    else:
        A = sp.csr_matrix((m, n))
    b = np.zeros(m)
    for i, v in bcoord.items():
        b[i] = v

    eq_rows, eq_rhs, ub_rows, ub_rhs = [], [], [], []
    soc, rsoc = [], []
    row = 0
    for cone, d in con_cones:
        blockA, blockb = A[row:row + d], b[row:row + d]
        if cone == "L=":
            eq_rows.append(blockA)
            eq_rhs.append(-blockb)
        elif cone == "L-":
            ub_rows.append(blockA)
            ub_rhs.append(-blockb)
        elif cone == "L+":
            ub_rows.append(-blockA)
            ub_rhs.append(blockb)
        elif cone == "Q":
            soc.append(SocBlock(sp.csr_matrix(blockA[1:]), blockb[1:].copy(),
                                blockA[0].toarray().ravel(), float(blockb[0])))
        elif cone == "QR":
            rsoc.append(RsocBlock(blockA[0].toarray().ravel(), float(blockb[0]),
                                  blockA[1].toarray().ravel(), float(blockb[1]),
                                  sp.csr_matrix(blockA[2:]), blockb[2:].copy()))
        elif cone == "F":
            pass
        else:
            raise SolutionLoadError(f"unsupported cone {cone!r}")
        row += d
    col = 0
    for cone, d in var_cones:
        if cone in ("L+", "L-"):
            sign = -1.0 if cone == "L+" else 1.0
            idx = np.arange(col, col + d)
            ub_rows.append(sp.csr_matrix((np.full(d, sign), (np.arange(d), idx)), shape=(d, n)))
            ub_rhs.append(np.zeros(d))
        elif cone != "F":
            raise SolutionLoadError(f"unsupported variable domain {cone!r}")
        col += d

    def stack(rows, rhs):
        if not rows:
            return sp.csr_matrix((0, n)), np.zeros(0)
        M = sp.vstack(rows, format="csr")
        M.eliminate_zeros()
        return M, np.concatenate(rhs) + 0.0

    A_eq, b_eq = stack(eq_rows, eq_rhs)
    A_ub, b_ub = stack(ub_rows, ub_rhs)
    binary = np.zeros(n, dtype=bool)
    binary[ints] = True
    return ConicProgram(
        names=tuple(f"v{j}" for j in range(n)), binary=binary, c=cvec, c0=float(c0),
        A_eq=A_eq, b_eq=b_eq, A_ub=A_ub, b_ub=b_ub, soc=tuple(soc), rsoc=tuple(rsoc),
        eq_tags=("",) * len(b_eq), ub_tags=("",) * len(b_ub))


def read_cbf(path):
    try:
        with open(path) as fh:
            return parse_cbf(fh.read())
    except OSError as exc:
        raise SolutionLoadError(f"cannot read {path}: {exc}") from exc
