"""
Mixed-integer conic program representation.

A program minimises ``c @ v + c0`` subject to

* ``A_eq @ v == b_eq``
* ``A_ub @ v <= b_ub``
* second-order cones ``||F v + g|| <= a @ v + b``
* rotated cones ``2 (a1 @ v + b1)(a2 @ v + b2) >= ||F v + g||**2`` with both
  factors non-negative
* ``v[j]`` in {0, 1} for every binary ``j``.

All variables are free; bounds are ordinary rows.  Names and tags are kept
for reporting but do not take part in the canonical serialization, so two
programs that differ only in labels compare equal.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ..exceptions import DimensionError


@dataclass(frozen=True)
class SocBlock:
    F: sp.csr_matrix
    g: np.ndarray
    a: np.ndarray  # dense length-n
    b: float
    tag: str = ""

    @property
    def dim(self):
        return 1 + self.F.shape[0]


@dataclass(frozen=True)
class RsocBlock:
    a1: np.ndarray
    b1: float
    a2: np.ndarray
    b2: float
    F: sp.csr_matrix
    g: np.ndarray
    tag: str = ""

    @property
    def dim(self):
        return 2 + self.F.shape[0]


@dataclass(frozen=True)
class ChanceRecord:
    """Where a chance constraint ended up, for soundness checks.

    The uncertain inequality is ``loading(v) @ w <= rhs(v)`` with
    ``w ~ (0, covariance)``.  ``loading_map`` maps ``v`` to the loading in
    w-space (shape ``(dim_w, n)``), ``rhs_coef``/``rhs_const`` give the
    right-hand side.
    """

    tag: str
    block: int
    covariance: np.ndarray
    loading_map: sp.csr_matrix
    rhs_coef: np.ndarray
    rhs_const: float
    factor: float
    day: int = -1
    hour: int = -1
    loading_const: np.ndarray | None = None

    def loading(self, v):
        out = self.loading_map @ v
        return out if self.loading_const is None else out + self.loading_const

    def rhs(self, v):
        return float(self.rhs_coef @ v + self.rhs_const)


@dataclass(frozen=True)
class ConicProgram:
    names: tuple
    binary: np.ndarray  # bool mask
    c: np.ndarray
    c0: float
    A_eq: sp.csr_matrix
    b_eq: np.ndarray
    A_ub: sp.csr_matrix
    b_ub: np.ndarray
    soc: tuple = ()
    rsoc: tuple = ()
    eq_tags: tuple = ()
    ub_tags: tuple = ()
    chance: tuple = ()
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def n(self):
        return len(self.c)

    @property
    def binary_indices(self):
        return np.flatnonzero(self.binary)

    def index(self, name):
        lookup = self.meta.get("_index")
        if lookup is None:
            lookup = {nm: i for i, nm in enumerate(self.names)}
            self.meta["_index"] = lookup
        return lookup[name]

    def objective(self, v):
        return float(self.c @ v + self.c0)

    def counts(self):
        return {
            "variables": self.n,
            "binaries": int(self.binary.sum()),
            "equalities": self.A_eq.shape[0],
            "inequalities": self.A_ub.shape[0],
            "soc": len(self.soc),
            "rsoc": len(self.rsoc),
        }

    def with_rows(self, A_eq=None, b_eq=None, A_ub=None, b_ub=None, tag="added"):
        """Copy with extra rows appended (used for branching and fixing)."""
        kw = dict(self.__dict__)
        if A_eq is not None:
            kw["A_eq"] = sp.vstack([self.A_eq, A_eq], format="csr")
            kw["b_eq"] = np.concatenate([self.b_eq, b_eq])
            kw["eq_tags"] = self.eq_tags + (tag,) * A_eq.shape[0]
        if A_ub is not None:
            kw["A_ub"] = sp.vstack([self.A_ub, A_ub], format="csr")
            kw["b_ub"] = np.concatenate([self.b_ub, b_ub])
            kw["ub_tags"] = self.ub_tags + (tag,) * A_ub.shape[0]
        kw["meta"] = dict(self.meta)
        return ConicProgram(**kw)

    def canonical(self):
        return canonical_serialization(self)

    def digest(self):
        return hashlib.sha256(self.canonical().encode()).hexdigest()


def _num(x):
    # normalise -0.0 so serialization is sign-stable
    return repr(float(x) + 0.0)


def _sparse_lines(prefix, M):
    M = sp.csr_matrix(M)
    M.sum_duplicates()
    M.sort_indices()
    out = []
    for i in range(M.shape[0]):
        lo, hi = M.indptr[i], M.indptr[i + 1]
        for j, val in zip(M.indices[lo:hi], M.data[lo:hi]):
            if val != 0:
                out.append(f"{prefix} {i} {j} {_num(val)}")
    return out


def _dense_lines(prefix, vec):
    return [f"{prefix} {j} {_num(v)}" for j, v in enumerate(np.asarray(vec)) if v != 0]


def canonical_serialization(program):
    """Text form that ignores names and tags.

    Grammar (one item per line)::

        n <vars>
        binary <j> ...
        obj <j> <coef> | obj0 <c0>
        eq <m> / eqA <i> <j> <coef> / eqb <i> <rhs>
        ub <m> / ubA <i> <j> <coef> / ubb <i> <rhs>
        soc <k> <dim> then socF, socg, soca, socb lines
        rsoc <k> <dim> then rsoca1, rsocb1, rsoca2, rsocb2, rsocF, rsocg lines
    """
    p = program
    lines = [f"n {p.n}", "binary " + " ".join(str(j) for j in p.binary_indices)]
    lines += _dense_lines("obj", p.c)
    lines.append(f"obj0 {_num(p.c0)}")
    lines.append(f"eq {p.A_eq.shape[0]}")
    lines += _sparse_lines("eqA", p.A_eq)
    lines += _dense_lines("eqb", p.b_eq)
    lines.append(f"ub {p.A_ub.shape[0]}")
    lines += _sparse_lines("ubA", p.A_ub)
    lines += _dense_lines("ubb", p.b_ub)
    for k, blk in enumerate(p.soc):
        lines.append(f"soc {k} {blk.dim}")
        lines += _sparse_lines("socF", blk.F)
        lines += _dense_lines("socg", blk.g)
        lines += _dense_lines("soca", blk.a)
        lines.append(f"socb {_num(blk.b)}")
    for k, blk in enumerate(p.rsoc):
        lines.append(f"rsoc {k} {blk.dim}")
        lines += _dense_lines("rsoca1", blk.a1)
        lines.append(f"rsocb1 {_num(blk.b1)}")
        lines += _dense_lines("rsoca2", blk.a2)
        lines.append(f"rsocb2 {_num(blk.b2)}")
        lines += _sparse_lines("rsocF", blk.F)
        lines += _dense_lines("rsocg", blk.g)
    return "\n".join(lines) + "\n"


class ProgramBuilder:
    """Incremental assembly of a :class:`ConicProgram`.

    Linear expressions are ``dict[int, float]`` plus a separate constant.
    """

    def __init__(self):
        self.names = []
        self.binary = []
        self._index = {}
        self.c = {}
        self.c0 = 0.0
        self._eq = ([], [], [])  # rows (dict), rhs, tags
        self._ub = ([], [], [])
        self.soc = []  # (F rows: list of dict, g list, a dict, b, tag)
        self.rsoc = []
        self.chance = []

    def add_var(self, name, binary=False):
        if name in self._index:
            raise DimensionError(f"duplicate variable {name}")
        self._index[name] = len(self.names)
        self.names.append(name)
        self.binary.append(bool(binary))
        return self._index[name]

    def var(self, name):
        return self._index[name]

    def has(self, name):
        return name in self._index

    @property
    def n(self):
        return len(self.names)

    def add_objective(self, coefs, const=0.0):
        for j, v in coefs.items():
            self.c[j] = self.c.get(j, 0.0) + v
        self.c0 += const

    def add_eq(self, coefs, rhs, tag):
        """``sum coefs[j] v[j] == rhs``"""
        self._eq[0].append(dict(coefs))
        self._eq[1].append(float(rhs))
        self._eq[2].append(tag)

    def add_ub(self, coefs, rhs, tag):
        """``sum coefs[j] v[j] <= rhs``"""
        self._ub[0].append(dict(coefs))
        self._ub[1].append(float(rhs))
        self._ub[2].append(tag)

    def add_soc(self, F_rows, g, a, b, tag):
        self.soc.append((list(F_rows), list(g), dict(a), float(b), tag))
        return len(self.soc) - 1

    def add_rsoc(self, a1, b1, a2, b2, F_rows, g, tag):
        self.rsoc.append((dict(a1), float(b1), dict(a2), float(b2), list(F_rows), list(g), tag))
        return len(self.rsoc) - 1

    def add_chance_record(self, record):
        self.chance.append(record)

    @staticmethod
    def _rows_to_csr(rows, n):
        data, ind, ptr = [], [], [0]
        for row in rows:
            for j in sorted(row):
                if row[j] != 0:
                    ind.append(j)
                    data.append(float(row[j]))
            ptr.append(len(ind))
        return sp.csr_matrix((data, ind, ptr), shape=(len(rows), n))

    def _dense(self, coefs):
        out = np.zeros(self.n)
        for j, v in coefs.items():
            out[j] += v
        return out

    def build(self, meta=None):
        n = self.n
        soc = tuple(
            SocBlock(self._rows_to_csr(F, n), np.asarray(g, float), self._dense(a), b, tag)
            for F, g, a, b, tag in self.soc)
        rsoc = tuple(
            RsocBlock(self._dense(a1), b1, self._dense(a2), b2,
                      self._rows_to_csr(F, n), np.asarray(g, float), tag)
            for a1, b1, a2, b2, F, g, tag in self.rsoc)
        return ConicProgram(
            names=tuple(self.names),
            binary=np.array(self.binary, dtype=bool),
            c=self._dense(self.c),
            c0=float(self.c0),
            A_eq=self._rows_to_csr(self._eq[0], n),
            b_eq=np.array(self._eq[1], dtype=float),
            A_ub=self._rows_to_csr(self._ub[0], n),
            b_ub=np.array(self._ub[1], dtype=float),
            soc=soc,
            rsoc=rsoc,
            eq_tags=tuple(self._eq[2]),
            ub_tags=tuple(self._ub[2]),
            chance=tuple(self.chance),
            meta=dict(meta or {}),
        )


def program_from_arrays(c, A_eq=None, b_eq=None, A_ub=None, b_ub=None, soc=(), rsoc=(),
                        binary=None, c0=0.0, names=None):
    """Convenience constructor for small hand-written programs."""
    c = np.asarray(c, dtype=float)
    n = c.size
    empty = sp.csr_matrix((0, n))
    A_eq = empty if A_eq is None else sp.csr_matrix(np.atleast_2d(A_eq), shape=(len(b_eq), n))
    A_ub = empty if A_ub is None else sp.csr_matrix(np.atleast_2d(A_ub), shape=(len(b_ub), n))
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, float)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, float)
    socs = []
    for blk in soc:
        F, g, a, b = blk[:4]
        socs.append(SocBlock(sp.csr_matrix(np.atleast_2d(F)), np.asarray(g, float),
                             np.asarray(a, float), float(b)))
    rsocs = []
    for blk in rsoc:
        a1, b1, a2, b2, F, g = blk[:6]
        rsocs.append(RsocBlock(np.asarray(a1, float), float(b1), np.asarray(a2, float), float(b2),
                               sp.csr_matrix(np.atleast_2d(F)), np.asarray(g, float)))
    binary = np.zeros(n, bool) if binary is None else np.asarray(binary, bool)
    names = tuple(names) if names is not None else tuple(f"v{j}" for j in range(n))
    return ConicProgram(names, binary, c, float(c0), A_eq, b_eq, A_ub, b_ub, tuple(socs),
                        tuple(rsocs), ("",) * len(b_eq), ("",) * len(b_ub))
