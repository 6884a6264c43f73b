"""
Continuous conic solves, feasibility checks and branch-and-bound.

The continuous subproblem is handed to Clarabel, a homogeneous-embedding
interior-point solver for linear, second-order and other convex cones.
Rotated cones are mapped to standard second-order cones through
``2uw >= ||z||^2  <=>  ||(u - w, sqrt(2) z)|| <= u + w``.

Branch-and-bound is implemented here: most-fractional branching with ties
broken by lowest index, best-bound node selection after an initial
depth-first dive, and a cold-started continuous solve at every node.
"""

from __future__ import annotations

import heapq
import logging
import math
import time
from dataclasses import dataclass, field

import clarabel
import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from ..exceptions import DimensionError
from .program import ConicProgram, RsocBlock, SocBlock

logger = logging.getLogger(__name__)

OPTIMAL = "Optimal"
INFEASIBLE = "Infeasible"
UNBOUNDED = "Unbounded"
ITER_LIMIT = "IterLimit"

_SQRT2 = math.sqrt(2.0)


@dataclass
class ConicSolution:
    x: np.ndarray | None
    status: str
    objective: float = float("nan")
    bound: float = float("nan")
    y_eq: np.ndarray | None = None
    y_ub: np.ndarray | None = None
    z_soc: list = field(default_factory=list)
    z_rsoc: list = field(default_factory=list)
    primal_residual: float = float("nan")
    dual_residual: float = float("nan")
    gap: float = float("nan")
    dual_objective: float = float("nan")
    iterations: int = 0
    nodes: int = 0
    certificate: np.ndarray | None = None
    message: str = ""
    history: list = field(default_factory=list)

    @property
    def optimal(self):
        return self.status == OPTIMAL

    @property
    def mip_gap(self):
        if not (np.isfinite(self.objective) and np.isfinite(self.bound)):
            return float("inf")
        return (self.objective - self.bound) / max(1.0, abs(self.objective))


@dataclass(frozen=True)
class BranchBoundParams:
    rel_gap: float = 1e-6
    abs_gap: float = 1e-9
    node_limit: int = 20000
    time_limit: float = 900.0
    branching: str = "most_fractional"
    node_selection: str = "best_bound"
    seed: int = 0
    int_tol: float = 1e-6
    tol: float = 1e-8
    dive: bool = True

    def __post_init__(self):
        if self.rel_gap < 0 or self.abs_gap < 0:
            raise ValueError("gaps must be >= 0")
        if self.node_limit <= 0 or self.time_limit <= 0:
            raise ValueError("limits must be > 0")
        if self.branching != "most_fractional":
            raise ValueError(f"unknown branching rule {self.branching!r}")
        if self.node_selection != "best_bound":
            raise ValueError(f"unknown node selection {self.node_selection!r}")


def _assemble(program, extra_eq=None):
    """Stack every constraint into Clarabel's ``A v + s = b, s in K`` form."""
    n = program.n
    blocks_A, blocks_b, cones = [], [], []
    A_eq, b_eq = program.A_eq, program.b_eq
    if extra_eq is not None:
        A_eq = sp.vstack([A_eq, extra_eq[0]], format="csr")
        b_eq = np.concatenate([b_eq, extra_eq[1]])
    if A_eq.shape[0]:
        blocks_A.append(A_eq)
        blocks_b.append(b_eq)
        cones.append(clarabel.ZeroConeT(A_eq.shape[0]))
    if program.A_ub.shape[0]:
        blocks_A.append(program.A_ub)
        blocks_b.append(program.b_ub)
        cones.append(clarabel.NonnegativeConeT(program.A_ub.shape[0]))
    for blk in program.soc:
        blocks_A.append(sp.vstack([sp.csr_matrix(-blk.a.reshape(1, -1)), -blk.F], format="csr"))
        blocks_b.append(np.concatenate([[blk.b], blk.g]))
        cones.append(clarabel.SecondOrderConeT(blk.dim))
    for blk in program.rsoc:
        top = sp.csr_matrix(np.vstack([-(blk.a1 + blk.a2), -(blk.a1 - blk.a2)]))
        blocks_A.append(sp.vstack([top, -_SQRT2 * blk.F], format="csr"))
        blocks_b.append(np.concatenate([[blk.b1 + blk.b2, blk.b1 - blk.b2], _SQRT2 * blk.g]))
        cones.append(clarabel.SecondOrderConeT(blk.dim))
    A = sp.vstack(blocks_A, format="csc") if blocks_A else sp.csc_matrix((0, n))
    b = np.concatenate(blocks_b) if blocks_b else np.zeros(0)
    return A, b, cones, A_eq.shape[0]


def _settings(tol, max_iter, time_limit):
    s = clarabel.DefaultSettings()
    s.verbose = False
    s.tol_feas = tol
    s.tol_gap_abs = tol
    s.tol_gap_rel = tol
    s.max_iter = max_iter
    s.presolve_enable = False
    s.max_threads = 1
    if time_limit is not None:
        s.time_limit = float(time_limit)
    return s


def _split_duals(program, z, n_eq):
    m_ub = program.A_ub.shape[0]
    y_eq = z[:n_eq]
    y_ub = z[n_eq:n_eq + m_ub]
    pos = n_eq + m_ub
    z_soc, z_rsoc = [], []
    for blk in program.soc:
        z_soc.append(z[pos:pos + blk.dim])
        pos += blk.dim
    for blk in program.rsoc:
        z_rsoc.append(z[pos:pos + blk.dim])
        pos += blk.dim
    return y_eq, y_ub, z_soc, z_rsoc


# objective rescaling attempts: largest |c| mapped to these values, then as given
_OBJECTIVE_TARGETS = (1e3, 1e4, 1e2, None)


def solve_continuous(program, tol=1e-8, max_iter=200, time_limit=None, extra_eq=None):
    """Solve the program with integrality relaxed.

    ``extra_eq`` is an optional ``(A, b)`` pair of additional equality rows
    (used to fix binaries without copying the program).

    The objective is rescaled before it is handed to Clarabel, whose
    stopping rule is relative to the problem data.  A point is accepted once
    :func:`verify_point` finds no row or cone violated by more than
    ``10 * tol`` (relative); otherwise the next scale in a fixed ladder is
    tried and the least-violating point is kept.
    """
    A, b, cones, n_eq = _assemble(program, extra_eq)
    n = program.n
    P = sp.csc_matrix((n, n))
    cmax = float(np.abs(program.c).max(initial=0.0))
    best = None
    last = None
    for target in _OBJECTIVE_TARGETS:
        scale = 1.0 if target is None or cmax == 0.0 else target / cmax
        solver = clarabel.DefaultSolver(P, program.c * scale, A, b, cones,
                                        _settings(tol, max_iter, time_limit))
        raw = solver.solve()
        status_name = str(raw.status)
        x = np.array(raw.x)
        z = np.array(raw.z) / scale
        if status_name in ("PrimalInfeasible", "AlmostPrimalInfeasible"):
            return ConicSolution(None, INFEASIBLE, objective=float("inf"), bound=float("inf"),
                                 certificate=np.array(raw.z), iterations=int(raw.iterations),
                                 message="dual ray certifies infeasibility")
        if status_name in ("DualInfeasible", "AlmostDualInfeasible"):
            return ConicSolution(None, UNBOUNDED, objective=-float("inf"), bound=-float("inf"),
                                 certificate=x, iterations=int(raw.iterations),
                                 message="primal ray certifies unboundedness")
        last = (status_name, raw, x)
        if status_name not in ("Solved", "AlmostSolved"):
            continue
        report = verify_point(program, x, tol=10 * tol, extra_eq=extra_eq)
        y_eq, y_ub, z_soc, z_rsoc = _split_duals(program, z, n_eq)
        sol = ConicSolution(x, OPTIMAL, objective=float(program.c @ x + program.c0),
                            y_eq=y_eq, y_ub=y_ub, z_soc=z_soc, z_rsoc=z_rsoc,
                            primal_residual=report.max_violation,
                            dual_residual=float(raw.r_dual),
                            dual_objective=float(raw.obj_val_dual / scale + program.c0),
                            iterations=int(raw.iterations))
        sol.gap = abs(sol.objective - sol.dual_objective) / max(1.0, abs(sol.objective))
        sol.bound = sol.objective
        if report.feasible and status_name == "Solved":
            return sol
        if best is None or report.max_violation < best[0]:
            best = (report.max_violation, sol)
    if best is not None:
        sol = best[1]
        if not verify_point(program, sol.x, tol=1e3 * tol, extra_eq=extra_eq).feasible:
            sol.status = ITER_LIMIT
            sol.message = f"reduced accuracy, max violation {sol.primal_residual:.3g}"
        return sol
    status_name, raw, x = last
    return ConicSolution(x if x.size else None, ITER_LIMIT, iterations=int(raw.iterations),
                         primal_residual=float(raw.r_prim), dual_residual=float(raw.r_dual),
                         message=f"solver stopped with status {status_name}")


def infeasibility_certificate_error(program, y):
    """How far ``y`` is from certifying primal infeasibility.

    A valid certificate has ``A^T y = 0``, ``b^T y < 0`` and ``y`` in the dual
    cone.  Returns ``(|A^T y|_inf, b^T y)`` after normalising ``|y|_inf = 1``.
    """
    A, b, _, _ = _assemble(program)
    y = np.asarray(y, float)
    y = y / max(np.abs(y).max(), 1e-300)
    return float(np.abs(A.T @ y).max()), float(b @ y)


@dataclass
class FeasibilityReport:
    violations: list  # (kind, index, tag, magnitude)
    max_violation: float
    feasible: bool

    def flagged(self, kind):
        return [v for v in self.violations if v[0] == kind]


def verify_point(program, point, tol=1e-8, integrality=False, extra_eq=None):
    """Per-row and per-cone violation magnitudes at ``point``.

    Each violation is the absolute amount by which the constraint fails:
    ``|A v - b|`` for equalities, ``max(A v - b, 0)`` for inequalities and
    ``max(||F v + g|| - (a v + b), 0)`` for cones.  Rows whose violation
    exceeds ``tol * (1 + |rhs|)`` are listed.
    """
    v = np.asarray(point, dtype=float)
    if v.shape != (program.n,):
        raise DimensionError(f"point has shape {v.shape}, program has {program.n} variables")
    out = []
    worst = 0.0
    A_eq, b_eq, tags_eq = program.A_eq, program.b_eq, program.eq_tags
    if extra_eq is not None:
        A_eq = sp.vstack([A_eq, extra_eq[0]], format="csr")
        b_eq = np.concatenate([b_eq, extra_eq[1]])
        tags_eq = tuple(tags_eq) + ("fixed",) * extra_eq[0].shape[0]
    r = np.abs(A_eq @ v - b_eq)
    for i in np.flatnonzero(r > tol * (1 + np.abs(b_eq))):
        out.append(("eq", int(i), tags_eq[i] if i < len(tags_eq) else "", float(r[i])))
    worst = max(worst, float(r.max(initial=0.0)))
    r = np.maximum(program.A_ub @ v - program.b_ub, 0.0)
    for i in np.flatnonzero(r > tol * (1 + np.abs(program.b_ub))):
        out.append(("ub", int(i), program.ub_tags[i] if program.ub_tags else "", float(r[i])))
    worst = max(worst, float(r.max(initial=0.0)))
    for k, blk in enumerate(program.soc):
        rhs = float(blk.a @ v + blk.b)
        lhs = float(np.linalg.norm(blk.F @ v + blk.g))
        viol = max(lhs - rhs, 0.0)
        if viol > tol * (1 + abs(rhs)):
            out.append(("soc", k, blk.tag, viol))
        worst = max(worst, viol)
    for k, blk in enumerate(program.rsoc):
        u = float(blk.a1 @ v + blk.b1)
        w = float(blk.a2 @ v + blk.b2)
        z = blk.F @ v + blk.g
        lhs = float(np.linalg.norm(np.concatenate([[u - w], _SQRT2 * z])))
        viol = max(lhs - (u + w), 0.0)
        if viol > tol * (1 + abs(u + w)):
            out.append(("rsoc", k, blk.tag, viol))
        worst = max(worst, viol)
    if integrality:
        for j in program.binary_indices:
            d = abs(v[j] - round(v[j]))
            if d > tol or round(v[j]) not in (0, 1):
                out.append(("int", int(j), program.names[j], float(d)))
            worst = max(worst, d)
    return FeasibilityReport(out, worst, not out)


def _fix_rows(n, indices, values):
    indices = np.asarray(indices, dtype=int)
    A = sp.csr_matrix((np.ones(indices.size), (np.arange(indices.size), indices)),
                      shape=(indices.size, n))
    return A, np.asarray(values, dtype=float)


def polish(program, x, active_tol=1e-7):
    """Project ``x`` onto its active constraint set with binaries rounded.

    Equalities, inequalities within ``active_tol`` of their bound and the
    rounded binaries are solved as one minimum-norm linear correction.  The
    polished point is kept only if it is not less feasible than the input.
    """
    x = np.asarray(x, dtype=float).copy()
    bins = program.binary_indices
    x[bins] = np.round(x[bins])
    slack = program.b_ub - program.A_ub @ x
    active = np.flatnonzero(np.abs(slack) <= active_tol * (1 + np.abs(program.b_ub)))
    Afix, bfix = _fix_rows(program.n, bins, x[bins])
    M = sp.vstack([program.A_eq, program.A_ub[active], Afix], format="csr")
    rhs = np.concatenate([program.b_eq, program.b_ub[active], bfix])
    resid = rhs - M @ x
    if not resid.size or np.abs(resid).max() == 0.0:
        return x
    free = np.setdiff1d(np.arange(program.n), bins)
    Mf = M[:, free].toarray()
    d, *_ = sla.lstsq(Mf, resid, lapack_driver="gelsy", cond=1e-13)
    y = x.copy()
    y[free] += d
    before = verify_point(program, x, tol=0.0).max_violation
    after = verify_point(program, y, tol=0.0).max_violation
    eq_before = np.abs(M @ x - rhs).max()
    eq_after = np.abs(M @ y - rhs).max()
    if eq_after <= eq_before and after <= max(before, 1e-9):
        return y
    return x


def fix_and_reduce(program, indices, values, tol=1e-12):
    """Substitute fixed variables and tidy the rows they leave behind.

    Inequalities left with no free variable are dropped (or prove the
    fixing infeasible), and pairs ``r v <= b1``, ``-r v <= b2`` with
    ``b1 + b2 = 0`` become the equality ``r v = b1``.  Big-M rows with a
    fixed binary produce exactly such pairs; keeping them as inequalities
    leaves the feasible set without an interior and costs the
    interior-point method most of its accuracy.

    Returns ``(reduced, free)`` or ``(None, message)`` when the fixing is
    infeasible.
    """
    n = program.n
    indices = np.asarray(indices, dtype=int)
    values = np.asarray(values, dtype=float)
    free = np.setdiff1d(np.arange(n), indices)

    def split(M, rhs):
        M = sp.csr_matrix(M)
        return M[:, free].tocsr(), rhs - M[:, indices] @ values

    A_eq, b_eq = split(program.A_eq, program.b_eq)
    A_ub, b_ub = split(program.A_ub, program.b_ub)
    eq_rows, eq_rhs, eq_tags = [], [], []
    for i in range(A_eq.shape[0]):
        lo, hi = A_eq.indptr[i], A_eq.indptr[i + 1]
        if not np.any(A_eq.data[lo:hi]):
            if abs(b_eq[i]) > 1e-9 * (1 + abs(program.b_eq[i])):
                return None, f"fixing violates equality {program.eq_tags[i] if program.eq_tags else i}"
            continue
        eq_rows.append(i)
    keyed = {}
    ub_keep = []
    for i in range(A_ub.shape[0]):
        lo, hi = A_ub.indptr[i], A_ub.indptr[i + 1]
        cols, data = A_ub.indices[lo:hi], A_ub.data[lo:hi]
        nz = data != 0
        cols, data = cols[nz], data[nz]
        if not cols.size:
            if b_ub[i] < -1e-9 * (1 + abs(program.b_ub[i])):
                return None, f"fixing violates {program.ub_tags[i] if program.ub_tags else i}"
            continue
        order = np.argsort(cols)
        key = (tuple(cols[order]), tuple(data[order]))
        neg = (key[0], tuple(-d for d in key[1]))
        j = keyed.get(neg)
        if j is not None and j in ub_keep:
            total = b_ub[i] + b_ub[j]
            scale = max(abs(b_ub[i]), abs(b_ub[j]), 1.0)
            if total < -1e-9 * scale:
                return None, "fixing leaves an empty interval"
            if abs(total) <= tol * scale:
                ub_keep.remove(j)
                eq_rows.append(("ub", j))
                keyed.pop(neg)
                continue
        keyed.setdefault(key, i)
        ub_keep.append(i)

    rows, rhs = [], []
    for item in eq_rows:
        if isinstance(item, tuple):
            rows.append(A_ub[item[1]])
            rhs.append(b_ub[item[1]])
            eq_tags.append(program.ub_tags[item[1]] if program.ub_tags else "")
        else:
            rows.append(A_eq[item])
            rhs.append(b_eq[item])
            eq_tags.append(program.eq_tags[item] if program.eq_tags else "")
    nf = free.size
    new_eq = sp.vstack(rows, format="csr") if rows else sp.csr_matrix((0, nf))
    new_ub = A_ub[ub_keep] if ub_keep else sp.csr_matrix((0, nf))
    soc = tuple(SocBlock(blk.F[:, free].tocsr(), blk.g + blk.F[:, indices] @ values, blk.a[free],
                         float(blk.b + blk.a[indices] @ values), blk.tag) for blk in program.soc)
    rsoc = tuple(RsocBlock(blk.a1[free], float(blk.b1 + blk.a1[indices] @ values), blk.a2[free],
                           float(blk.b2 + blk.a2[indices] @ values), blk.F[:, free].tocsr(),
                           blk.g + blk.F[:, indices] @ values, blk.tag) for blk in program.rsoc)
    reduced = ConicProgram(
        names=tuple(program.names[j] for j in free), binary=program.binary[free],
        c=program.c[free], c0=float(program.c0 + program.c[indices] @ values),
        A_eq=new_eq, b_eq=np.asarray(rhs, dtype=float), A_ub=new_ub,
        b_ub=np.asarray(b_ub[ub_keep], dtype=float), soc=soc, rsoc=rsoc,
        eq_tags=tuple(eq_tags),
        ub_tags=tuple(program.ub_tags[i] for i in ub_keep) if program.ub_tags else ())
    return reduced, free


def solve_fixed(program, indices, values, tol=1e-8):
    """Continuous solve with the variables ``indices`` fixed to ``values``."""
    reduced, free = fix_and_reduce(program, indices, values)
    if reduced is None:
        return ConicSolution(None, INFEASIBLE, objective=float("inf"), bound=float("inf"),
                             message=free)
    sol = solve_continuous(reduced, tol=tol)
    if sol.x is None:
        return sol
    x = np.empty(program.n)
    x[free] = sol.x
    x[np.asarray(indices, dtype=int)] = values
    sol.x = x
    sol.objective = program.objective(x)
    sol.bound = sol.objective
    sol.y_eq = sol.y_ub = None
    sol.z_soc, sol.z_rsoc = [], []
    return sol


@dataclass(order=True)
class _Node:
    key: tuple
    fixings: tuple = field(compare=False)
    depth: int = field(compare=False, default=0)


def _most_fractional(x, bins, int_tol):
    frac = np.abs(x[bins] - np.round(x[bins]))
    if frac.size == 0 or frac.max() <= int_tol:
        return None
    score = np.minimum(x[bins] - np.floor(x[bins]), np.ceil(x[bins]) - x[bins])
    best = score.max()
    # ties to the lowest index: argmax returns the first maximiser
    k = int(np.flatnonzero(np.isclose(score, best, rtol=0, atol=1e-12))[0])
    return int(bins[k])


def solve_misocp(program, params=None, callback=None):
    """Branch-and-bound over binary variables.

    Returns the best integer-feasible point found together with the global
    lower bound.  Status is ``Optimal`` when the gap closes, ``IterLimit``
    when the node or time limit stops the search (the incumbent, if any, is
    still returned), and ``Infeasible`` when no integer point exists.
    """
    params = params or BranchBoundParams()
    bins = program.binary_indices
    n = program.n
    t0 = time.monotonic()
    history = []

    def node_solve(fixings):
        if fixings:
            idx, val = zip(*fixings)
            return solve_fixed(program, idx, val, tol=params.tol)
        return solve_continuous(program, tol=params.tol)

    root = node_solve(())
    if root.status == INFEASIBLE or root.status == UNBOUNDED:
        root.nodes = 1
        return root
    if root.status != OPTIMAL:
        root.nodes = 1
        return root

    incumbent = None
    inc_obj = float("inf")
    counter = 0
    stack = [_Node((root.objective, 0), (), 0)]
    cache = {(): root}
    heap = []
    nodes = 0
    limit_hit = ""
    pruned_min = float("inf")
    unresolved = 0

    def prune_level():
        if incumbent is None:
            return float("inf")
        return inc_obj - max(params.abs_gap, params.rel_gap * max(1.0, abs(inc_obj)))

    while stack or heap:
        if nodes >= params.node_limit:
            limit_hit = "node limit"
            break
        if time.monotonic() - t0 > params.time_limit:
            limit_hit = "time limit"
            break
        use_stack = params.dive and incumbent is None and stack
        if use_stack:
            node = stack.pop()
        else:
            if stack:
                for nd in stack:
                    heapq.heappush(heap, nd)
                stack = []
            node = heapq.heappop(heap)
        if node.key[0] >= prune_level():
            pruned_min = min(pruned_min, node.key[0])
            continue
        sol = cache.pop(node.fixings, None) or node_solve(node.fixings)
        nodes += 1
        if sol.status in (INFEASIBLE, UNBOUNDED):
            continue
        if sol.status == OPTIMAL:
            node_bound = sol.objective
        else:
            # inaccurate relaxation: never prune on it, keep the parent bound
            unresolved += 1
            node_bound = node.key[0]
        if node_bound >= prune_level():
            pruned_min = min(pruned_min, node_bound)
            continue
        fixed = dict(node.fixings)
        if sol.x is not None:
            j = _most_fractional(sol.x, bins, params.int_tol)
        else:
            j = next((b for b in bins if b not in fixed), None)
        if j is None and len(fixed) < len(bins) and sol.status != OPTIMAL:
            # a rounded but inaccurate point says nothing about the subtree
            j = next(b for b in bins if b not in fixed)
        if j is None:
            cand = _finalize(program, sol.x, params)
            if cand is not None and cand.objective < inc_obj:
                incumbent, inc_obj = cand, cand.objective
                history.append((nodes, inc_obj))
                if callback:
                    callback(nodes, inc_obj)
            elif cand is None and sol.status != OPTIMAL:
                pruned_min = min(pruned_min, node_bound)  # leaf left unresolved
            continue
        down = tuple(sorted({**fixed, j: 0}.items()))
        up = tuple(sorted({**fixed, j: 1}.items()))
        near = 1 if sol.x is not None and sol.x[j] >= 0.5 else 0
        order = (up, down) if near == 0 else (down, up)  # preferred child last
        for child in order:
            counter += 1
            nd = _Node((node_bound, counter), child, node.depth + 1)
            if params.dive and incumbent is None:
                stack.append(nd)
            else:
                heapq.heappush(heap, nd)

    open_bounds = [nd.key[0] for nd in heap] + [nd.key[0] for nd in stack]
    if incumbent is None:
        status = ITER_LIMIT if limit_hit else INFEASIBLE
        return ConicSolution(None, status, nodes=nodes, message=limit_hit or "no integer point",
                             history=history)
    # every closed subtree was either explored or pruned at its own bound
    bound = min(open_bounds + [pruned_min, inc_obj])
    incumbent.bound = bound
    incumbent.nodes = nodes
    incumbent.history = history
    closed = inc_obj - bound <= max(params.abs_gap, params.rel_gap * max(1.0, abs(inc_obj))) * (1 + 1e-9)
    if not limit_hit and not closed:
        limit_hit = "inaccurate node relaxations left the gap open"
    incumbent.status = ITER_LIMIT if limit_hit else OPTIMAL
    incumbent.message = limit_hit or "gap closed"
    logger.info("branch-and-bound: %d nodes (%d inaccurate), objective %.10g, bound %.10g",
                nodes, unresolved, inc_obj, bound)
    return incumbent


def _finalize(program, x, params):
    """Round binaries, re-solve the continuous part and polish."""
    bins = program.binary_indices
    vals = np.round(x[bins])
    sol = solve_fixed(program, bins, vals, tol=params.tol)
    if sol.status != OPTIMAL:
        return None
    sol.x = polish(program, sol.x)
    sol.x[bins] = vals
    sol.objective = program.objective(sol.x)
    rep = verify_point(program, sol.x, tol=1e-6, integrality=True)
    sol.primal_residual = rep.max_violation
    return sol
