"""
Compile the symbolic planning model into a mixed-integer conic program.

* chance constraints become second-order cones scaled by a safety factor
  (moment-based worst case or Gaussian quantile),
* policy equalities are split into a nominal row and a response row,
* two-hour constraints use the joint covariance of consecutive hours,
* the expected quadratic grid cost becomes a rotated-cone epigraph,
* stack = n_cells * cell products are linearized with bits and big-M rows.
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.stats import norm

from .conic.program import ChanceRecord, ProgramBuilder
from .exceptions import ConfigurationError, ReformulationError
from .ies_model import (DETERMINISTIC, DRCC, STACK_PAIRS, STACK_PRODUCT, STOCHASTIC_EQ,
                        DecisionSchema, Lin, build_model)
from .scenarios import joint_covariance, psd_sqrt

logger = logging.getLogger(__name__)

MODES = ("DRCC", "GaussianCC")


@dataclass(frozen=True)
class ReformulationMode:
    mode: str = "DRCC"
    epsilon: float = 0.05

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigurationError(f"unknown mode {self.mode!r}, expected one of {MODES}", "mode")
        if not (isinstance(self.epsilon, (int, float)) and 0 < self.epsilon < 1):
            raise ConfigurationError(f"epsilon={self.epsilon} must lie in (0, 1)", "epsilon")


def safety_factor(mode):
    """Multiplier on the right-hand side of ``||S A|| <= factor * b``.

    Moment-based worst case: ``sqrt(eps / (1 - eps))``.  Gaussian:
    ``1 / Phi^-1(1 - eps)``, undefined for ``eps >= 0.5``.
    """
    eps = float(mode.epsilon)
    if mode.mode == "DRCC":
        return math.sqrt(eps / (1.0 - eps))
    if eps >= 0.5:
        raise ReformulationError(f"Gaussian factor undefined for epsilon={eps} >= 0.5")
    return 1.0 / float(norm.ppf(1.0 - eps))


@dataclass(frozen=True)
class LinearRow:
    coefs: dict  # name -> coefficient
    rhs: float
    sense: str  # "=" or "<="
    tag: str

    def residual(self, values):
        return sum(v * values[k] for k, v in self.coefs.items()) - self.rhs


def _row(expr, sense, tag):
    e = expr.clean()
    return LinearRow(dict(e.terms), -e.const, sense, tag)


@dataclass(frozen=True)
class ConeSpec:
    """``||rows(v)|| <= bound(v)`` coming from one chance constraint."""

    rows: tuple  # Lin per cone row
    bound: Lin
    tag: str
    covariance: np.ndarray
    loading: tuple  # Lin per w component
    rhs: Lin
    factor: float
    day: int = -1
    hour: int = -1
    repaired: bool = False


def _check_psd(cov, tag):
    vals = np.linalg.eigvalsh(0.5 * (cov + cov.T))
    scale = max(1.0, float(np.abs(vals).max(initial=0.0)))
    if vals.min(initial=0.0) < -1e-10 * scale:
        raise ReformulationError(f"{tag}: covariance is not positive semidefinite "
                                 f"(min eigenvalue {vals.min():.3g})")


def _cone(c, cov, blocks, factor, repaired=False):
    """``blocks``: list of (Lin, width); the loading is Lin repeated ``width`` times."""
    if all(L.is_constant() and L.const == 0 for L, _ in blocks):
        # zero loading: 0 <= factor * rhs
        return _row(-c.rhs, "<=", c.tag)
    root = psd_sqrt(cov)
    loading, col = [], 0
    mult = []
    for L, width in blocks:
        loading += [L] * width
        mult.append(root[:, col:col + width].sum(axis=1))
        col += width
    rows = []
    for i in range(root.shape[0]):
        e = Lin()
        for (L, _), m in zip(blocks, mult):
            if m[i] != 0:
                e = e + L * m[i]
        rows.append(e.clean())
    return ConeSpec(tuple(rows), (c.rhs * factor).clean(), c.tag, cov, tuple(loading), c.rhs,
                    factor, c.day, c.hour, repaired)


def reformulate_drcc(c, moments, mode):
    """Single-hour chance constraint to a second-order cone (or a linear row
    when the loading is identically zero)."""
    if c.kind != DRCC:
        raise ReformulationError(f"{c.tag}: expected a chance constraint, got {c.kind}")
    hours = {h for h, _ in c.loading}
    if len(hours) > 1:
        return reformulate_intertemporal(c, moments, mode)
    factor = safety_factor(mode)
    if not c.loading:
        return _row(-c.rhs, "<=", c.tag)
    (h, L), = c.loading
    cov = moments.cov[c.day, h]
    _check_psd(cov, c.tag)
    return _cone(c, cov, [(L, moments.n_plants)], factor)


def split_stochastic_equality(c):
    """Nominal row and response row of a policy equality."""
    if c.kind != STOCHASTIC_EQ:
        raise ReformulationError(f"{c.tag}: expected a policy equality, got {c.kind}")
    return (_row(c.expr, "=", c.tag + ".nominal"), _row(c.factor, "=", c.tag + ".response"))


def reformulate_intertemporal(c, moments, mode=None):
    """Two-hour constraints.

    Chance constraints over hours ``(t-1, t)`` use the joint covariance of the
    stacked errors.  Recursions flagged ``approximate`` (temperature, tank)
    are split like any policy equality; the response recursion assumes the
    aggregate error is the same in consecutive hours.
    """
    if c.kind == STOCHASTIC_EQ:
        return split_stochastic_equality(c)
    if c.kind != DRCC:
        raise ReformulationError(f"{c.tag}: cannot handle {c.kind}")
    hours = sorted({h for h, _ in c.loading})
    if len(hours) != 2 or hours[1] - hours[0] != 1:
        raise ReformulationError(f"{c.tag}: needs loadings on two consecutive hours")
    t = hours[1]
    if moments.cross is None or not 1 <= t < moments.n_hours:
        raise ReformulationError(f"{c.tag}: no joint covariance for hour {t}")
    cov, repaired = joint_covariance(moments, c.day, t, return_info=True)
    prev = Lin()
    cur = Lin()
    for h, L in c.loading:
        if h == t:
            cur = cur + L
        else:
            prev = prev + L
    Z = moments.n_plants
    return _cone(c, cov, [(prev, Z), (cur, Z)], safety_factor(mode or ReformulationMode()),
                 repaired)


def linearize_stack_coupling(schema, params, cell_power_bound, products=None):
    """Bit expansion of ``stack = n_cells * cell``.

    For every bit ``z_j`` and product ``e_j = z_j * cell``:
    ``|e_j| <= M z_j`` and ``|e_j - cell| <= M (1 - z_j)``, and
    ``stack = sum 2^j e_j``.  Nominal products use the power bound ``M``,
    response products use ``params.big_m_response``.
    """
    M = params.big_m if params.big_m is not None else float(cell_power_bound)
    if M < float(cell_power_bound) * (1 - 1e-12):
        raise ReformulationError(
            f"big-M {M} is below the largest single-cell power {cell_power_bound}")
    if products is None:
        products = [(DecisionSchema.name(stack + resp, r, t), DecisionSchema.name(cell + resp, r, t),
                     bool(resp), f"p2hh.stack_{cell}{resp}", r, t)
                    for r in range(schema.n_days) for t in range(schema.n_hours)
                    for stack, cell in STACK_PAIRS for resp in ("", "_resp")]
    rows = []
    N = schema.n_bits
    for stack, cell, response, template, r, t in products:
        m = params.big_m_response if response else M
        base = cell.split("[")[0]
        idx = f"[{r},{t}]"
        total = Lin.var(stack)
        for j in range(N):
            e = Lin.var(DecisionSchema.name(f"bit_x_{base}", r, t, j))
            z = Lin.var(DecisionSchema.name("cell_bit", k=j))
            x = Lin.var(cell)
            tag = f"{template}.bit{idx[:-1]},{j}]"
            rows.append(_row(e - m * z, "<=", tag))
            rows.append(_row(-e - m * z, "<=", tag))
            rows.append(_row(e - x + m * z - m, "<=", tag))
            rows.append(_row(x - e + m * z - m, "<=", tag))
            total = total - e * (2.0 ** j)
        rows.append(_row(total, "=", f"{template}{idx}"))
    return rows


def build_objective(instance, schema):
    """Linear objective terms and the grid-cost epigraph cones.

    Returns ``(coefs, const, cones)`` where every cone is
    ``(epi_name, nominal_name, response_name, sigma, tag)`` meaning
    ``epi >= nominal^2 + sigma^2 * response^2``.
    """
    p = instance.params
    coefs = Counter()
    coefs["n_cells"] += p.cell_cost
    coefs["converter_cap"] += p.converter_cost
    coefs["compressor_cap"] += p.compressor_cost
    coefs["tank_cap"] += p.tank_cost
    coefs["boiler_cap"] += p.boiler_cost
    cones = []
    w = instance.days.weights
    for r in range(instance.n_days):
        k = float(w[r])
        for t in range(instance.n_hours):
            n = DecisionSchema.name
            coefs[n("chp_start", r, t)] += k * p.startup_cost
            coefs[n("chp_stop", r, t)] += k * p.shutdown_cost
            for j in range(4):
                coefs[n("chp_weight", r, t, j)] += k * float(instance.chp.cost[j])
            coefs[n("grid_cost_epi", r, t)] += k * p.transmission_cost
            coefs[n("h2_mass", r, t)] -= k * p.hydrogen_price
            sigma = instance.moments.aggregate_std(r, t)
            cones.append((n("grid_cost_epi", r, t), n("grid_import", r, t),
                          n("grid_import_resp", r, t), sigma, f"objective.grid_cost[{r},{t}]"))
    return dict(coefs), 0.0, cones


@dataclass
class CompileAudit:
    """Counts per template and kind, plus covariance repairs."""

    counts: Counter = field(default_factory=Counter)  # (template, kind) -> n
    repairs: list = field(default_factory=list)  # (day, hour)
    approximated: int = 0
    factor: float = float("nan")
    mode: str = ""
    epsilon: float = float("nan")

    def add(self, tag, kind):
        self.counts[(tag.split("[")[0].replace(".nominal", "").replace(".response", ""), kind)] += 1

    def totals(self):
        out = Counter()
        for (_, kind), n in self.counts.items():
            out[kind] += n
        return dict(out)

    def rows(self):
        return sorted((t, k, n) for (t, k), n in self.counts.items())

    def to_csv(self, path, header_lines=()):
        with open(path, "w") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            fh.write("template,kind,count\n")
            for t, k, n in self.rows():
                fh.write(f"{t},{k},{n}\n")
            for r, t in self.repairs:
                fh.write(f"covariance_repair[{r},{t}],repair,1\n")
        return path


def _coefs(builder, lin_terms):
    return {builder.var(k): v for k, v in lin_terms.items() if v != 0}


def _loading_map(builder, loading):
    data, ind, ptr = [], [], [0]
    const = np.zeros(len(loading))
    for i, L in enumerate(loading):
        for k in sorted(L.terms, key=builder.var):
            if L.terms[k] != 0:
                ind.append(builder.var(k))
                data.append(L.terms[k])
        ptr.append(len(ind))
        const[i] = L.const
    M = sp.csr_matrix((data, ind, ptr), shape=(len(loading), builder.n))
    return M, (None if not const.any() else const)


def compile_program(instance, mode=None, enable_p2hh=True, enable_boiler=True):
    """End-to-end compilation.  The audit report is stored in
    ``program.meta['audit']``."""
    mode = mode or ReformulationMode("DRCC", instance.params.epsilon)
    factor = safety_factor(mode)
    schema, cons = build_model(instance, enable_p2hh, enable_boiler)
    audit = CompileAudit(mode=mode.mode, epsilon=float(mode.epsilon), factor=factor)
    b = ProgramBuilder()
    for name, is_bin in zip(schema.names, schema.binary):
        b.add_var(name, is_bin)

    def emit_row(row):
        coefs = _coefs(b, row.coefs)
        if row.sense == "=":
            b.add_eq(coefs, row.rhs, row.tag)
            audit.add(row.tag, "eq")
        else:
            b.add_ub(coefs, row.rhs, row.tag)
            audit.add(row.tag, "ub")

    def emit(item):
        if isinstance(item, LinearRow):
            emit_row(item)
            return
        F = [_coefs(b, e.terms) for e in item.rows]
        g = [e.const for e in item.rows]
        k = b.add_soc(F, g, _coefs(b, item.bound.terms), item.bound.const, item.tag)
        audit.add(item.tag, "soc")
        if item.repaired:
            audit.repairs.append((item.day, item.hour))
        lmap, lconst = _loading_map(b, item.loading)
        rhs_coef = np.zeros(b.n)
        for name, v in item.rhs.terms.items():
            rhs_coef[b.var(name)] += v
        b.add_chance_record(ChanceRecord(item.tag, k, item.covariance, lmap, rhs_coef,
                                         item.rhs.const, item.factor, item.day, item.hour,
                                         lconst))

    products = []
    for c in cons:
        try:
            if c.kind == DETERMINISTIC:
                emit_row(_row(c.expr, c.sense, c.tag))
            elif c.kind == STOCHASTIC_EQ:
                if c.approximate:
                    audit.approximated += 1
                    rows = reformulate_intertemporal(c, instance.moments, mode)
                else:
                    rows = split_stochastic_equality(c)
                for row in rows:
                    emit_row(row)
            elif c.kind == DRCC:
                emit(reformulate_drcc(c, instance.moments, mode))
            elif c.kind == STACK_PRODUCT:
                products.append((c.stack, c.cell, c.response, c.template, c.day, c.hour))
            else:
                raise ReformulationError(f"unknown constraint kind {c.kind}")
        except ReformulationError as exc:
            if c.tag in str(exc):
                raise
            raise ReformulationError(f"{c.tag}: {exc}") from exc
    for row in linearize_stack_coupling(schema, instance.params,
                                        float(instance.cell_region.power.max()), products):
        emit_row(row)

    coefs, const, cones = build_objective(instance, schema)
    b.add_objective(_coefs(b, coefs), const)
    for epi, nom, resp, sigma, tag in cones:
        F = [{b.var(nom): 1.0}, {b.var(resp): sigma} if sigma != 0 else {}]
        b.add_rsoc({b.var(epi): 1.0}, 0.0, {}, 0.5, F, [0.0, 0.0], tag)
        audit.add(tag, "rsoc")

    meta = {
        "audit": audit,
        "mode": mode.mode,
        "epsilon": float(mode.epsilon),
        "factor": factor,
        "dims": (instance.n_days, instance.n_hours, instance.n_plants, instance.params.n_bits),
        "enable_p2hh": bool(enable_p2hh),
        "enable_boiler": bool(enable_boiler),
    }
    prog = b.build(meta)
    logger.info("compiled %s: %s", mode.mode, prog.counts())
    if audit.repairs:
        logger.warning("%d joint covariances repaired to PSD", len(audit.repairs))
    return prog
