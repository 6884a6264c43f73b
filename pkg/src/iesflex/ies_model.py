"""
Integrated electricity/heat system planning model in symbolic form.

Every recourse quantity ``q`` follows an affine policy
``q(w) = q + q_resp * (1^T w)`` where ``w`` is the wind forecast error of the
hour.  The model is emitted as a flat list of :class:`SymbolicConstraint`
objects that :mod:`iesflex.reformulate` compiles into a conic program.

Hours are 0-based.  Sign convention: ``grid_import > 0`` is power drawn from
the transmission grid, negative values are inverse flow.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .electrolyser import CellParameters, _thermal_neutral_voltage, default_big_m
from .exceptions import ConfigurationError, DimensionError

logger = logging.getLogger(__name__)

DETERMINISTIC = "DeterministicLinear"
STOCHASTIC_EQ = "StochasticEquality"
DRCC = "DrccInequality"
STACK_PRODUCT = "StackProduct"

# (nominal, response) pairs carried by every (day, hour)
SCALAR_POLICIES = (
    "grid_import", "boiler_power", "boiler_heat", "h2_mass", "stack_power", "cell_power",
    "stack_heat_out", "cell_heat_out", "stack_h2_power", "cell_h2_power", "cell_heat",
    "tank_level",
)
VECTOR_POLICIES = ("chp_weight", "cell_weight")
# stack quantity = n_cells * cell quantity
STACK_PAIRS = (
    ("stack_power", "cell_power"),
    ("stack_h2_power", "cell_h2_power"),
    ("stack_heat_out", "cell_heat_out"),
)
PLANNING = ("n_cells", "converter_cap", "compressor_cap", "tank_cap", "boiler_cap")
COMMITMENT = ("chp_on", "chp_start", "chp_stop")


@dataclass(frozen=True)
class IesParameters:
    """Costs, efficiencies and limits.  Units: MW, MWh, kg, degC, $."""

    cell_cost: float = 150.0  # $/cell/yr
    converter_cost: float = 1.0e4  # $/MW/yr
    compressor_cost: float = 200.0  # $/(kg/h)/yr
    tank_cost: float = 5.0  # $/kg/yr
    boiler_cost: float = 5.0e3  # $/MW/yr
    startup_cost: float = 2.0  # $/event
    shutdown_cost: float = 1.0  # $/event
    transmission_cost: float = 2.0e3  # $/MW^2/h
    hydrogen_price: float = 3.0  # $/kg
    converter_efficiency: float = 0.95
    boiler_efficiency: float = 0.99
    compressor_energy: float = 1.0e-3  # MWh/kg
    ramp_up: float = 0.03  # MW/h
    ramp_down: float = 0.03
    startup_ramp: float = 0.04
    shutdown_ramp: float = 0.04
    min_up: int = 2  # h
    min_down: int = 2
    heat_capacity: float = 3.0e-5  # MWh/degC, one cell
    thermal_resistance: float = 2.5e5  # degC/MW, one cell
    ambient_temperature: float = 20.0
    tank_max: float = 50.0  # kg
    epsilon: float = 0.05
    n_bits: int = 12
    big_m: float | None = None  # MW, default: largest single-cell power
    big_m_response: float = 1.0  # MW per MW of wind error, one cell
    converter_max: float = 1.0e3
    compressor_max: float = 1.0e3
    boiler_max: float = 1.0e3

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if v is not None and not math.isfinite(v):
                raise ConfigurationError("must be finite", f.name)
        for name in ("cell_cost", "converter_cost", "compressor_cost", "tank_cost",
                     "boiler_cost", "startup_cost", "shutdown_cost", "transmission_cost",
                     "compressor_energy", "tank_max", "converter_max", "compressor_max",
                     "boiler_max"):
            if getattr(self, name) < 0:
                raise ConfigurationError("must be >= 0", name)
        if self.hydrogen_price <= 0:
            raise ConfigurationError("must be > 0", "hydrogen_price")
        for name in ("converter_efficiency", "boiler_efficiency"):
            if not 0 < getattr(self, name) <= 1:
                raise ConfigurationError("must lie in (0, 1]", name)
        if not 0 < self.epsilon < 1:
            raise ConfigurationError(f"epsilon={self.epsilon} must lie in (0, 1)", "epsilon")
        for name in ("ramp_up", "ramp_down", "startup_ramp", "shutdown_ramp",
                     "heat_capacity", "thermal_resistance", "big_m_response"):
            if getattr(self, name) <= 0:
                raise ConfigurationError("must be > 0", name)
        for name in ("min_up", "min_down"):
            if int(getattr(self, name)) != getattr(self, name) or getattr(self, name) < 1:
                raise ConfigurationError("must be an integer >= 1", name)
        if int(self.n_bits) != self.n_bits or not 1 <= self.n_bits <= 30:
            raise ConfigurationError("must be an integer in [1, 30]", "n_bits")
        if self.big_m is not None and self.big_m <= 0:
            raise ConfigurationError("must be > 0", "big_m")

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"unknown keys {sorted(unknown)}", "parameters")
        kw = {}
        for k, v in data.items():
            if k in ("min_up", "min_down", "n_bits"):
                kw[k] = int(v)
            elif v is None:
                kw[k] = None
            else:
                kw[k] = float(v)
        return cls(**kw)

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class ChpRegion:
    """Corner points A-D of the CHP operating polytope."""

    power: np.ndarray  # MW electric
    heat: np.ndarray  # MW heat
    cost: np.ndarray  # $/h at each corner

    def __post_init__(self):
        arrs = [np.asarray(getattr(self, k), dtype=float).ravel() for k in ("power", "heat", "cost")]
        if any(a.size != 4 for a in arrs):
            raise ConfigurationError("CHP region needs exactly four corners", "chp")
        if any(not np.all(np.isfinite(a)) for a in arrs):
            raise ConfigurationError("non-finite corner value", "chp")
        if np.any(arrs[2] < 0):
            raise ConfigurationError("corner costs must be >= 0", "chp.cost")
        pts = np.column_stack(arrs[:2])
        cross = []
        for k in range(4):
            a, b, c = pts[k], pts[(k + 1) % 4], pts[(k + 2) % 4]
            cross.append((b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]))
        cross = np.array(cross)
        if not (np.all(cross > 0) or np.all(cross < 0)):
            raise ConfigurationError("corners do not form a convex quadrilateral", "chp")
        for k, a in zip(("power", "heat", "cost"), arrs):
            object.__setattr__(self, k, a)

    @classmethod
    def from_dict(cls, data):
        try:
            return cls(data["power"], data["heat"], data["cost"])
        except KeyError as exc:
            raise ConfigurationError(f"missing key {exc.args[0]}", "chp") from None

    def to_dict(self):
        return {k: [float(x) for x in getattr(self, k)] for k in ("power", "heat", "cost")}

    def contains(self, p, q, tol=1e-6):
        """Point-in-polygon test with absolute tolerance on edge distance."""
        pts = np.column_stack([self.power, self.heat])
        u, w = pts[1] - pts[0], pts[2] - pts[1]
        orient = np.sign(u[0] * w[1] - u[1] * w[0])
        for k in range(4):
            a, b = pts[k], pts[(k + 1) % 4]
            edge = b - a
            cr = edge[0] * (q - a[1]) - edge[1] * (p - a[0])
            dist = cr / np.linalg.norm(edge)
            if orient * dist < -tol:
                return False
        return True


@dataclass(frozen=True)
class IesInstance:
    params: IesParameters
    chp: ChpRegion
    cell_region: object  # CellOperatingRegion
    days: object  # RepresentativeDaySet
    moments: object  # WindMoments
    cell_params: CellParameters = field(default_factory=CellParameters)
    initial_temperature: float = 80.0

    @property
    def n_days(self):
        return self.days.n_days

    @property
    def n_hours(self):
        return self.days.n_hours

    @property
    def n_plants(self):
        return self.moments.n_plants

    @property
    def hydrogen_yield(self):
        """kg of hydrogen per MWh of hydrogen power, at the reference-temperature
        thermal-neutral voltage."""
        cp = self.cell_params
        return 3.6e6 / (_thermal_neutral_voltage(cp.t_ref, cp) * cp.faraday)

    @property
    def big_m(self):
        if self.params.big_m is not None:
            return self.params.big_m
        return max(default_big_m(self.cell_params), float(self.cell_region.power.max()))

    def aggregate_variance(self, r, t):
        return float(self.moments.cov[r, t].sum())


def build_instance(params, chp_region, cell_region, days, moments, initial_temperature=80.0,
                   cell_params=None):
    """Cross-check the pieces and bundle them into an :class:`IesInstance`."""
    cell_params = cell_params or CellParameters()
    if days.n_days != moments.n_days:
        raise ConfigurationError(
            f"{days.n_days} representative days but wind moments for {moments.n_days}", "days")
    if days.n_hours != moments.n_hours:
        raise ConfigurationError(
            f"{days.n_hours} demand hours but wind moments for {moments.n_hours}", "hours")
    t_lo, t_hi = float(cell_region.temperature.min()), float(cell_region.temperature.max())
    if not t_lo <= initial_temperature <= t_hi:
        raise ConfigurationError(
            f"initial temperature {initial_temperature} outside [{t_lo}, {t_hi}]",
            "initial_temperature")
    if not 0 < params.epsilon < 1:
        raise ConfigurationError("epsilon must lie in (0, 1)", "epsilon")
    if params.big_m is not None and params.big_m < float(cell_region.power.max()) * (1 - 1e-12):
        raise ConfigurationError(
            f"big_m={params.big_m} is below the largest cell power {cell_region.power.max()}",
            "big_m")
    inst = IesInstance(params, chp_region, cell_region, days, moments, cell_params,
                       float(initial_temperature))
    logger.info("instance: %d days x %d hours x %d plants, about %d variables",
                inst.n_days, inst.n_hours, inst.n_plants, variable_count(inst))
    return inst


def variable_count(instance):
    """Closed-form size of the decision table (see :class:`DecisionSchema`)."""
    R, T, N = instance.n_days, instance.n_hours, instance.params.n_bits
    per_hour = 2 * (len(SCALAR_POLICIES) + 4 * len(VECTOR_POLICIES)) + len(COMMITMENT) + 1
    per_hour += 2 * len(STACK_PAIRS) * N
    return len(PLANNING) + N + R * T * per_hour + R * (T - 1) * 2


class Lin:
    """Affine expression over named decision variables."""

    __slots__ = ("terms", "const")

    def __init__(self, terms=None, const=0.0):
        self.terms = dict(terms or {})
        self.const = float(const)

    @classmethod
    def var(cls, name, coef=1.0):
        return cls({name: float(coef)})

    def copy(self):
        return Lin(self.terms, self.const)

    def __add__(self, other):
        out = self.copy()
        if isinstance(other, Lin):
            for k, v in other.terms.items():
                out.terms[k] = out.terms.get(k, 0.0) + v
            out.const += other.const
        else:
            out.const += float(other)
        return out

    __radd__ = __add__

    def __neg__(self):
        return Lin({k: -v for k, v in self.terms.items()}, -self.const)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, s):
        s = float(s)
        return Lin({k: v * s for k, v in self.terms.items()}, self.const * s)

    __rmul__ = __mul__

    def __truediv__(self, s):
        return self * (1.0 / float(s))

    def clean(self):
        return Lin({k: v for k, v in self.terms.items() if v != 0.0}, self.const)

    def is_constant(self):
        return not any(v != 0.0 for v in self.terms.values())

    def evaluate(self, values):
        return self.const + sum(v * values[k] for k, v in self.terms.items())

    def __repr__(self):
        body = " + ".join(f"{v:g}*{k}" for k, v in self.terms.items())
        return f"Lin({body} + {self.const:g})"


def lsum(items):
    out = Lin()
    for it in items:
        out = out + it
    return out


def dot(coefs, exprs):
    return lsum(float(c) * e for c, e in zip(coefs, exprs))


@dataclass(frozen=True)
class SymbolicConstraint:
    """One constraint of the planning model before reformulation.

    * ``DeterministicLinear``: ``expr <= 0`` or ``expr == 0``.
    * ``StochasticEquality``: ``expr + factor * (1^T w) == 0`` for every ``w``,
      i.e. both ``expr == 0`` and ``factor == 0``.
    * ``DrccInequality``: ``P[sum_k loading_k * (1^T w_{hour_k}) <= rhs] >= 1 - eps``
      over the moment ambiguity set.
    * ``StackProduct``: ``stack == n_cells * cell``.
    """

    kind: str
    template: str
    day: int = -1
    hour: int = -1
    component: int = -1
    expr: Lin | None = None
    sense: str = "="
    factor: Lin | None = None
    loading: tuple = ()  # ((hour, Lin), ...)
    rhs: Lin | None = None
    approximate: bool = False
    stack: str = ""
    cell: str = ""
    response: bool = False

    @property
    def tag(self):
        idx = [str(i) for i in (self.day, self.hour, self.component) if i >= 0]
        return f"{self.template}[{','.join(idx)}]" if idx else self.template

    def symbols(self):
        out = set()
        for e in (self.expr, self.factor, self.rhs):
            if e is not None:
                out |= set(e.terms)
        for _, e in self.loading:
            out |= set(e.terms)
        if self.kind == STACK_PRODUCT:
            out |= {self.stack, self.cell, "n_cells"}
        return out


def _n(base, r=None, t=None, k=None):
    idx = [str(i) for i in (r, t, k) if i is not None]
    return f"{base}[{','.join(idx)}]" if idx else base


class DecisionSchema:
    """Names and canonical order of every decision variable.

    Order: planning capacities, cell-count bits, then for each (day, hour):
    commitment binaries, each policy's nominal value followed by its response,
    temperature (hours >= 1), epigraph of the grid cost, and the bit products.
    """

    def __init__(self, n_days, n_hours, n_bits):
        self.n_days, self.n_hours, self.n_bits = n_days, n_hours, n_bits
        names, binary = [], []

        def add(name, is_bin=False):
            names.append(name)
            binary.append(is_bin)

        for p in PLANNING:
            add(p)
        for j in range(n_bits):
            add(_n("cell_bit", k=j), True)
        for r in range(n_days):
            for t in range(n_hours):
                for c in COMMITMENT:
                    add(_n(c, r, t), True)
                for base in VECTOR_POLICIES:
                    for k in range(4):
                        add(_n(base, r, t, k))
                    for k in range(4):
                        add(_n(base + "_resp", r, t, k))
                for base in SCALAR_POLICIES:
                    add(_n(base, r, t))
                    add(_n(base + "_resp", r, t))
                if t >= 1:
                    add(_n("cell_temp", r, t))
                    add(_n("cell_temp_resp", r, t))
                add(_n("grid_cost_epi", r, t))
                for stack, cell in STACK_PAIRS:
                    for resp in ("", "_resp"):
                        for j in range(n_bits):
                            add(_n(f"bit_x_{cell}{resp}", r, t, j))
        self.names = tuple(names)
        self.binary = tuple(binary)
        self.index = {nm: i for i, nm in enumerate(names)}
        if len(self.index) != len(names):
            raise DimensionError("duplicate decision names")

    def __len__(self):
        return len(self.names)

    def __contains__(self, name):
        return name in self.index

    def v(self, base, r=None, t=None, k=None, coef=1.0):
        name = _n(base, r, t, k)
        if name not in self.index:
            raise KeyError(name)
        return Lin.var(name, coef)

    @staticmethod
    def name(base, r=None, t=None, k=None):
        return _n(base, r, t, k)


def build_commitment_constraints(instance, schema=None):
    """Start-up/shut-down logic and minimum up/down windows of the CHP plant.

    The plant is assumed off before the first hour of every representative
    day, so being on at hour 0 counts as a start-up.
    """
    p = instance.params
    T = instance.n_hours
    sch = schema or DecisionSchema(instance.n_days, T, p.n_bits)
    out = []
    up, down = int(p.min_up), int(p.min_down)
    for r in range(instance.n_days):
        u = [sch.v("chp_on", r, t) for t in range(T)]
        su = [sch.v("chp_start", r, t) for t in range(T)]
        sd = [sch.v("chp_stop", r, t) for t in range(T)]
        out.append(SymbolicConstraint(DETERMINISTIC, "chp.start_first_hour", r, 0,
                                      expr=u[0] - su[0], sense="<="))
        for t in range(1, T):
            out.append(SymbolicConstraint(DETERMINISTIC, "chp.start", r, t,
                                          expr=u[t] - u[t - 1] - su[t], sense="<="))
            out.append(SymbolicConstraint(DETERMINISTIC, "chp.stop", r, t,
                                          expr=u[t - 1] - u[t] - sd[t], sense="<="))
        for tau in range(1, min(T - 1, up - 1) + 1):
            out.append(SymbolicConstraint(DETERMINISTIC, "chp.min_up_first_hour", r, 0, tau,
                                          expr=u[0] - u[tau], sense="<="))
        for t in range(1, T - 1):
            for tau in range(t + 1, min(T - 1, t + up - 1) + 1):
                out.append(SymbolicConstraint(DETERMINISTIC, "chp.min_up", r, t, tau,
                                              expr=u[t] - u[t - 1] - u[tau], sense="<="))
            for tau in range(t + 1, min(T - 1, t + down - 1) + 1):
                out.append(SymbolicConstraint(DETERMINISTIC, "chp.min_down", r, t, tau,
                                              expr=u[t - 1] - u[t] + u[tau] - 1.0, sense="<="))
    return out


def _pair(sch, base, r, t, k=None):
    return sch.v(base, r, t, k), sch.v(base + "_resp", r, t, k)


def build_stochastic_constraints(instance, schema=None):
    """Operating constraints of CHP, balances, boiler, P2HH, tank, converter
    and compressor, with every recourse quantity under its affine policy."""
    p = instance.params
    R, T = instance.n_days, instance.n_hours
    sch = schema or DecisionSchema(R, T, p.n_bits)
    chp, cell = instance.chp, instance.cell_region
    m_wind = instance.moments.mean.sum(axis=2)  # (R, T)
    d_el, d_heat = instance.days.electric, instance.days.heat
    k_h2 = instance.hydrogen_yield
    C, Rth, Ta = p.heat_capacity, p.thermal_resistance, p.ambient_temperature
    t_lo, t_hi = float(cell.temperature.min()), float(cell.temperature.max())
    T0 = instance.initial_temperature
    keep = 1.0 - 1.0 / (Rth * C)
    out = []

    def eq(template, r, t, nominal, factor, k=-1, approximate=False):
        out.append(SymbolicConstraint(STOCHASTIC_EQ, template, r, t, k, expr=nominal,
                                      factor=factor, approximate=approximate))

    def chance(template, r, t, loading, rhs, k=-1):
        out.append(SymbolicConstraint(DRCC, template, r, t, k, loading=tuple(loading), rhs=rhs))

    for r in range(R):
        for t in range(T):
            x = [_pair(sch, "chp_weight", r, t, k) for k in range(4)]
            y = [_pair(sch, "cell_weight", r, t, k) for k in range(4)]
            u = sch.v("chp_on", r, t)
            grid, grid_r = _pair(sch, "grid_import", r, t)
            pb, pb_r = _pair(sch, "boiler_power", r, t)
            qb, qb_r = _pair(sch, "boiler_heat", r, t)
            nh, nh_r = _pair(sch, "h2_mass", r, t)
            ps, ps_r = _pair(sch, "stack_power", r, t)
            pc, pc_r = _pair(sch, "cell_power", r, t)
            qs, qs_r = _pair(sch, "stack_heat_out", r, t)
            qc, qc_r = _pair(sch, "cell_heat_out", r, t)
            hs, hs_r = _pair(sch, "stack_h2_power", r, t)
            hc, hc_r = _pair(sch, "cell_h2_power", r, t)
            qh, qh_r = _pair(sch, "cell_heat", r, t)
            m, m_r = _pair(sch, "tank_level", r, t)
            xs, xr = [a for a, _ in x], [b for _, b in x]
            ys, yr = [a for a, _ in y], [b for _, b in y]
            chp_p, chp_p_r = dot(chp.power, xs), dot(chp.power, xr)

            # CHP
            eq("chp.weights_sum", r, t, lsum(xs) - u, lsum(xr))
            for k in range(4):
                chance("chp.weight_nonneg", r, t, [(t, -xr[k])], xs[k], k)
                chance("chp.weight_le_one", r, t, [(t, xr[k])], 1.0 - xs[k], k)
            if t == 0:
                chance("chp.ramp_first_hour", r, t, [(t, chp_p_r)], p.startup_ramp - chp_p)
            else:
                prev = [_pair(sch, "chp_weight", r, t - 1, k) for k in range(4)]
                prev_p = dot(chp.power, [a for a, _ in prev])
                prev_p_r = dot(chp.power, [b for _, b in prev])
                u_prev = sch.v("chp_on", r, t - 1)
                chance("chp.ramp_up", r, t, [(t - 1, -prev_p_r), (t, chp_p_r)],
                       prev_p - chp_p + p.startup_ramp * (1.0 - u_prev) + p.ramp_up * u_prev)
                chance("chp.ramp_down", r, t, [(t - 1, prev_p_r), (t, -chp_p_r)],
                       chp_p - prev_p + p.shutdown_ramp * (1.0 - u) + p.ramp_down * u)

            # balances
            eq("balance.power", r, t,
               grid + chp_p + float(m_wind[r, t]) - ps / p.converter_efficiency
               - p.compressor_energy * nh - pb - float(d_el[r, t]),
               grid_r + chp_p_r + 1.0 - ps_r / p.converter_efficiency
               - p.compressor_energy * nh_r - pb_r)
            eq("balance.heat", r, t,
               dot(chp.heat, xs) + qs + qb - float(d_heat[r, t]),
               dot(chp.heat, xr) + qs_r + qb_r)

            # electric boiler
            chance("boiler.power_nonneg", r, t, [(t, -pb_r)], pb)
            chance("boiler.power_cap", r, t, [(t, pb_r)], sch.v("boiler_cap") - pb)
            eq("boiler.heat_ratio", r, t, qb - p.boiler_efficiency * pb,
               qb_r - p.boiler_efficiency * pb_r)

            # P2HH stack and cell
            for stack, cellq in STACK_PAIRS:
                for resp in ("", "_resp"):
                    out.append(SymbolicConstraint(
                        STACK_PRODUCT, f"p2hh.stack_{cellq}{resp}", r, t,
                        stack=_n(stack + resp, r, t), cell=_n(cellq + resp, r, t),
                        response=bool(resp)))
            chance("p2hh.heat_out_nonneg", r, t, [(t, -qc_r)], qc)
            eq("p2hh.cell_power_split", r, t, pc - hc - qh, pc_r - hc_r - qh_r)
            eq("p2hh.h2_mass", r, t, nh - k_h2 * hs, nh_r - k_h2 * hs_r)
            eq("p2hh.cell_weights_sum", r, t, lsum(ys) - 1.0, lsum(yr))
            for k in range(4):
                chance("p2hh.cell_weight_nonneg", r, t, [(t, -yr[k])], ys[k], k)
                chance("p2hh.cell_weight_le_one", r, t, [(t, yr[k])], 1.0 - ys[k], k)
            eq("p2hh.cell_h2_power", r, t, dot(cell.hydrogen_power, ys) - hc,
               dot(cell.hydrogen_power, yr) - hc_r)
            eq("p2hh.cell_heat", r, t, dot(cell.heat_power, ys) - qh,
               dot(cell.heat_power, yr) - qh_r)

            # temperature
            if t == 0:
                eq("p2hh.temp_link_first_hour", r, t, dot(cell.temperature, ys) - T0,
                   dot(cell.temperature, yr))
                temp, temp_r = Lin(const=T0), Lin()
            else:
                temp, temp_r = _pair(sch, "cell_temp", r, t)
                eq("p2hh.temp_link", r, t, dot(cell.temperature, ys) - temp,
                   dot(cell.temperature, yr) - temp_r)
                chance("p2hh.temp_min", r, t, [(t, -temp_r)], temp - t_lo)
                chance("p2hh.temp_max", r, t, [(t, temp_r)], t_hi - temp)
            next_nom = keep * temp + (qh - qc + Ta / Rth) / C
            next_resp = keep * temp_r + (qh_r - qc_r) / C
            if t < T - 1:
                nt, nt_r = _pair(sch, "cell_temp", r, t + 1)
                eq("p2hh.temp_step", r, t, nt - next_nom, nt_r - next_resp, approximate=True)
            else:
                chance("p2hh.temp_end_min", r, t, [(t, -next_resp)], next_nom - t_lo)
                chance("p2hh.temp_end_max", r, t, [(t, next_resp)], t_hi - next_nom)

            # hydrogen tank
            if t == 0:
                eq("tank.first_hour", r, t, m - nh, m_r - nh_r)
            else:
                m_prev, m_prev_r = _pair(sch, "tank_level", r, t - 1)
                eq("tank.step", r, t, m - m_prev - nh, m_r - m_prev_r - nh_r, approximate=True)
            if t == T - 1:
                chance("tank.end_cap", r, t, [(t, m_r)], sch.v("tank_cap") - m)

            # converter and compressor
            chance("converter.cap", r, t, [(t, ps_r)],
                   p.converter_efficiency * sch.v("converter_cap") - ps)
            chance("compressor.cap", r, t, [(t, nh_r)], sch.v("compressor_cap") - nh)
    return out


def build_facility_constraints(instance, schema=None, enable_p2hh=True, enable_boiler=True):
    """Capacity bounds, cell-count bits and binary bounds.

    Disabled technologies keep their variables; their capacity bounds are
    set to zero so every scenario compiles to the same program shape.
    """
    p = instance.params
    sch = schema or DecisionSchema(instance.n_days, instance.n_hours, p.n_bits)
    out = []

    def le(template, expr, k=-1):
        out.append(SymbolicConstraint(DETERMINISTIC, template, component=k, expr=expr, sense="<="))

    bits = [sch.v("cell_bit", k=j) for j in range(p.n_bits)]
    out.append(SymbolicConstraint(DETERMINISTIC, "facility.cell_bits",
                                  expr=sch.v("n_cells") - dot([2.0 ** j for j in range(p.n_bits)],
                                                               bits)))
    bit_cap = 1.0 if enable_p2hh else 0.0
    for j, b in enumerate(bits):
        le("facility.cell_bit_lower", -b, j)
        le("facility.cell_bit_upper", b - bit_cap, j)
    limits = {
        "converter_cap": p.converter_max if enable_p2hh else 0.0,
        "compressor_cap": p.compressor_max if enable_p2hh else 0.0,
        "tank_cap": p.tank_max if enable_p2hh else 0.0,
        "boiler_cap": p.boiler_max if enable_boiler else 0.0,
    }
    for name, cap in limits.items():
        le(f"facility.{name}_lower", -sch.v(name))
        le(f"facility.{name}_upper", sch.v(name) - cap)
    for r in range(instance.n_days):
        for t in range(instance.n_hours):
            for c in COMMITMENT:
                v = sch.v(c, r, t)
                out.append(SymbolicConstraint(DETERMINISTIC, f"binary.{c}_lower", r, t,
                                              expr=-v, sense="<="))
                out.append(SymbolicConstraint(DETERMINISTIC, f"binary.{c}_upper", r, t,
                                              expr=v - 1.0, sense="<="))
    return out


def build_model(instance, enable_p2hh=True, enable_boiler=True):
    """Schema plus the complete symbolic constraint list in canonical order."""
    sch = DecisionSchema(instance.n_days, instance.n_hours, instance.params.n_bits)
    cons = build_facility_constraints(instance, sch, enable_p2hh, enable_boiler)
    cons += build_commitment_constraints(instance, sch)
    cons += build_stochastic_constraints(instance, sch)
    return sch, cons
