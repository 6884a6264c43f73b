"""
Replay of affine policies against wind forecast errors.

Every recourse quantity is evaluated as ``nominal + response * (1^T w)``.
Inequalities are checked on the affine policies themselves.  Temperature
and tank level are also recomputed with the exact hour-to-hour recursions
and their bound breaches are reported separately.
"""

from __future__ import annotations

import csv
import logging
import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigurationError, DimensionError, SolutionLoadError
from .ies_model import COMMITMENT, PLANNING, SCALAR_POLICIES, STACK_PAIRS, VECTOR_POLICIES

logger = logging.getLogger(__name__)

POLICY_BASES = SCALAR_POLICIES + VECTOR_POLICIES + ("cell_temp",)
VIOLATION_RTOL = 1e-6
VIOLATION_ATOL = 1e-9


def _nm(base, r=None, t=None, k=None):
    idx = [str(i) for i in (r, t, k) if i is not None]
    return f"{base}[{','.join(idx)}]" if idx else base


@dataclass
class AffinePolicySolution:
    capacities: dict  # planning name -> value
    on: np.ndarray  # (R, T) int
    start: np.ndarray
    stop: np.ndarray
    nominal: dict  # base -> (R, T) or (R, T, 4)
    response: dict
    dims: tuple  # (days, hours, plants, bits)
    objective: float = float("nan")
    initial_temperature: float = 80.0
    values: dict = field(default_factory=dict, repr=False)

    @property
    def n_cells(self):
        return int(self.capacities["n_cells"])

    @classmethod
    def from_values(cls, values, dims, objective=float("nan"), initial_temperature=80.0):
        R, T, Z, N = dims
        try:
            caps = {p: float(values[p]) for p in PLANNING}
            com = {c: np.array([[values[_nm(c, r, t)] for t in range(T)] for r in range(R)])
                   for c in COMMITMENT}
            nominal, response = {}, {}
            for base in SCALAR_POLICIES:
                for suffix, out in (("", nominal), ("_resp", response)):
                    out[base] = np.array([[values[_nm(base + suffix, r, t)] for t in range(T)]
                                          for r in range(R)], dtype=float)
            for base in VECTOR_POLICIES:
                for suffix, out in (("", nominal), ("_resp", response)):
                    out[base] = np.array([[[values[_nm(base + suffix, r, t, k)] for k in range(4)]
                                           for t in range(T)] for r in range(R)], dtype=float)
            temp = np.full((R, T), float(initial_temperature))
            temp_r = np.zeros((R, T))
            for r in range(R):
                for t in range(1, T):
                    temp[r, t] = values[_nm("cell_temp", r, t)]
                    temp_r[r, t] = values[_nm("cell_temp_resp", r, t)]
            nominal["cell_temp"], response["cell_temp"] = temp, temp_r
        except KeyError as exc:
            raise SolutionLoadError(f"solution lacks variable {exc.args[0]}") from None
        for k, v in caps.items():
            if not math.isfinite(v):
                raise SolutionLoadError(f"non-finite capacity {k}")
            if v < -1e-6:
                raise SolutionLoadError(f"negative capacity {k}={v}")
            caps[k] = max(v, 0.0)
        n = caps["n_cells"]
        if abs(n - round(n)) > 1e-5:
            raise SolutionLoadError(f"cell count {n} is not integral")
        caps["n_cells"] = float(round(n))
        binaries = {c: np.rint(a).astype(int) for c, a in com.items()}
        return cls(caps, binaries["chp_on"], binaries["chp_start"], binaries["chp_stop"],
                   nominal, response, tuple(int(d) for d in dims), float(objective),
                   float(initial_temperature), dict(values))

    @classmethod
    def from_vector(cls, program, x, instance):
        values = dict(zip(program.names, np.asarray(x, dtype=float)))
        dims = (instance.n_days, instance.n_hours, instance.n_plants, instance.params.n_bits)
        return cls.from_values(values, dims, program.objective(x), instance.initial_temperature)

    def to_csv(self, path, header_lines=()):
        R, T, Z, N = self.dims
        with open(path, "w", newline="") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            fh.write(f"# dims days={R} hours={T} plants={Z} bits={N}\n")
            fh.write(f"# objective {self.objective!r}\n")
            fh.write(f"# initial_temperature {self.initial_temperature!r}\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["name", "value"])
            for name, v in self.values.items():
                writer.writerow([name, repr(float(v) + 0.0)])
        return path


def load_solution(path, instance=None):
    """Read a solution dump; dimensions are checked against ``instance``."""
    dims = objective = None
    t0 = 80.0
    values = {}
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise SolutionLoadError(f"cannot read solution {path}: {exc}") from exc
    body = []
    try:
        for line in lines:
            if line.startswith("# dims"):
                kv = dict(tok.split("=") for tok in line[len("# dims"):].split())
                dims = tuple(int(kv[k]) for k in ("days", "hours", "plants", "bits"))
            elif line.startswith("# objective"):
                objective = float(line.split()[-1])
            elif line.startswith("# initial_temperature"):
                t0 = float(line.split()[-1])
            elif line.startswith("#") or not line.strip():
                continue
            else:
                body.append(line)
        if not body or body[0].strip() != "name,value":
            raise SolutionLoadError(f"{path}: missing 'name,value' header")
        for row in csv.reader(body[1:]):
            if len(row) != 2:
                raise SolutionLoadError(f"{path}: malformed row {row}")
            values[row[0]] = float(row[1])
    except (ValueError, KeyError) as exc:
        raise SolutionLoadError(f"{path}: {exc}") from exc
    if dims is None:
        raise SolutionLoadError(f"{path}: no dims record")
    if instance is not None:
        want = (instance.n_days, instance.n_hours, instance.n_plants, instance.params.n_bits)
        if dims != want:
            raise DimensionError(f"solution dims {dims} do not match instance {want}")
    return AffinePolicySolution.from_values(values, dims, objective if objective is not None
                                            else float("nan"), t0)


@dataclass
class RealizedDispatch:
    """Realized quantities for a batch of samples, arrays shaped (S, R, T[, 4])."""

    values: dict
    temperature_exact: np.ndarray  # (S, R, T+1), index 0 is the initial temperature
    temperature_affine: np.ndarray  # (S, R, T), affine prediction at hours 0..T-1
    tank_exact: np.ndarray  # (S, R, T)
    tank_affine: np.ndarray
    power_residual: np.ndarray  # (S, R, T)
    heat_residual: np.ndarray
    stack_residual: np.ndarray  # (S, R, T), max over the three couplings
    chp_power: np.ndarray
    chp_heat: np.ndarray
    wind: np.ndarray  # (S, R, T) total realized wind
    aggregate_error: np.ndarray  # (S, R, T)
    violations: dict = field(default_factory=dict)  # check -> bool (S, R, T)
    exact_violations: dict = field(default_factory=dict)  # exact-recursion bound breaches

    @property
    def temperature_deviation(self):
        return np.abs(self.temperature_exact[..., :-1] - self.temperature_affine)

    @property
    def tank_deviation(self):
        return np.abs(self.tank_exact - self.tank_affine)

    @property
    def any_violation(self):
        return self.flag_samples(False)

    def flag_samples(self, include_exact=False):
        checks = list(self.violations.values())
        if include_exact:
            checks += list(self.exact_violations.values())
        if not checks:
            return np.zeros(self.wind.shape[0], bool)
        return np.any([v.reshape(v.shape[0], -1).any(axis=1) for v in checks], axis=0)


def _as_errors(omega, instance):
    w = np.asarray(omega, dtype=float)
    if w.ndim == 3:
        w = w[None]
    want = (instance.n_days, instance.n_hours, instance.n_plants)
    if w.ndim != 4 or w.shape[1:] != want:
        raise DimensionError(f"error samples of shape {np.shape(omega)} do not match {want}")
    return w


def _exceeds(lhs, rhs):
    scale = np.maximum(np.abs(lhs), np.abs(rhs))
    return lhs - rhs > VIOLATION_RTOL * scale + VIOLATION_ATOL


def apply_policy(sol, omega, instance):
    """Realize the affine policies for errors ``omega`` of shape (R, T, Z) or
    (S, R, T, Z)."""
    w = _as_errors(omega, instance)
    if sol.dims[:3] != w.shape[1:]:
        raise DimensionError(f"solution dims {sol.dims[:3]} do not match errors {w.shape[1:]}")
    p = instance.params
    s = w.sum(axis=3)  # (S, R, T)
    vals = {}
    for base in POLICY_BASES:
        nom, resp = sol.nominal[base], sol.response[base]
        if nom.ndim == 3:
            vals[base] = nom[None] + resp[None] * s[..., None]
        else:
            vals[base] = nom[None] + resp[None] * s
    n_cells = sol.capacities["n_cells"]
    chp = instance.chp
    chp_p = vals["chp_weight"] @ chp.power
    chp_q = vals["chp_weight"] @ chp.heat
    wind = (instance.moments.mean[None] + w).sum(axis=3)
    d_el, d_heat = instance.days.electric[None], instance.days.heat[None]
    power_res = (vals["grid_import"] + chp_p + wind - vals["stack_power"] / p.converter_efficiency
                 - p.compressor_energy * vals["h2_mass"] - vals["boiler_power"] - d_el)
    heat_res = chp_q + vals["stack_heat_out"] + vals["boiler_heat"] - d_heat
    stack_res = np.max([np.abs(vals[st] - n_cells * vals[ce]) for st, ce in STACK_PAIRS], axis=0)

    # exact recursions
    S, R, T = s.shape
    C, Rth, Ta = p.heat_capacity, p.thermal_resistance, p.ambient_temperature
    keep = 1.0 - 1.0 / (Rth * C)
    temp = np.empty((S, R, T + 1))
    temp[:, :, 0] = sol.initial_temperature
    for t in range(T):
        temp[:, :, t + 1] = (keep * temp[:, :, t]
                             + (vals["cell_heat"][:, :, t] - vals["cell_heat_out"][:, :, t]
                                + Ta / Rth) / C)
    tank = np.cumsum(vals["h2_mass"], axis=2)

    caps = sol.capacities
    region = instance.cell_region
    t_lo, t_hi = float(region.temperature.min()), float(region.temperature.max())
    viol = {}
    x = vals["chp_weight"]
    viol["chp.weight_nonneg"] = _exceeds(-x, 0.0).any(axis=3)
    viol["chp.weight_le_one"] = _exceeds(x, 1.0).any(axis=3)
    on = sol.on[None].astype(float)
    ramp_lim_up = np.empty((1, R, T))
    ramp_lim_dn = np.empty((1, R, T))
    ramp_lim_up[:, :, 0] = p.startup_ramp
    ramp_lim_up[:, :, 1:] = p.startup_ramp * (1 - on[:, :, :-1]) + p.ramp_up * on[:, :, :-1]
    ramp_lim_dn[:, :, 1:] = p.shutdown_ramp * (1 - on[:, :, 1:]) + p.ramp_down * on[:, :, 1:]
    prev = np.concatenate([np.zeros((S, R, 1)), chp_p[:, :, :-1]], axis=2)
    viol["chp.ramp_up"] = _exceeds(chp_p - prev, np.broadcast_to(ramp_lim_up, chp_p.shape))
    dn = _exceeds(prev - chp_p, np.broadcast_to(ramp_lim_dn, chp_p.shape))
    dn[:, :, 0] = False
    viol["chp.ramp_down"] = dn
    viol["boiler.power_nonneg"] = _exceeds(-vals["boiler_power"], 0.0)
    viol["boiler.power_cap"] = _exceeds(vals["boiler_power"], caps["boiler_cap"])
    viol["p2hh.heat_out_nonneg"] = _exceeds(-vals["cell_heat_out"], 0.0)
    y = vals["cell_weight"]
    viol["p2hh.cell_weight_nonneg"] = _exceeds(-y, 0.0).any(axis=3)
    viol["p2hh.cell_weight_le_one"] = _exceeds(y, 1.0).any(axis=3)
    # temperature and tank as the affine policies the model constrains
    temp_aff = vals["cell_temp"][:, :, 1:]
    keep_s = vals["cell_temp"][:, :, -1] * keep + (vals["cell_heat"][:, :, -1]
                                                  - vals["cell_heat_out"][:, :, -1] + Ta / Rth) / C
    end_aff = np.concatenate([temp_aff, keep_s[..., None]], axis=2)
    viol["p2hh.temp_min"] = _exceeds(t_lo, end_aff)
    viol["p2hh.temp_max"] = _exceeds(end_aff, t_hi)
    viol["tank.end_cap"] = _exceeds(vals["tank_level"][:, :, -1:], caps["tank_cap"])
    exact = {
        "p2hh.temp_min_exact": _exceeds(t_lo, temp[:, :, 1:]),
        "p2hh.temp_max_exact": _exceeds(temp[:, :, 1:], t_hi),
        "tank.cap_exact": _exceeds(tank, caps["tank_cap"]),
    }
    viol["converter.cap"] = _exceeds(vals["stack_power"], p.converter_efficiency * caps["converter_cap"])
    viol["compressor.cap"] = _exceeds(vals["h2_mass"], caps["compressor_cap"])

    return RealizedDispatch(
        values=vals, temperature_exact=temp, temperature_affine=vals["cell_temp"],
        tank_exact=tank, tank_affine=vals["tank_level"], power_residual=power_res,
        heat_residual=heat_res, stack_residual=stack_res, chp_power=chp_p, chp_heat=chp_q,
        wind=wind, aggregate_error=s, violations=viol, exact_violations=exact)


@dataclass
class ViolationReport:
    fraction: float
    n_samples: int
    histogram: dict  # check -> number of samples with at least one breach
    per_sample: np.ndarray  # bool (S,)
    exact_histogram: dict = field(default_factory=dict)
    fraction_with_exact: float = float("nan")

    def to_csv(self, path, header_lines=()):
        with open(path, "w") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            fh.write("check,violated_samples,fraction\n")
            fh.write(f"any,{int(self.per_sample.sum())},{self.fraction!r}\n")
            for k in sorted(self.histogram):
                n = self.histogram[k]
                fh.write(f"{k},{n},{n / max(self.n_samples, 1)!r}\n")
            fh.write(f"any_with_exact_paths,,{self.fraction_with_exact!r}\n")
            for k in sorted(self.exact_histogram):
                n = self.exact_histogram[k]
                fh.write(f"{k},{n},{n / max(self.n_samples, 1)!r}\n")
        return path


def violation_report(sol, errors, instance, include_exact=False, batch=250):
    """Fraction of samples with at least one breached inequality.

    Inequalities are evaluated on the fixed affine policies, temperature and
    tank level included.  Breaches of the exact temperature and tank
    recursions are always listed in ``exact_histogram`` and join the
    fraction only with ``include_exact``.
    """
    w = _as_errors(errors, instance)
    flags, flags_exact = [], []
    hist, hist_exact = Counter(), Counter()
    for lo in range(0, w.shape[0], batch):
        d = apply_policy(sol, w[lo:lo + batch], instance)
        flags.append(d.flag_samples(include_exact))
        flags_exact.append(d.flag_samples(True))
        for k, v in d.violations.items():
            hist[k] += int(v.reshape(v.shape[0], -1).any(axis=1).sum())
        for k, v in d.exact_violations.items():
            hist_exact[k] += int(v.reshape(v.shape[0], -1).any(axis=1).sum())
    per = np.concatenate(flags) if flags else np.zeros(0, bool)
    per_exact = np.concatenate(flags_exact) if flags_exact else np.zeros(0, bool)
    frac = float(per.mean()) if per.size else 0.0
    return ViolationReport(frac, int(per.size), dict(sorted(hist.items())), per,
                           dict(sorted(hist_exact.items())),
                           float(per_exact.mean()) if per_exact.size else 0.0)


def out_of_sample_violation(sol, scenarios, instance, include_exact=False):
    """Violation report for the wind samples in ``scenarios`` measured
    against the instance forecast."""
    return violation_report(sol, scenarios.wind - instance.moments.mean[None], instance,
                            include_exact)


@dataclass
class ProfitReport:
    wind: float
    chp: float
    investor: float
    items: dict  # stakeholder -> {line: $/yr}

    def check_identity(self, tol=1e-6):
        return all(abs(sum(self.items[k].values()) - getattr(self, k)) <= tol * max(1.0, abs(getattr(self, k)))
                   for k in ("wind", "chp", "investor"))

    def to_csv(self, path, header_lines=()):
        with open(path, "w") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            fh.write("stakeholder,item,usd_per_year\n")
            for k in ("wind", "chp", "investor"):
                for item, v in self.items[k].items():
                    fh.write(f"{k},{item},{v!r}\n")
                fh.write(f"{k},total,{getattr(self, k)!r}\n")
        return path


def profit_distribution(sol, dispatch, instance, electricity_price=55.0, heat_price=45.0):
    """Average annual profit of wind plants, CHP plant and flexibility investor.

    The electricity revenue pool (wind plus CHP production at the electricity
    price, less the transmission cost) is split by production share.  CHP
    start-up and shut-down costs are charged to the CHP plant.  The investor
    earns heat and hydrogen revenue and pays for capacity and for the
    electricity it draws, compressor included.
    """
    if electricity_price < 0 or heat_price < 0:
        raise ConfigurationError("prices must be non-negative", "prices")
    p = instance.params
    k = instance.days.weights[None, :, None]
    v = dispatch.values

    def annual(a):
        return float((np.asarray(a) * k).sum(axis=(1, 2)).mean())

    wind_e = np.clip(dispatch.wind, 0.0, None)
    chp_e = dispatch.chp_power
    total = wind_e + chp_e
    share_w = np.divide(wind_e, total, out=np.zeros_like(total), where=total > 0)
    trans = p.transmission_cost * v["grid_import"] ** 2
    pool_rev = electricity_price * total
    wind_items = {
        "electricity_pool_share": annual(share_w * pool_rev),
        "transmission_share": -annual(share_w * trans),
    }
    fuel = v["chp_weight"] @ instance.chp.cost
    switch = float((instance.days.weights[:, None] * (p.startup_cost * sol.start
                                                       + p.shutdown_cost * sol.stop)).sum())
    chp_items = {
        "electricity_pool_share": annual((1 - share_w) * pool_rev),
        "transmission_share": -annual((1 - share_w) * trans),
        "heat_revenue": annual(heat_price * dispatch.chp_heat),
        "fuel_cost": -annual(fuel),
        "start_stop_cost": -switch,
    }
    caps = sol.capacities
    invest = (p.cell_cost * caps["n_cells"] + p.converter_cost * caps["converter_cap"]
              + p.compressor_cost * caps["compressor_cap"] + p.tank_cost * caps["tank_cap"]
              + p.boiler_cost * caps["boiler_cap"])
    purchase = (v["stack_power"] / p.converter_efficiency + p.compressor_energy * v["h2_mass"]
                + v["boiler_power"])
    inv_items = {
        "heat_revenue": annual(heat_price * (v["boiler_heat"] + v["stack_heat_out"])),
        "hydrogen_revenue": annual(p.hydrogen_price * v["h2_mass"]),
        "investment_cost": -invest,
        "electricity_purchase": -annual(electricity_price * purchase),
    }
    items = {"wind": wind_items, "chp": chp_items, "investor": inv_items}
    return ProfitReport(sum(wind_items.values()), sum(chp_items.values()),
                        sum(inv_items.values()), items)


@dataclass
class KpiReport:
    inverse_flow: float  # MWh/yr
    imported: float  # MWh/yr
    chp_points: np.ndarray  # (R*T, 2) nominal (P, Q)
    temperature_min: float
    temperature_max: float
    hydrogen: float  # kg/yr
    n_cells: int
    capacities: dict

    def rows(self):
        out = [("inverse_flow_MWh_per_yr", self.inverse_flow), ("import_MWh_per_yr", self.imported),
               ("temperature_min_C", self.temperature_min),
               ("temperature_max_C", self.temperature_max),
               ("hydrogen_kg_per_yr", self.hydrogen)]
        out += [(k, v) for k, v in self.capacities.items()]
        return out

    def to_csv(self, path, header_lines=()):
        with open(path, "w") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            fh.write("kpi,value\n")
            for k, v in self.rows():
                fh.write(f"{k},{float(v)!r}\n")
        return path


def kpi_report(sol, dispatch, instance):
    k = instance.days.weights[None, :, None]
    grid = dispatch.values["grid_import"]
    inverse = float((np.clip(-grid, 0, None) * k).sum(axis=(1, 2)).mean())
    imported = float((np.clip(grid, 0, None) * k).sum(axis=(1, 2)).mean())
    x = sol.nominal["chp_weight"]
    pts = np.column_stack([(x @ instance.chp.power).ravel(), (x @ instance.chp.heat).ravel()])
    temp = dispatch.temperature_exact[..., 1:]
    h2 = float((dispatch.values["h2_mass"] * k).sum(axis=(1, 2)).mean())
    return KpiReport(inverse, imported, pts, float(temp.min()), float(temp.max()), h2,
                     sol.n_cells, dict(sol.capacities))


def write_chp_points(kpi, path, header_lines=()):
    """Nominal CHP operating points, one row per (day, hour)."""
    with open(path, "w") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        fh.write("point,electric_MW,heat_MW\n")
        for i, (pw, ht) in enumerate(kpi.chp_points):
            fh.write(f"{i},{float(pw)!r},{float(ht)!r}\n")
    return path


def write_temperature_paths(dispatch, path, header_lines=()):
    """Sample mean, minimum and maximum of the exact and affine temperature
    paths per (day, hour)."""
    exact = dispatch.temperature_exact[..., :-1]
    aff = dispatch.temperature_affine
    with open(path, "w") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        fh.write("day,hour,exact_mean_C,exact_min_C,exact_max_C,affine_mean_C,"
                 "affine_min_C,affine_max_C\n")
        for r in range(exact.shape[1]):
            for t in range(exact.shape[2]):
                cols = []
                for a in (exact[:, r, t], aff[:, r, t]):
                    cols += [float(a.mean()), float(a.min()), float(a.max())]
                fh.write(f"{r},{t}," + ",".join(repr(c) for c in cols) + "\n")
    return path


def nominal_dispatch(sol, instance):
    """Replay with zero forecast error."""
    return apply_policy(sol, np.zeros((1, instance.n_days, instance.n_hours, instance.n_plants)),
                        instance)


# ---------------------------------------------------------------- test samples

def day_covariances(errors):
    """Full within-day covariance of the stacked (hour, plant) errors per day.

    ``errors`` has shape (S, R, T, Z); returns (R, T*Z, T*Z)."""
    S, R, T, Z = errors.shape
    flat = errors.reshape(S, R, T * Z)
    flat = flat - flat.mean(axis=0)
    return np.einsum("sri,srj->rij", flat, flat) / (S - 1)


def _root(cov):
    vals, vecs = np.linalg.eigh(0.5 * (cov + cov.T))
    return vecs * np.sqrt(np.clip(vals, 0.0, None))


def sample_errors(cov_days, n, kind="gaussian", seed=0, df=5.0, hours=None, plants=None):
    """Zero-mean error samples with the given within-day covariances.

    ``kind`` is ``gaussian``, ``uniform`` (independent unit-variance uniform
    factors) or ``student_t`` (Gaussian scaled by an inverse chi-square
    mixing variable with unit mean, excess kurtosis ``6 / (df - 4)``).
    Returns shape (n, R, T, Z).
    """
    if n <= 0:
        raise ConfigurationError("sample count must be positive", "samples")
    rng = np.random.default_rng(seed)
    cov_days = np.asarray(cov_days, dtype=float)
    R, D, _ = cov_days.shape
    out = np.empty((n, R, D))
    for r in range(R):
        L = _root(cov_days[r])
        if kind == "gaussian":
            u = rng.standard_normal((n, D))
        elif kind == "uniform":
            u = rng.uniform(-math.sqrt(3.0), math.sqrt(3.0), size=(n, D))
        elif kind == "student_t":
            if df <= 4:
                raise ConfigurationError("df must exceed 4 for finite kurtosis", "df")
            mix = (df - 2.0) / rng.chisquare(df, size=(n, 1))
            u = rng.standard_normal((n, D)) * np.sqrt(mix)
        else:
            raise ConfigurationError(f"unknown sample kind {kind!r}", "kind")
        out[:, r] = u @ L.T
    if hours is not None:
        return out.reshape(n, R, hours, plants)
    return out


def two_point_worst_case(cov, a, b, n, seed=0):
    """Samples ``w`` with covariance ``cov`` whose projection ``a @ w`` is the
    two-point law attaining the one-sided Chebyshev bound at level ``b``.

    ``a @ w`` equals ``b`` with probability ``sigma^2 / (sigma^2 + b^2)`` and
    ``-sigma^2 / b`` otherwise; the part of ``w`` orthogonal (in the
    covariance metric) to ``a`` is Gaussian.
    """
    rng = np.random.default_rng(seed)
    cov = np.asarray(cov, dtype=float)
    a = np.asarray(a, dtype=float)
    var = float(a @ cov @ a)
    dim = cov.shape[0]
    if var <= 0:
        return rng.standard_normal((n, dim)) @ _root(cov).T
    if b <= 0:
        raise ConfigurationError("two-point construction needs b > 0", "b")
    p_hi = var / (var + b * b)
    x = np.where(rng.random(n) < p_hi, b, -var / b)
    direction = cov @ a / var
    resid_cov = cov - np.outer(cov @ a, cov @ a) / var
    g = rng.standard_normal((n, dim)) @ _root(resid_cov).T
    return x[:, None] * direction[None] + g


def binding_blocks(program, x, rtol=1e-5, atol=1e-9):
    """Chance records whose cone is tight at ``x``.  Blocks whose loading
    norm is below ``atol`` are solver noise around a zero loading and are
    skipped."""
    out = []
    for rec in program.chance:
        blk = program.soc[rec.block]
        lhs = float(np.linalg.norm(blk.F @ x + blk.g))
        rhs = float(blk.a @ x + blk.b)
        if lhs > atol and abs(rhs - lhs) <= rtol * lhs:
            out.append(rec)
    return out


def chance_violation(record, x, samples):
    """Empirical ``P[loading @ w > rhs]`` with ``samples`` of shape (n, dim_w)."""
    a = record.loading(x)
    b = record.rhs(x)
    lhs = samples @ a
    return float(np.mean(lhs - b > VIOLATION_RTOL * abs(b) + VIOLATION_ATOL))


def worst_case_violation(record, x, n, seed=0):
    """Empirical violation under the two-point law, counting ``a @ w >= b``."""
    a = record.loading(x)
    b = record.rhs(x)
    cov = record.covariance
    if float(a @ cov @ a) <= 0:
        return 0.0
    w = two_point_worst_case(cov, a, b, n, seed)
    lhs = w @ a
    return float(np.mean(lhs >= b * (1 - 1e-9)))
