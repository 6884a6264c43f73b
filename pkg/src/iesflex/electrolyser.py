"""
Alkaline electrolysis cell physics and the linearised operating region.

The cell voltage follows the usual empirical alkaline polarisation form::

    U_cell(i, T) = U_rev(T) + (r1 + r2 T) i + s log10((t1 + t2/T + t3/T**2) i + 1)

with ``i`` in A/cm2 and ``T`` in degC.  Concentration over-potential is not
modelled.  The thermal-neutral voltage comes from the reaction enthalpy of
liquid water splitting with a constant heat-capacity correction.

All physics is evaluated in density units (A/cm2, V, W/cm2); powers are
converted to MW only when multiplied by the cell area.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np
from scipy.optimize import lsq_linear

from .exceptions import ConfigurationError, DomainError, RegionError

logger = logging.getLogger(__name__)

FARADAY = 96485.33212  # C/mol
W_TO_MW = 1e-6
# voltage evaluation is allowed this far outside [t_min, t_max]
_EXTRAPOLATION_DEGC = 20.0


@dataclass(frozen=True)
class CellParameters:
    """Coefficients of a single alkaline electrolysis cell.

    Defaults reproduce power-to-hydrogen ratios between 0.745 and 0.814 over
    60-80 degC and 0.2-0.4 A/cm2.
    """

    u_rev_ref: float = 1.229  # V at t_ref
    u_rev_slope: float = -0.9e-3  # V/degC
    t_ref: float = 25.0  # degC
    r1: float = 0.3173  # ohm cm2
    r2: float = -2.644e-3  # ohm cm2/degC
    s: float = 0.3087  # V
    t1: float = 301.0  # cm2/A
    t2: float = 9962.0  # cm2 degC/A
    t3: float = 2.262e5  # cm2 degC2/A
    area: float = 2500.0  # cm2
    i_min: float = 0.2  # A/cm2
    i_max: float = 0.4  # A/cm2
    t_min: float = 60.0  # degC
    t_max: float = 80.0  # degC
    enthalpy_ref: float = 285840.0  # J/mol, liquid water at t_ref
    delta_cp: float = -31.77  # J/(mol K), Cp(H2) + Cp(O2)/2 - Cp(H2O,l)
    faraday: float = FARADAY

    def __post_init__(self):
        for f in fields(self):
            if not math.isfinite(getattr(self, f.name)):
                raise ConfigurationError("must be finite", f.name)
        if self.area <= 0:
            raise ConfigurationError("cell area must be positive", "area")
        if not 0 < self.i_min < self.i_max:
            raise ConfigurationError("require 0 < i_min < i_max", "i_min")
        if not self.t_min < self.t_max:
            raise ConfigurationError("require t_min < t_max", "t_min")

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"unknown keys {sorted(unknown)}", "cell")
        return cls(**{k: float(v) for k, v in data.items()})

    def to_dict(self):
        return asdict(self)

    def with_area(self, area):
        return replace(self, area=area)


@dataclass(frozen=True)
class CellOperatingPoint:
    current_density: float  # A/cm2
    temperature: float  # degC
    power: float  # MW
    hydrogen_power: float  # MW
    heat_power: float  # MW


@dataclass(frozen=True)
class CellOperatingRegion:
    """Four corner points of the linearised T-H-H surface of one cell.

    Corners are ordered A=(T_min, i_min), B=(T_min, i_max),
    C=(T_max, i_max), D=(T_max, i_min), so AB and CD are the temperature
    edges and AD, BC the current-density edges.
    """

    temperature: np.ndarray  # degC, shape (4,)
    current_density: np.ndarray  # A/cm2, shape (4,)
    hydrogen_power: np.ndarray  # MW
    heat_power: np.ndarray  # MW
    max_residual: float = 0.0  # relative to max corner power
    tolerance: float = 0.02
    labels: tuple = field(default=("A", "B", "C", "D"))

    @property
    def power(self):
        return self.hydrogen_power + self.heat_power

    @property
    def within_tolerance(self):
        return self.max_residual <= self.tolerance

    def to_csv(self, path, header_lines=()):
        with open(path, "w", newline="") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            writer = csv.writer(fh)
            writer.writerow(["corner", "temperature_C", "current_density_A_cm2",
                             "hydrogen_power_MW", "heat_power_MW"])
            for k in range(4):
                writer.writerow([self.labels[k], repr(float(self.temperature[k])),
                                 repr(float(self.current_density[k])),
                                 repr(float(self.hydrogen_power[k])),
                                 repr(float(self.heat_power[k]))])


def _finite(name, value):
    value = float(value)
    if not math.isfinite(value):
        raise DomainError(f"{name} must be finite, got {value}")
    return value


def reversible_voltage(T, params):
    return params.u_rev_ref + params.u_rev_slope * (T - params.t_ref)


def cell_voltage(i, T, params):
    """Cell voltage in V at current density ``i`` (A/cm2) and ``T`` (degC)."""
    i = _finite("current density", i)
    T = _finite("temperature", T)
    if i < 0:
        raise DomainError(f"current density must be >= 0, got {i}")
    if not (params.t_min - _EXTRAPOLATION_DEGC <= T <= params.t_max + _EXTRAPOLATION_DEGC):
        raise DomainError(f"temperature {T} outside extrapolation window")
    return _cell_voltage(i, T, params)


def _cell_voltage(i, T, p):
    # vectorised core; callers validate
    u_ohm = (p.r1 + p.r2 * T) * i
    u_act = p.s * np.log10((p.t1 + p.t2 / T + p.t3 / T**2) * i + 1.0)
    return reversible_voltage(T, p) + u_ohm + u_act


def thermal_neutral_voltage(T, params):
    T = _finite("temperature", T)
    return _thermal_neutral_voltage(T, params)


def _thermal_neutral_voltage(T, p):
    return (p.enthalpy_ref + p.delta_cp * (T - p.t_ref)) / (2.0 * p.faraday)


def _check_box(i, T, p, rtol=1e-12):
    di = rtol * p.i_max
    dT = rtol * p.t_max
    if not (p.i_min - di <= i <= p.i_max + di and p.t_min - dT <= T <= p.t_max + dT):
        raise RegionError(
            f"(i={i}, T={T}) outside [{p.i_min}, {p.i_max}] x [{p.t_min}, {p.t_max}]")


def cell_power_split(i, T, params):
    """Split the injected cell power into hydrogen and heat power (MW)."""
    i = _finite("current density", i)
    T = _finite("temperature", T)
    _check_box(i, T, params)
    u_cell = _cell_voltage(i, T, params)
    u_tn = _thermal_neutral_voltage(T, params)
    current = i * params.area  # A
    p = u_cell * current * W_TO_MW
    h = u_tn * current * W_TO_MW
    return CellOperatingPoint(i, T, p, h, p - h)


def power_split_grid(params, n_temperature=41, n_current=41):
    """Vectorised ratios over an evenly spaced (T, i) grid.

    Returns ``(T, i, p, h, q)`` arrays of shape ``(n_temperature, n_current)``.
    """
    T = np.linspace(params.t_min, params.t_max, n_temperature)
    i = np.linspace(params.i_min, params.i_max, n_current)
    TT, II = np.meshgrid(T, i, indexing="ij")
    current = II * params.area
    p = _cell_voltage(II, TT, params) * current * W_TO_MW
    h = _thermal_neutral_voltage(TT, params) * current * W_TO_MW
    return TT, II, p, h, p - h


def thh_residual(h, q, T, params, area=None):
    """Deviation of heat power ``q`` from the T-H-H surface at (h, T).

    The current density is recovered from the hydrogen power through the
    thermal-neutral voltage, so the residual is affine in ``q`` and vanishes
    exactly on the surface.
    """
    h = _finite("hydrogen power", h)
    q = _finite("heat power", q)
    T = _finite("temperature", T)
    if h <= 0:
        raise DomainError("hydrogen power must be positive to invert for current density")
    area = params.area if area is None else float(area)
    u_tn = _thermal_neutral_voltage(T, params)
    i = h / (u_tn * area * W_TO_MW)
    q_model = h / u_tn * (_cell_voltage(i, T, params) - u_tn)
    return q - q_model


def _corner_grid(params):
    Ts = (params.t_min, params.t_min, params.t_max, params.t_max)
    Is = (params.i_min, params.i_max, params.i_max, params.i_min)
    return np.array(Ts, dtype=float), np.array(Is, dtype=float)


def hull_residuals(region, T, h, q):
    """Power-space distance from surface samples to the corner-point hull.

    For each sample the hull is cut at the sample temperature, which leaves a
    parallelogram in the (hydrogen, heat) plane; the distance to it is found
    by a two-variable bounded least-squares problem.
    """
    T = np.atleast_1d(np.asarray(T, dtype=float)).ravel()
    h = np.atleast_1d(np.asarray(h, dtype=float)).ravel()
    q = np.atleast_1d(np.asarray(q, dtype=float)).ravel()
    t_lo, t_hi = region.temperature[0], region.temperature[2]
    pts = np.column_stack([region.hydrogen_power, region.heat_power])
    A, B, C, D = pts
    out = np.empty(T.size)
    for n in range(T.size):
        w = (T[n] - t_lo) / (t_hi - t_lo)
        # (1-w)(A + a(B-A)) + w(D + b(C-D))
        base = (1 - w) * A + w * D
        M = np.column_stack([(1 - w) * (B - A), w * (C - D)])
        rhs = np.array([h[n], q[n]]) - base
        if np.allclose(M, 0.0):
            out[n] = np.linalg.norm(rhs)
            continue
        res = lsq_linear(M, rhs, bounds=(0.0, 1.0), method="bvls")
        out[n] = np.linalg.norm(M @ res.x - rhs)
    return out


def build_cell_region(params, tolerance=0.02, n_check=41):
    """Corner points of the (T, hydrogen power, heat power) hull.

    The hull approximation error over an ``n_check`` x ``n_check`` sample of
    the true surface is stored on the region, relative to the largest corner
    power, and a warning is logged if it exceeds ``tolerance``.
    """
    if params.t_min == params.t_max or params.i_min == params.i_max:
        raise ConfigurationError("degenerate (T, i) box", "cell")
    Ts, Is = _corner_grid(params)
    current = Is * params.area
    u_cell = np.array([_cell_voltage(i, t, params) for i, t in zip(Is, Ts)])
    u_tn = np.array([_thermal_neutral_voltage(t, params) for t in Ts])
    p = u_cell * current * W_TO_MW
    h = u_tn * current * W_TO_MW
    region = CellOperatingRegion(Ts, Is, h, p - h, tolerance=tolerance)

    TT, _, pp, hh, qq = power_split_grid(params, n_check, n_check)
    dist = hull_residuals(region, TT, hh, qq)
    rel = float(dist.max() / p.max())
    if rel > tolerance:
        logger.warning("T-H-H hull residual %.4f exceeds tolerance %.4f", rel, tolerance)
    return replace(region, max_residual=rel)


def default_big_m(params):
    """Largest single-cell power in MW, attained at (i_max, T_min)."""
    return params.i_max * _cell_voltage(params.i_max, params.t_min, params) * params.area * W_TO_MW
