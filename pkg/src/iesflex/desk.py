"""
Small synthetic instance for tests, examples and the acceptance suite.

Two representative days of eight hours, two wind plants, a CHP plant of
about 60 kW and electrolysis cells of about 2 kW.  Wind output exceeds the
electric demand around midday so a CHP-only system exports power to the
transmission grid.
"""

from __future__ import annotations

import os

import numpy as np

from .electrolyser import CellParameters, build_cell_region
from .ies_model import ChpRegion, IesParameters, build_instance
from .scenarios import RepresentativeDaySet, ScenarioSet, estimate_moments, write_demand_csv

DESK_CHP = {
    "power": [0.010, 0.060, 0.050, 0.015],
    "heat": [0.000, 0.000, 0.050, 0.030],
    "cost": [0.35, 2.10, 3.50, 1.60],
}

DESK_PARAMETERS = {
    "cell_cost": 150.0,
    "converter_cost": 1.0e4,
    "compressor_cost": 200.0,
    "tank_cost": 5.0,
    "boiler_cost": 5.0e3,
    "startup_cost": 2.0,
    "shutdown_cost": 1.0,
    "transmission_cost": 2.0e3,
    "hydrogen_price": 3.0,
    "converter_efficiency": 0.95,
    "boiler_efficiency": 0.99,
    "compressor_energy": 1.0e-3,
    "ramp_up": 0.03,
    "ramp_down": 0.03,
    "startup_ramp": 0.04,
    "shutdown_ramp": 0.04,
    "min_up": 2,
    "min_down": 2,
    "heat_capacity": 3.0e-5,
    "thermal_resistance": 2.5e5,
    "ambient_temperature": 20.0,
    "tank_max": 50.0,
    "epsilon": 0.05,
    "n_bits": 4,
    "big_m_response": 1.0,
    "converter_max": 1.0,
    "compressor_max": 10.0,
    "boiler_max": 1.0,
}

# hourly shapes over an 8-hour day (every third hour of a calendar day)
_ELECTRIC = np.array([[0.030, 0.028, 0.040, 0.050, 0.045, 0.050, 0.060, 0.045],
                      [0.035, 0.030, 0.045, 0.055, 0.050, 0.055, 0.065, 0.050]])
_HEAT = np.array([[0.035, 0.038, 0.030, 0.022, 0.020, 0.025, 0.032, 0.036],
                  [0.040, 0.042, 0.035, 0.028, 0.025, 0.030, 0.038, 0.040]])
_WIND = np.array([[[0.030, 0.020], [0.035, 0.025], [0.045, 0.035], [0.060, 0.045],
                   [0.065, 0.050], [0.055, 0.045], [0.040, 0.030], [0.035, 0.025]],
                  [[0.020, 0.015], [0.025, 0.020], [0.035, 0.025], [0.045, 0.035],
                   [0.050, 0.040], [0.045, 0.035], [0.030, 0.025], [0.025, 0.020]]])
_WEIGHTS = np.array([180.0, 185.0])


def desk_scenarios(n_scenarios=200, seed=0, n_days=2, n_hours=8, rel_std=0.12, rho=0.9,
                   plant_corr=0.5):
    """AR(1) wind errors around the forecast shapes, clipped at zero."""
    rng = np.random.default_rng(seed)
    forecast = _WIND[:n_days, :n_hours]
    Z = forecast.shape[2]
    mix = np.linalg.cholesky(np.full((Z, Z), plant_corr) + (1 - plant_corr) * np.eye(Z))
    err = np.empty((n_scenarios, n_days, n_hours, Z))
    shocks = rng.standard_normal((n_scenarios, n_days, n_hours, Z)) @ mix.T
    err[:, :, 0] = shocks[:, :, 0]
    for t in range(1, n_hours):
        err[:, :, t] = rho * err[:, :, t - 1] + np.sqrt(1 - rho ** 2) * shocks[:, :, t]
    wind = forecast[None] * (1.0 + rel_std * err)
    return ScenarioSet(np.clip(wind, 0.0, None))


def desk_days(n_days=2, n_hours=8):
    return RepresentativeDaySet(_ELECTRIC[:n_days, :n_hours].copy(), _HEAT[:n_days, :n_hours].copy(),
                                _WEIGHTS[:n_days].copy())


def desk_instance(n_days=2, n_hours=8, n_scenarios=200, seed=0, epsilon=0.05, **overrides):
    """Return ``(instance, scenarios)`` of the desk case."""
    kw = dict(DESK_PARAMETERS, epsilon=epsilon)
    kw.update(overrides)
    params = IesParameters.from_dict(kw)
    cell_params = CellParameters()
    region = build_cell_region(cell_params)
    scen = desk_scenarios(n_scenarios, seed, n_days, n_hours)
    moments = estimate_moments(scen)
    inst = build_instance(params, ChpRegion.from_dict(DESK_CHP), region, desk_days(n_days, n_hours),
                          moments, 80.0, cell_params)
    return inst, scen


def write_desk_fixture(directory, n_scenarios=200, seed=0, n_days=2, n_hours=8):
    """Write parameter YAML, demand CSV and wind CSV for the CLI."""
    import yaml

    os.makedirs(directory, exist_ok=True)
    days = desk_days(n_days, n_hours)
    scen = desk_scenarios(n_scenarios, seed, n_days, n_hours)
    demand = os.path.join(directory, "demand.csv")
    wind = os.path.join(directory, "wind.csv")
    params = os.path.join(directory, "parameters.yaml")
    # one calendar day per representative day, repeated by weight is not needed:
    # the demand file lists representative days directly
    write_demand_csv(demand, days.electric, days.heat)
    scen.to_csv(wind)
    with open(params, "w") as fh:
        yaml.safe_dump({"parameters": DESK_PARAMETERS, "chp": DESK_CHP,
                        "day_weights": [float(w) for w in days.weights],
                        "initial_temperature": 80.0}, fh, sort_keys=True)
    return {"parameters": params, "demand": demand, "wind": wind}
