import itertools
from collections import Counter
from dataclasses import replace

import numpy as np
import pytest

from iesflex.desk import DESK_CHP, DESK_PARAMETERS, desk_days, desk_instance, desk_scenarios
from iesflex.electrolyser import CellParameters, build_cell_region, thermal_neutral_voltage
from iesflex.exceptions import ConfigurationError
from iesflex.ies_model import (DETERMINISTIC, DRCC, STACK_PRODUCT, STOCHASTIC_EQ, ChpRegion,
                               DecisionSchema, IesParameters, Lin, build_commitment_constraints,
                               build_instance, build_model, build_stochastic_constraints,
                               variable_count)
from iesflex.scenarios import estimate_moments


REGION = build_cell_region(CellParameters())


def _instance(n_days=2, n_hours=6, **kw):
    params = IesParameters.from_dict({**DESK_PARAMETERS, **kw})
    scen = desk_scenarios(50, 0, n_days, n_hours)
    return build_instance(params, ChpRegion.from_dict(DESK_CHP), REGION,
                          desk_days(n_days, n_hours), estimate_moments(scen))


def test_instance_echo():
    inst = _instance(2, 6)
    assert (inst.n_days, inst.n_hours, inst.n_plants) == (2, 6, 2)


def test_instance_validation():
    params = IesParameters.from_dict(DESK_PARAMETERS)
    scen = desk_scenarios(50, 0, 2, 6)
    args = (params, ChpRegion.from_dict(DESK_CHP), REGION,
            desk_days(2, 6), estimate_moments(scen))
    with pytest.raises(ConfigurationError):
        build_instance(*args, initial_temperature=90.0)
    with pytest.raises(ConfigurationError):
        build_instance(params, args[1], args[2], desk_days(2, 8), args[4])
    with pytest.raises(ConfigurationError):
        IesParameters.from_dict({**DESK_PARAMETERS, "epsilon": 0.0})
    with pytest.raises(ConfigurationError):
        IesParameters.from_dict({**DESK_PARAMETERS, "converter_efficiency": 1.2})


def test_chp_region_must_be_convex():
    with pytest.raises(ConfigurationError):
        ChpRegion.from_dict({"power": [0, 1, 0, 1], "heat": [0, 1, 1, 0], "cost": [1, 1, 1, 1]})
    reg = ChpRegion.from_dict(DESK_CHP)
    assert reg.contains(0.03, 0.01)
    assert not reg.contains(0.07, 0.0)


def _commitment_feasible(u, up, down):
    """Brute-force check of the commitment rows for one binary pattern."""
    T = len(u)
    inst = _instance(1, T, min_up=up, min_down=down)
    cons = build_commitment_constraints(inst)
    su = [int(u[0] == 1)] + [int(u[t] == 1 and u[t - 1] == 0) for t in range(1, T)]
    sd = [0] + [int(u[t] == 0 and u[t - 1] == 1) for t in range(1, T)]
    vals = {}
    for t in range(T):
        vals[DecisionSchema.name("chp_on", 0, t)] = u[t]
        vals[DecisionSchema.name("chp_start", 0, t)] = su[t]
        vals[DecisionSchema.name("chp_stop", 0, t)] = sd[t]
    return all(c.expr.evaluate(vals) <= 1e-12 for c in cons), su, sd


def test_commitment_example_pattern():
    ok, su, sd = _commitment_feasible((0, 1, 1, 0), 2, 2)
    assert ok and su == [0, 1, 0, 0] and sd == [0, 0, 0, 1]


def test_first_hour_on_forces_start():
    inst = _instance(1, 4)
    first = [c for c in build_commitment_constraints(inst) if c.template == "chp.start_first_hour"]
    vals = {DecisionSchema.name("chp_on", 0, 0): 1, DecisionSchema.name("chp_start", 0, 0): 0}
    assert first[0].expr.evaluate(vals) > 0


def test_min_up_rejects_single_hour():
    ok, _, _ = _commitment_feasible((0, 1, 0, 0), 3, 1)
    assert not ok


def _runs_ok(u, up, down):
    """Independent statement of the windows: a run that starts inside the
    horizon must last ``up`` (``down``) hours or reach the horizon end."""
    T = len(u)
    for t in range(T):
        started = u[t] == 1 and (t == 0 or u[t - 1] == 0)
        stopped = t > 0 and u[t] == 0 and u[t - 1] == 1
        if started and not all(u[k] == 1 for k in range(t, min(T, t + up))):
            return False
        if stopped and not all(u[k] == 0 for k in range(t, min(T, t + down))):
            return False
    return True


@pytest.mark.parametrize("up,down", [(1, 1), (2, 2), (3, 1), (2, 3)])
def test_commitment_matches_window_oracle(up, down):
    for u in itertools.product((0, 1), repeat=5):
        ok, _, _ = _commitment_feasible(u, up, down)
        assert ok == _runs_ok(u, up, down), u


def test_hydrogen_yield_coefficient():
    inst = _instance(1, 2)
    u_tn = thermal_neutral_voltage(CellParameters().t_ref, CellParameters())
    assert inst.hydrogen_yield == pytest.approx(3.6e6 / (u_tn * 96485.33212), rel=1e-12)
    assert inst.hydrogen_yield == pytest.approx(25.19, abs=0.01)
    cons = build_stochastic_constraints(inst)
    h2 = [c for c in cons if c.template == "p2hh.h2_mass"][0]
    hs = DecisionSchema.name("stack_h2_power_resp", 0, 0)
    nh = DecisionSchema.name("h2_mass_resp", 0, 0)
    assert h2.factor.terms[nh] == 1.0
    assert h2.factor.terms[hs] == pytest.approx(-inst.hydrogen_yield, rel=1e-15)


def test_tank_rows_on_two_hour_day():
    inst = _instance(1, 2)
    tags = Counter(c.template for c in build_stochastic_constraints(inst))
    assert tags["tank.first_hour"] == 1
    assert tags["tank.step"] == 1


def _closed_form_counts(R, T, N, up, down):
    """Expected constraint counts per kind, derived template by template."""
    eq_day = 11 * T + (T - 1)
    drcc_day = 21 * T + 1 + 2 * (T - 1) + 2 * (T - 1) + 2 + 1

    def rest(v):
        return sum(min(T - 1, t + v - 1) - t for t in range(1, T - 1))
    # the plant is off before hour 0, so only the up window has a first-hour row
    comm_day = 1 + 2 * (T - 1) + min(T - 1, up - 1) + rest(up) + rest(down)
    facility = 1 + 2 * N + 8 + 6 * R * T
    return {STOCHASTIC_EQ: R * eq_day, DRCC: R * drcc_day, STACK_PRODUCT: 6 * R * T,
            DETERMINISTIC: facility + R * comm_day}


@pytest.mark.parametrize("R,T,up,down", [(1, 4, 2, 2), (2, 6, 3, 2), (2, 8, 2, 2)])
def test_counts_match_closed_form(R, T, up, down):
    inst = _instance(R, T, min_up=up, min_down=down)
    sch, cons = build_model(inst)
    got = Counter(c.kind for c in cons)
    assert dict(got) == _closed_form_counts(R, T, inst.params.n_bits, up, down)
    per_hour = 2 * (12 + 8) + 3 + 1 + 6 * inst.params.n_bits
    assert len(sch) == variable_count(inst) == 5 + inst.params.n_bits + R * T * per_hour + 2 * R * (T - 1)


def test_symbol_closure():
    inst = _instance(1, 4)
    sch, cons = build_model(inst)
    for c in cons:
        assert c.symbols() <= set(sch.names), c.tag


def test_tags_unique():
    inst = _instance(2, 4)
    sch, cons = build_model(inst)
    tags = [c.tag for c in cons]
    assert len(tags) == len(set(tags))


def test_lin_arithmetic():
    a = Lin.var("x", 2.0) + 3.0
    b = (a - Lin.var("x")) * 2
    assert b.evaluate({"x": 1.5}) == pytest.approx(9.0)
    assert (b - b).clean().is_constant()


def test_params_round_trip():
    p = IesParameters.from_dict(DESK_PARAMETERS)
    assert IesParameters.from_dict(p.to_dict()) == p
    assert replace(p, epsilon=0.1).epsilon == 0.1


def test_desk_instance_forecast_profile():
    inst, scen = desk_instance(n_days=1, n_hours=4, n_scenarios=30)
    assert scen.shape == (30, 1, 4, 2)
    np.testing.assert_allclose(inst.moments.mean, scen.wind.mean(axis=0))
