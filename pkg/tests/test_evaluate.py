import copy
import math
import re

import numpy as np
import pytest

from iesflex.exceptions import ConfigurationError, DimensionError, SolutionLoadError
from iesflex.evaluate import (apply_policy, chance_violation, day_covariances, kpi_report,
                              load_solution, nominal_dispatch, profit_distribution,
                              sample_errors, two_point_worst_case, violation_report,
                              write_chp_points, write_temperature_paths)


def test_zero_error_reproduces_nominal(small_solved):
    pol, inst = small_solved.policy, small_solved.inst
    d = nominal_dispatch(pol, inst)
    for base in ("grid_import", "boiler_power", "h2_mass", "tank_level"):
        np.testing.assert_array_equal(d.values[base][0], pol.nominal[base])
    np.testing.assert_array_equal(d.values["chp_weight"][0], pol.nominal["chp_weight"])
    # nominal temperatures satisfy the exact recursion
    assert d.temperature_deviation.max() <= 1e-9


def test_balances_hold_for_every_sample(small_solved):
    d = apply_policy(small_solved.policy, small_solved.errors, small_solved.inst)
    assert np.abs(d.power_residual).max() <= 1e-9
    assert np.abs(d.heat_residual).max() <= 1e-9
    assert d.stack_residual.max() <= 1e-9


def test_single_sample_shape_and_dimension_check(small_solved):
    inst = small_solved.inst
    d = apply_policy(small_solved.policy, small_solved.errors[0], inst)
    assert d.power_residual.shape == (1, 1, 4)
    with pytest.raises(DimensionError):
        apply_policy(small_solved.policy, np.zeros((2, 1, 5, 2)), inst)


def test_realization_depends_on_aggregate_only(small_solved, rng):
    inst = small_solved.inst
    a = rng.normal(scale=0.005, size=(1, 1, 4, 2))
    b = a.copy()
    b[..., 0] += 0.003
    b[..., 1] -= 0.003
    da = apply_policy(small_solved.policy, a, inst)
    db = apply_policy(small_solved.policy, b, inst)
    for k in da.values:
        np.testing.assert_allclose(da.values[k], db.values[k], rtol=0, atol=1e-15)
    np.testing.assert_allclose(da.temperature_exact, db.temperature_exact, atol=1e-12)


def test_zero_covariance_never_violates(small_solved):
    inst = small_solved.inst
    rep = violation_report(small_solved.policy, np.zeros((20, 1, 4, 2)), inst)
    assert rep.fraction == 0.0 and rep.n_samples == 20


def test_constructed_breach_always_counted(small_solved, rng):
    inst = small_solved.inst
    pol = copy.deepcopy(small_solved.policy)
    # boiler follows the wind error one-for-one: any shortfall drives it negative
    pol.nominal["boiler_power"][:] = 0.0
    pol.response["boiler_power"][:] = 1.0
    w = -np.abs(rng.normal(0.01, 0.002, size=(30, 1, 4, 2)))
    rep = violation_report(pol, w, inst)
    assert rep.fraction == 1.0
    assert rep.histogram["boiler.power_nonneg"] == 30


def test_report_csv(small_solved, tmp_path):
    rep = violation_report(small_solved.policy, small_solved.errors, small_solved.inst)
    text = open(rep.to_csv(str(tmp_path / "v.csv"), ["hdr"])).read()
    assert text.startswith("# hdr\ncheck,violated_samples,fraction\nany,")
    assert "any_with_exact_paths" in text


def test_profit_identity_and_prices(small_solved):
    pol, inst = small_solved.policy, small_solved.inst
    d = apply_policy(pol, small_solved.errors, inst)
    rep = profit_distribution(pol, d, inst)
    assert rep.check_identity()
    assert set(rep.items) == {"wind", "chp", "investor"}
    with pytest.raises(ConfigurationError):
        profit_distribution(pol, d, inst, electricity_price=-1.0)


def test_no_wind_no_wind_profit(small_solved):
    pol, inst = small_solved.policy, small_solved.inst
    w = -inst.moments.mean[None]
    d = apply_policy(pol, w, inst)
    assert np.abs(d.wind).max() <= 1e-15
    assert profit_distribution(pol, d, inst).wind == pytest.approx(0.0, abs=1e-9)


def test_kpi_sign_convention(small_solved):
    pol, inst = small_solved.policy, small_solved.inst
    d = apply_policy(pol, small_solved.errors, inst)
    kpi = kpi_report(pol, d, inst)
    grid = d.values["grid_import"]
    k = inst.days.weights
    inv = np.mean([sum(k[r] * max(-g, 0.0) for r in range(grid.shape[1]) for g in grid[s, r])
                   for s in range(grid.shape[0])])
    assert kpi.inverse_flow == pytest.approx(inv, rel=1e-12)
    assert kpi.inverse_flow >= 0 and kpi.imported >= 0


def test_chp_points_inside_region_when_on(desk_solution):
    pol, inst = desk_solution.policy, desk_solution.inst
    kpi = kpi_report(pol, nominal_dispatch(pol, inst), inst)
    on = pol.on.ravel().astype(bool)
    assert on.any()
    for (p, q), u in zip(kpi.chp_points, on):
        if u:
            assert inst.chp.contains(p, q, 1e-7)
        else:
            assert abs(p) <= 1e-7 and abs(q) <= 1e-7


def test_output_tables(small_solved, tmp_path):
    pol, inst = small_solved.policy, small_solved.inst
    d = apply_policy(pol, small_solved.errors, inst)
    kpi = kpi_report(pol, d, inst)
    lines = open(write_chp_points(kpi, str(tmp_path / "c.csv"))).read().splitlines()
    assert lines[0] == "point,electric_MW,heat_MW" and len(lines) == 1 + 4
    lines = open(write_temperature_paths(d, str(tmp_path / "t.csv"))).read().splitlines()
    assert len(lines) == 1 + 4 and lines[1].startswith("0,0,80.0,80.0,80.0")


def test_solution_round_trip(small_solved, tmp_path):
    pol, inst = small_solved.policy, small_solved.inst
    path = pol.to_csv(str(tmp_path / "s.csv"), ["hdr"])
    back = load_solution(path, inst)
    assert back.capacities == pol.capacities
    for k in pol.nominal:
        np.testing.assert_array_equal(back.nominal[k], pol.nominal[k])
        np.testing.assert_array_equal(back.response[k], pol.response[k])
    assert back.objective == pol.objective


def test_solution_load_errors(small_solved, tmp_path):
    pol, inst = small_solved.policy, small_solved.inst
    path = pol.to_csv(str(tmp_path / "s.csv"))
    with pytest.raises(SolutionLoadError):
        load_solution(str(tmp_path / "nope.csv"))
    text = open(path).read()
    (tmp_path / "nodims.csv").write_text("\n".join(l for l in text.splitlines() if "dims" not in l))
    with pytest.raises(SolutionLoadError):
        load_solution(str(tmp_path / "nodims.csv"))
    lines = text.splitlines()
    (tmp_path / "short.csv").write_text("\n".join(l for l in lines if not l.startswith('"grid_import[')))
    with pytest.raises(SolutionLoadError):
        load_solution(str(tmp_path / "short.csv"))
    (tmp_path / "frac.csv").write_text(re.sub(r"\nn_cells,[^\n]*", "\nn_cells,1.5", text))
    with pytest.raises(SolutionLoadError):
        load_solution(str(tmp_path / "frac.csv"))
    from iesflex.desk import desk_instance
    other, _ = desk_instance(n_days=1, n_hours=5, n_scenarios=20)
    with pytest.raises(DimensionError):
        load_solution(path, other)


def test_sample_errors_covariance():
    cov = np.array([[[0.04, 0.01, 0.0], [0.01, 0.03, 0.0], [0.0, 0.0, 0.01]]])
    for kind in ("gaussian", "uniform", "student_t"):
        w = sample_errors(cov, 40000, kind=kind, seed=4, df=7.0)
        emp = day_covariances(w[:, :, :, None].reshape(40000, 1, 3, 1))
        assert np.linalg.norm(emp[0] - cov[0]) / np.linalg.norm(cov[0]) <= 0.05, kind
    with pytest.raises(ConfigurationError):
        sample_errors(cov, 0)
    with pytest.raises(ConfigurationError):
        sample_errors(cov, 10, kind="student_t", df=4.0)


def test_student_t_excess_kurtosis():
    w = sample_errors(np.ones((1, 1, 1)), 400000, kind="student_t", seed=2, df=10.0)[:, 0, 0]
    kurt = np.mean(w ** 4) / np.mean(w ** 2) ** 2 - 3
    assert kurt == pytest.approx(6 / (10 - 4), rel=0.15)


def test_two_point_law_attains_bound():
    cov = np.array([[0.04, 0.01], [0.01, 0.09]])
    a = np.array([1.0, -0.5])
    sigma = math.sqrt(a @ cov @ a)
    eps = 0.05
    b = sigma * math.sqrt((1 - eps) / eps)
    w = two_point_worst_case(cov, a, b, 200000, seed=1)
    np.testing.assert_allclose(np.cov(w.T), cov, rtol=0.05, atol=2e-3)
    assert np.mean(w @ a >= b * (1 - 1e-9)) == pytest.approx(eps, abs=0.003)


def test_chance_violation_below_epsilon(desk_solution):
    prog, x = desk_solution.prog, desk_solution.x
    eps = desk_solution.inst.params.epsilon
    for rec in prog.chance[::5]:
        samples = np.random.default_rng(0).multivariate_normal(
            np.zeros(rec.covariance.shape[0]), rec.covariance, size=4000, method="eigh")
        assert chance_violation(rec, x, samples) <= eps + 0.01
