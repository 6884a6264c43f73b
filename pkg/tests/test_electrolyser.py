import math
from dataclasses import replace

import numpy as np
import pytest

from iesflex.electrolyser import (CellParameters, build_cell_region, cell_power_split,
                                  cell_voltage, default_big_m, hull_residuals, power_split_grid,
                                  reversible_voltage, thermal_neutral_voltage, thh_residual)
from iesflex.exceptions import ConfigurationError, DomainError, RegionError

P = CellParameters()


def test_zero_current_gives_reversible_voltage():
    for T in (45.0, 60.0, 70.0, 80.0, 95.0):
        assert cell_voltage(0.0, T, P) == pytest.approx(reversible_voltage(T, P), abs=1e-15)


def test_voltage_rises_with_current_and_falls_with_temperature():
    assert cell_voltage(0.4, 70, P) > cell_voltage(0.2, 70, P)
    assert cell_voltage(0.3, 80, P) < cell_voltage(0.3, 60, P)


def test_voltage_monotone_in_current_by_finite_differences():
    for T in np.linspace(60, 80, 21):
        i = np.arange(0.2, 0.4, 1e-4)
        u = np.array([cell_voltage(x, T, P) for x in i])
        assert np.all(np.diff(u) > 0)


def test_voltage_domain_errors():
    with pytest.raises(DomainError):
        cell_voltage(float("nan"), 70, P)
    with pytest.raises(DomainError):
        cell_voltage(-0.1, 70, P)
    with pytest.raises(DomainError):
        cell_voltage(0.3, 150, P)


def test_thermal_neutral_voltage_reference():
    # enthalpy of liquid water splitting over two Faradays
    assert thermal_neutral_voltage(25.0, P) == pytest.approx(285840.0 / (2 * 96485.33212), abs=1e-12)
    assert thermal_neutral_voltage(25.0, P) == pytest.approx(1.4813, abs=5e-5)


def test_thermal_neutral_voltage_nearly_constant():
    u60, u80 = thermal_neutral_voltage(60, P), thermal_neutral_voltage(80, P)
    assert abs(u80 - u60) / u60 <= 0.0044


def test_electrolysis_exothermic_over_box():
    for T in np.arange(60.0, 80.0 + 1e-9, 1.0):
        assert thermal_neutral_voltage(T, P) < cell_voltage(P.i_min, T, P)


def test_power_split_identity_and_ratio_bands():
    TT, II, p, h, q = power_split_grid(P, 41, 41)
    assert np.max(np.abs(p - h - q)) <= 1e-15
    assert np.all(q >= 0)
    assert 0.18 <= (q / p).min() and (q / p).max() <= 0.26
    assert 0.74 <= (h / p).min() and (h / p).max() <= 0.82


def test_power_split_point():
    pt = cell_power_split(0.3, 70, P)
    assert pt.power - pt.hydrogen_power - pt.heat_power == pytest.approx(0.0, abs=1e-18)
    current = 0.3 * P.area
    assert pt.power == pytest.approx(cell_voltage(0.3, 70, P) * current * 1e-6, rel=1e-14)
    with pytest.raises(RegionError):
        cell_power_split(0.5, 70, P)
    with pytest.raises(RegionError):
        cell_power_split(0.3, 55, P)


def test_region_corners_and_area_scaling():
    reg = build_cell_region(P)
    assert list(zip(reg.temperature, reg.current_density)) == [
        (60.0, 0.2), (60.0, 0.4), (80.0, 0.4), (80.0, 0.2)]
    big = build_cell_region(replace(P, area=2 * P.area))
    np.testing.assert_allclose(big.hydrogen_power, 2 * reg.hydrogen_power, rtol=1e-14)
    np.testing.assert_allclose(big.heat_power, 2 * reg.heat_power, rtol=1e-14)
    np.testing.assert_array_equal(big.temperature, reg.temperature)


def test_region_hull_residual_within_tolerance():
    reg = build_cell_region(P)
    assert reg.within_tolerance
    # independent brute-force projection onto a dense grid of the hull at each T
    TT, _, pp, hh, qq = power_split_grid(P, 9, 9)
    a = np.linspace(0, 1, 201)
    A, B, C, D = np.column_stack([reg.hydrogen_power, reg.heat_power])
    worst = 0.0
    for T, h, q in zip(TT.ravel(), hh.ravel(), qq.ravel()):
        w = (T - 60.0) / 20.0
        left = (1 - w) * (A[None] + a[:, None] * (B - A))
        right = w * (D[None] + a[:, None] * (C - D))
        cloud = (left[:, None, :] + right[None, :, :]).reshape(-1, 2)
        worst = max(worst, np.min(np.hypot(cloud[:, 0] - h, cloud[:, 1] - q)))
    assert worst / reg.power.max() <= reg.tolerance
    fast = hull_residuals(reg, TT, hh, qq).max()
    assert fast <= worst + 1e-9


def test_hull_combinations_non_negative(rng):
    reg = build_cell_region(P)
    w = rng.dirichlet(np.ones(4), size=1000)
    assert np.all(w @ reg.hydrogen_power >= 0)
    assert np.all(w @ reg.heat_power >= 0)


def test_degenerate_box_rejected():
    with pytest.raises(ConfigurationError):
        build_cell_region(replace(P, t_max=60.0))


def test_thh_residual_round_trip_and_affinity():
    for i, T in ((0.2, 60), (0.33, 71.5), (0.4, 80)):
        pt = cell_power_split(i, T, P)
        r = thh_residual(pt.hydrogen_power, pt.heat_power, T, P)
        assert abs(r) <= 1e-9 * pt.heat_power
        up = thh_residual(pt.hydrogen_power, 1.01 * pt.heat_power, T, P)
        assert up == pytest.approx(0.01 * pt.heat_power, rel=1e-6)
    with pytest.raises(DomainError):
        thh_residual(0.0, 0.1, 70, P)


def test_corner_residuals_vanish():
    reg = build_cell_region(P)
    for k in range(4):
        r = thh_residual(reg.hydrogen_power[k], reg.heat_power[k], reg.temperature[k], P)
        assert abs(r) <= 1e-9 * reg.heat_power[k]


def test_default_big_m_is_largest_cell_power():
    _, _, p, _, _ = power_split_grid(P, 41, 41)
    assert default_big_m(P) == pytest.approx(p.max(), rel=1e-12)
    assert math.isclose(default_big_m(P), build_cell_region(P).power.max(), rel_tol=1e-12)
