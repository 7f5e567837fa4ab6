import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jamming.fluid import (OdeSettings, er_beta_closed_form, er_error_bound, er_fluid_closed_form,
                           er_gamma, er_jamming_stats, er_variance_closed_form, hitting_variance,
                           integrate_fluid, integrate_until, integrate_variance, small_c_expansion)


def test_zero_drift_gives_identity():
    curve = integrate_fluid(lambda z: 0.0)
    assert curve.hitting_time == pytest.approx(1.0, abs=1e-12)
    t = np.linspace(0, 0.99, 50)
    assert np.allclose(curve(t), t, atol=1e-12)


def test_constant_drift_doubles_slope():
    curve = integrate_fluid(lambda z: 1.0)
    assert curve.hitting_time == pytest.approx(0.5, abs=1e-12)
    assert curve(0.25) == pytest.approx(0.5)


def test_negative_gamma_rejected():
    with pytest.raises(ValueError, match="nonnegative"):
        integrate_fluid(lambda z: z - 0.5)


def test_invalid_settings_rejected():
    with pytest.raises(ValueError):
        OdeSettings(h=0)


@pytest.mark.parametrize("c", [0.5, 1.0, 1.4, 2.0])
def test_er_fluid_matches_closed_form(c):
    curve = integrate_fluid(er_gamma(c))
    assert np.max(np.abs(curve.values - er_fluid_closed_form(c, curve.grid))) <= 1e-8
    T_star, _ = er_jamming_stats(c)
    assert curve.hitting_time == pytest.approx(T_star, abs=1e-8)


def test_closed_form_special_values():
    assert er_fluid_closed_form(1.0, 0.0) == 0.0
    assert er_fluid_closed_form(1.0, math.log(2)) == pytest.approx(1.0)
    assert er_fluid_closed_form(0.0, 0.5) == 0.5
    assert er_fluid_closed_form(1e-9, 0.5) == pytest.approx(0.5, abs=1e-8)


def test_jamming_stats_values():
    T, s2 = er_jamming_stats(1.0)
    assert T == pytest.approx(0.693147, abs=1e-6) and s2 == 0.125
    assert er_jamming_stats(1.4)[0] == pytest.approx(0.625335, abs=1e-6)
    assert er_jamming_stats(0.0) == (1.0, 0.0)
    T, s2 = er_jamming_stats(1e-8)
    assert T == pytest.approx(1.0, abs=1e-7) and s2 < 1e-8


@given(st.floats(0.01, 10.0))
@settings(max_examples=40, deadline=None)
def test_closed_form_hits_one_at_jamming_constant(c):
    T, _ = er_jamming_stats(c)
    assert er_fluid_closed_form(c, T) == pytest.approx(1.0, abs=1e-12)
    assert er_fluid_closed_form(c, 0.9 * T) < 1.0


@pytest.mark.parametrize("c", [0.5, 1.0, 1.4, 2.0])
def test_variance_matches_closed_form(c):
    vc = integrate_variance(c)
    assert np.max(np.abs(vc.m_values - er_variance_closed_form(c, vc.grid))) <= 1e-8
    assert np.max(np.abs(vc.beta_values - er_beta_closed_form(c, vc.grid))) <= 1e-8


def test_variance_at_endpoints():
    vc = integrate_variance(1.0)
    assert vc.m(0.0) == 0.0
    assert vc.m_values[-1] == pytest.approx(0.125, abs=1e-8)
    # m(T*) / (1 - gamma(1))^2 with gamma(1) = 0 reproduces sigma^2
    assert hitting_variance(vc.m_values[-1]) == pytest.approx(er_jamming_stats(1.0)[1], abs=1e-8)


def test_hitting_variance_warns_off_the_validated_case():
    with pytest.warns(UserWarning):
        hitting_variance(0.1, 0.5)


def test_rk4_is_fourth_order():
    # z' = 1 + c(1 - z) at a coarse step; halving h cuts the error ~16x
    c = 1.0

    def rhs(t, y):
        return (1.0 + c * (1.0 - y[0]),)

    def err(h):
        sol = integrate_until(rhs, [0.0], OdeSettings(h=h, t_max=0.5), level=10.0)
        return abs(sol.states[-1, 0] - er_fluid_closed_form(c, sol.grid[-1]))

    ratio = err(0.05) / err(0.025)
    assert 14 < ratio < 18


def test_error_bound_arithmetic():
    rep = er_error_bound(10_000, 1.0, 1.0)
    assert rep.omega_N == pytest.approx((1e-4 + 2e-4 + 2 * 0.01) * math.e)
    assert rep.omega_N == pytest.approx(0.0552, abs=1e-4)
    assert rep.deviation_bound(0.1) == pytest.approx(20 * rep.omega_N)


def test_error_bound_vanishes():
    values = [er_error_bound(n, 1.0, 1.0).omega_N for n in (10**2, 10**4, 10**6, 10**8)]
    assert all(a > b for a, b in zip(values, values[1:]))
    assert values[-1] < 1e-3


def test_small_c_expansion():
    assert small_c_expansion(0.0, 0.3) == pytest.approx(0.3)
    assert small_c_expansion(1.0, 0.0) == 0.0
    assert small_c_expansion(0.01, 0.5) == pytest.approx(0.50375)
