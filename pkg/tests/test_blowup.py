"""Origin blow-up charts: translate/sqrt/polar fields and the circle analysis."""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest

from sl2flow import (
    BlowupPoint,
    Chart,
    CircleKind,
    PlanarPoint,
    axis_nonapproach_check,
    circle_angular_rate,
    circle_dtheta,
    circle_equilibria,
    circle_radial_rate,
    planar_field,
    polar_field_X,
    polar_field_Y,
    sqrt_chart_field,
    translate_field,
)

from conftest import ulps

THETA3 = math.acos(1.0 / math.sqrt(3.0))


def _translate_exact(a: Fraction, e: Fraction) -> tuple[Fraction, Fraction]:
    da = -a * (a + 1) * (a + e) * (3 * e * e + 4 * e + 2 * a * e - a * a)
    de = e * (e + 1) * (a + e + 2) * (e * e - 2 * a * e - 4 * a - 3 * a * a)
    return da, de


def test_translate_field_matches_exact_rational_oracle():
    rng = np.random.default_rng(41)
    for _ in range(150):
        a = float(rng.integers(1, 200)) / 64.0
        e = float(rng.integers(-60, 200)) / 64.0
        got = translate_field(a, e)
        want = _translate_exact(Fraction(a), Fraction(e))
        scale = max(1.0, (abs(a) + abs(e) + 2.0) ** 4)
        for g, w in zip(got, want):
            assert abs(g - float(w)) <= 1e-12 * scale


def test_translate_field_frozen_value_and_exact_zero_factors():
    assert translate_field(1.0, 1.0) == (-32.0, -64.0)
    assert translate_field(0.0, 0.7)[0] == 0.0
    assert translate_field(0.5, -0.5)[0] == 0.0  # a + e = 0 exactly
    assert translate_field(0.3, 0.0)[1] == 0.0


def test_translate_field_is_the_chart_field_shifted():
    # translated coordinates: e = c - 1; dyadic c keeps the shift exact
    for a, c in ((0.5, 1.5), (0.25, 0.75), (1.5, 0.5), (2.0, 3.0), (0.125, 0.625)):
        p = PlanarPoint(a, c, Chart.XCF_AC)
        assert translate_field(a, c - 1.0) == planar_field(Chart.XCF_AC, p)


def test_sqrt_chart_consistency():
    rng = np.random.default_rng(43)
    for _ in range(100):
        u = float(rng.uniform(0.01, 1.5))
        v = float(rng.uniform(-0.9, 1.5))
        du, dv = sqrt_chart_field(u, v)
        da, de = translate_field(u * u, v)
        assert dv == de                       # shared second component, bitwise
        assert abs(2.0 * u * du - da) <= 1e-13 * max(1.0, abs(da))  # a = u^2 chain rule


def test_sqrt_chart_axis_and_domain():
    assert sqrt_chart_field(0.0, 0.5)[0] == 0.0
    with pytest.raises(ValueError, match="u must be nonnegative"):
        sqrt_chart_field(-0.1, 0.5)


def test_polar_full_field_is_rescaled_sqrt_chart_pushforward():
    # X is the sqrt-chart field written in polar coordinates (u, v) =
    # (r cos t, r sin t) with time rescaled by r^2.
    rng = np.random.default_rng(47)
    for lo, hi in ((1e-3, 1.2), (1e-6, 1e-3)):
        for _ in range(200):
            th = float(rng.uniform(-1.5, 1.5))
            r = float(rng.uniform(lo, hi))
            u, v = r * math.cos(th), r * math.sin(th)
            du, dv = sqrt_chart_field(u, v)
            dr = (u * du + v * dv) / r / (r * r)
            dt = (u * dv - v * du) / (r * r) / (r * r)
            drX, dtX = polar_field_X(BlowupPoint(r, th))
            scale = abs(drX) + r * abs(dtX) + 1e-300
            assert abs(drX - dr) <= 1e-12 * scale
            assert r * abs(dtX - dt) <= 1e-12 * scale


def test_polar_radial_drift_on_positive_axis():
    for r in (0.1, 0.5, 1.0, 1.2):
        dr, dt = polar_field_X(BlowupPoint(r, 0.0))
        assert ulps(dr, 0.5 * (r ** 5 + r ** 7)) <= 4
        assert dt == 0.0


def test_modified_field_rests_on_the_axes():
    for r in (0.1, 0.5, 1.0, 1.2):
        assert polar_field_Y(BlowupPoint(r, 0.0)) == (0.0, 0.0)
        dr, dt = polar_field_Y(BlowupPoint(r, math.pi))
        # theta = pi is exact only up to sin(pi) ~ 1e-16
        assert abs(dr) <= 1e-14 and abs(dt) <= 1e-14


def test_angular_components_identical():
    rng = np.random.default_rng(53)
    for _ in range(300):
        p = BlowupPoint(float(rng.uniform(1e-3, 1.2)), float(rng.uniform(-math.pi, math.pi)))
        assert polar_field_X(p)[1] == polar_field_Y(p)[1]


def test_circle_equilibria_catalog():
    eqs = circle_equilibria()
    assert len(eqs) == 8
    assert all(e1.theta < e2.theta for e1, e2 in zip(eqs, eqs[1:]))
    expected = sorted([
        (-math.pi + THETA3, CircleKind.SADDLE_STABLE_IN),
        (-math.pi / 2.0, CircleKind.SADDLE_UNSTABLE_OUT),
        (-THETA3, CircleKind.SADDLE_STABLE_IN),
        (0.0, CircleKind.NEEDS_FURTHER_ANALYSIS),
        (THETA3, CircleKind.SADDLE_STABLE_IN),
        (math.pi / 2.0, CircleKind.SADDLE_UNSTABLE_OUT),
        (math.pi - THETA3, CircleKind.SADDLE_STABLE_IN),
        (math.pi, CircleKind.NEEDS_FURTHER_ANALYSIS),
    ])
    for eq, (theta, kind) in zip(eqs, expected):
        assert abs(eq.theta - theta) <= 1e-15
        assert eq.kind is kind
        if kind is CircleKind.SADDLE_UNSTABLE_OUT:
            assert (eq.radial_rate, eq.angular_rate) == (2.0, -4.0)
        elif kind is CircleKind.NEEDS_FURTHER_ANALYSIS:
            assert (eq.radial_rate, eq.angular_rate) == (0.0, -8.0)
        else:
            assert ulps(eq.radial_rate, -4.0 / 3.0) <= 8
            assert ulps(eq.angular_rate, 16.0 / 3.0) <= 8
        # the catalog agrees with the standalone rate functions
        assert ulps(circle_radial_rate(eq.theta), eq.radial_rate) <= 8
        assert ulps(circle_angular_rate(eq.theta), eq.angular_rate) <= 8


def test_circle_drift_vanishes_at_equilibria_only():
    for eq in circle_equilibria():
        assert abs(circle_dtheta(eq.theta)) <= 1e-15
    # and is nonzero well away from them
    for th in (0.3, 1.2, 2.0, -0.5, -2.0):
        assert abs(circle_dtheta(th)) > 1e-3


def test_circle_rates_match_finite_differences():
    for eq in circle_equilibria():
        fd_ang = (circle_dtheta(eq.theta + 1e-6) - circle_dtheta(eq.theta - 1e-6)) / 2e-6
        assert abs(fd_ang - eq.angular_rate) <= 1e-6 * max(1.0, abs(eq.angular_rate))
        r = 1e-7
        fd_rad = polar_field_X(BlowupPoint(r, eq.theta))[0] / r
        assert abs(fd_rad - eq.radial_rate) <= 1e-6 * max(1.0, abs(eq.radial_rate))


def test_axis_nonapproach_check_passes():
    rep = axis_nonapproach_check(0.3, 0.1)
    assert rep.passed
    assert rep.dtheta_negative and rep.stays_outside_origin_ball and rep.x_above_y
    assert rep.min_radius > 0.0
    assert rep.compared_time > 0.0


def test_axis_nonapproach_check_validation():
    with pytest.raises(ValueError, match="theta0 must lie in"):
        axis_nonapproach_check(0.0, 0.1)
    with pytest.raises(ValueError, match="theta0 must lie in"):
        axis_nonapproach_check(THETA3, 0.1)
    with pytest.raises(ValueError, match="r0 must be positive"):
        axis_nonapproach_check(0.3, 0.0)


def test_blowup_point_validation():
    with pytest.raises(ValueError, match="r must be nonnegative"):
        BlowupPoint(-1.0, 0.5)
    with pytest.raises(ValueError, match=r"theta must lie in \(-pi, pi\]"):
        BlowupPoint(1.0, 4.0)
    with pytest.raises(ValueError, match=r"theta must lie in \(-pi, pi\]"):
        BlowupPoint(1.0, -math.pi)
    with pytest.raises(ValueError, match="r must be finite"):
        BlowupPoint(math.nan, 0.0)
