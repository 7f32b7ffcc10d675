"""Projective charts: projection, equilibria, Jacobians, 3D correspondence."""
from __future__ import annotations

import math

import numpy as np
import pytest

from sl2flow import (
    Chart,
    Direction,
    Flow,
    FlowSpec,
    MetricDiag,
    PlanarPoint,
    Stability,
    field,
    find_equilibria,
    in_domain,
    orbit_correspondence_check,
    planar_field,
    planar_jacobian,
    project,
)


def test_projection_is_componentwise_division():
    m = MetricDiag(2.0, 3.0, 1.0)
    p = project(Chart.RICCI_BC, m)
    assert (p.x, p.y, p.chart) == (1.5, 0.5, Chart.RICCI_BC)
    m = MetricDiag(5.0, 2.0, 1.0)
    p = project(Chart.XCF_AC, m)
    assert (p.x, p.y, p.chart) == (2.5, 0.5, Chart.XCF_AC)


def test_domain_membership():
    assert in_domain(PlanarPoint(2.0, 1.0, Chart.RICCI_BC))
    assert not in_domain(PlanarPoint(1.0, 2.0, Chart.RICCI_BC))
    assert not in_domain(PlanarPoint(1.0, 1.0, Chart.RICCI_BC))  # needs B > C
    assert not in_domain(PlanarPoint(2.0, 0.0, Chart.RICCI_BC))
    assert in_domain(PlanarPoint(0.5, 0.99, Chart.XCF_AC))
    assert not in_domain(PlanarPoint(0.5, 1.0, Chart.XCF_AC))
    assert not in_domain(PlanarPoint(0.0, 0.5, Chart.XCF_AC))


def test_chart_mismatch_is_rejected():
    p = PlanarPoint(0.5, 0.5, Chart.XCF_AC)
    with pytest.raises(ValueError, match="point carries chart"):
        planar_field(Chart.RICCI_BC, p)
    with pytest.raises(ValueError, match="point carries chart"):
        planar_jacobian(Chart.RICCI_BC, p)


def test_equilibria_ricci_chart():
    eqs = find_equilibria(Chart.RICCI_BC)
    assert [(e.location.x, e.location.y) for e in eqs] == [(0.0, 0.0), (1.0, 0.0)]
    origin, saddle = eqs
    assert origin.kind is Stability.ATTRACTING
    assert origin.jacobian == ((-1.0, 0.0), (0.0, -1.0))
    assert sorted(ev.real for ev in origin.eigenvalues) == [-1.0, -1.0]
    assert saddle.kind is Stability.SADDLE
    assert saddle.jacobian == ((2.0, -2.0), (0.0, -2.0))
    assert sorted(ev.real for ev in saddle.eigenvalues) == [-2.0, 2.0]
    assert all(abs(ev.imag) == 0.0 for e in eqs for ev in e.eigenvalues)


def test_equilibria_xcf_chart():
    eqs = find_equilibria(Chart.XCF_AC)
    assert [(e.location.x, e.location.y) for e in eqs] == [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]
    origin, corner, degenerate = eqs
    assert origin.kind is Stability.ATTRACTING
    assert origin.jacobian == ((-1.0, 0.0), (0.0, -1.0))
    assert corner.kind is Stability.REPELLING
    assert corner.jacobian == ((8.0, 8.0), (0.0, 8.0))
    assert sorted(ev.real for ev in corner.eigenvalues) == [8.0, 8.0]
    assert degenerate.kind is Stability.DEGENERATE
    assert degenerate.jacobian == ((0.0, 0.0), (0.0, 0.0))
    assert all(ev == 0.0 for ev in degenerate.eigenvalues)


def _sample_points(chart: Chart, n: int, seed: int) -> list[PlanarPoint]:
    rng = np.random.default_rng(seed)
    pts = []
    while len(pts) < n:
        if chart is Chart.RICCI_BC:
            y = float(rng.uniform(0.05, 2.0))
            x = y + float(rng.uniform(0.05, 3.0))
        else:
            x = float(rng.uniform(0.05, 3.0))
            y = float(rng.uniform(0.05, 0.95))
        p = PlanarPoint(x, y, chart)
        if in_domain(p):
            pts.append(p)
    return pts


def _fd_jacobian(chart: Chart, p: PlanarPoint) -> list[list[float]]:
    J = [[0.0, 0.0], [0.0, 0.0]]
    for j, (dx, dy) in enumerate(((1.0, 0.0), (0.0, 1.0))):
        h = 1e-6 * max(1.0, abs(p.x) if j == 0 else abs(p.y))
        fp = planar_field(chart, PlanarPoint(p.x + h * dx, p.y + h * dy, chart))
        fm = planar_field(chart, PlanarPoint(p.x - h * dx, p.y - h * dy, chart))
        for i in range(2):
            J[i][j] = (fp[i] - fm[i]) / (2.0 * h)
    return J


def test_jacobian_matches_finite_differences():
    for chart in (Chart.RICCI_BC, Chart.XCF_AC):
        for p in _sample_points(chart, 40, seed=101):
            ja = planar_jacobian(chart, p)
            jn = _fd_jacobian(chart, p)
            scale = max(1.0, max(abs(v) for row in ja for v in row))
            for i in range(2):
                for j in range(2):
                    assert abs(ja[i][j] - jn[i][j]) <= 1e-6 * scale


def test_planar_field_is_collinear_with_projected_backward_flow():
    # The polynomial chart fields are time-rescalings of the backward flows
    # pushed through the projection, so the vectors must be parallel and
    # point the same way.
    for chart, flow in ((Chart.RICCI_BC, Flow.RICCI_NORMALIZED),
                        (Chart.XCF_AC, Flow.CROSS_CURVATURE)):
        spec = FlowSpec(flow, Direction.BACKWARD)
        for p in _sample_points(chart, 40, seed=103):
            if chart is Chart.RICCI_BC:
                m = MetricDiag(1.0, p.x, p.y)
                da, db, dc = field(spec, m)
                proj = (db - p.x * da, dc - p.y * da)
            else:
                m = MetricDiag(p.x, 1.0, p.y)
                da, db, dc = field(spec, m)
                proj = (da - p.x * db, dc - p.y * db)
            vx, vy = planar_field(chart, p)
            cross = vx * proj[1] - vy * proj[0]
            dot = vx * proj[0] + vy * proj[1]
            scale = math.hypot(vx, vy) * math.hypot(*proj)
            assert abs(cross) <= 1e-10 * scale
            assert dot > 0.0


def test_invariant_lines_vanish_exactly():
    # boundary lines of the charts are invariant: the transverse component
    # of the polynomial field is exactly zero on them
    assert planar_field(Chart.RICCI_BC, PlanarPoint(2.0, 0.0, Chart.RICCI_BC))[1] == 0.0
    assert planar_field(Chart.RICCI_BC, PlanarPoint(1.0, 0.0, Chart.RICCI_BC)) == (0.0, 0.0)
    assert planar_field(Chart.XCF_AC, PlanarPoint(0.5, 1.0, Chart.XCF_AC))[1] == 0.0
    assert planar_field(Chart.XCF_AC, PlanarPoint(0.5, 0.0, Chart.XCF_AC))[1] == 0.0
    assert planar_field(Chart.XCF_AC, PlanarPoint(0.0, 0.7, Chart.XCF_AC))[0] == 0.0
    # a + c = 1 is invariant too; 0.25 + 0.75 hits it exactly in floats
    assert planar_field(Chart.XCF_AC, PlanarPoint(0.25, 0.75, Chart.XCF_AC))[0] == 0.0


def test_orbit_correspondence_with_3d_flow():
    dev = orbit_correspondence_check(FlowSpec(Flow.RICCI_NORMALIZED, Direction.BACKWARD),
                                     MetricDiag(1.0, 3.0, 1.0), Chart.RICCI_BC)
    assert dev <= 1e-6
    dev = orbit_correspondence_check(FlowSpec(Flow.CROSS_CURVATURE, Direction.FORWARD),
                                     MetricDiag(5.0, 2.0, 1.0), Chart.XCF_AC)
    assert dev <= 1e-6


def test_orbit_correspondence_validation():
    with pytest.raises(ValueError, match="does not correspond"):
        orbit_correspondence_check(FlowSpec(Flow.CROSS_CURVATURE),
                                   MetricDiag(5.0, 2.0, 1.0), Chart.RICCI_BC)
    with pytest.raises(ValueError, match="outside the chart domain"):
        orbit_correspondence_check(FlowSpec(Flow.RICCI_NORMALIZED),
                                   MetricDiag(1.0, 1.0, 3.0), Chart.RICCI_BC)
