"""Projective reduction of the two flows to planar polynomial systems.

Both backward flows are invariant under scaling of (A, B, C), so their
orbits project to a plane of coefficient ratios:

* Ricci chart (b, c) = (B/A, C/A) on the domain b > c > 0, with field
      db = b (1 + b) (b - c - 1),
      dc = -c (1 + c) (b - c + 1);
* XCF chart (a, c) = (A/B, C/B) on the domain a > 0, 0 < c < 1, with
      da = a (a + 1) (a + c - 1) * phi3,
      dc = -c (1 - c) (a + c + 1) * phi1,
  where phi1 and phi3 are the sectional-curvature factors evaluated at
  (a, 1, c).

In each chart the projected backward field equals the planar field times
a positive scalar factor (2 A^2 for the Ricci chart, 8 / (B a c)^2 for
the XCF chart), so the planar systems carry exactly the same orbits up to
time reparametrization.  ``orbit_correspondence_check`` verifies this by
integrating both sides and comparing the projected curves.

``planar_jacobian`` gives closed-form Jacobians, and ``find_equilibria``
reports the finite rest points of each chart with their linearizations.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass
from typing import Callable

from . import fields as _fields
from .engine import IntegratorConfig, dense_eval, integrate
from .fields import Direction, Flow, FlowSpec
from .milnor import MetricDiag

__all__ = [
    "Chart",
    "PlanarPoint",
    "Stability",
    "EquilibriumReport",
    "project",
    "in_domain",
    "planar_field",
    "planar_jacobian",
    "find_equilibria",
    "orbit_correspondence_check",
]


class Chart(enum.Enum):
    RICCI_BC = "ricci_bc"
    XCF_AC = "xcf_ac"


class Stability(enum.Enum):
    ATTRACTING = "Attracting"
    REPELLING = "Repelling"
    SADDLE = "Saddle"
    DEGENERATE = "Degenerate"


@dataclass(frozen=True)
class PlanarPoint:
    x: float
    y: float
    chart: Chart

    def __post_init__(self) -> None:
        for name in ("x", "y"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ValueError(f"{name} must be a real number, got {v!r}")
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v!r}")
            object.__setattr__(self, name, float(v))

    def as_tuple(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class EquilibriumReport:
    location: PlanarPoint
    jacobian: tuple[tuple[float, float], tuple[float, float]]
    eigenvalues: tuple[complex, complex]
    kind: Stability


def project(chart: Chart, m: MetricDiag) -> PlanarPoint:
    """Project a metric point to chart coordinates (no domain restriction)."""
    if chart is Chart.RICCI_BC:
        return PlanarPoint(m.B / m.A, m.C / m.A, chart)
    return PlanarPoint(m.A / m.B, m.C / m.B, chart)


def in_domain(p: PlanarPoint) -> bool:
    """Whether the point lies in the chart's open phase domain."""
    if p.chart is Chart.RICCI_BC:
        return p.x > p.y > 0.0
    return p.x > 0.0 and 0.0 < p.y < 1.0


def _field_bc(b: float, c: float) -> tuple[float, float]:
    db = b * (1.0 + b) * (b - c - 1.0)
    dc = -c * (1.0 + c) * (b - c + 1.0)
    return (db, dc)


def _phi13(a: float, c: float) -> tuple[float, float]:
    phi1 = -3.0 * a * a + 1.0 + c * c - 2.0 * c - 2.0 * a * c - 2.0 * a
    phi3 = -3.0 * c * c + a * a + 1.0 + 2.0 * c - 2.0 * a * c + 2.0 * a
    return (phi1, phi3)


def _field_ac(a: float, c: float) -> tuple[float, float]:
    phi1, phi3 = _phi13(a, c)
    da = a * (a + 1.0) * (a + c - 1.0) * phi3
    dc = -c * (1.0 - c) * (a + c + 1.0) * phi1
    return (da, dc)


def planar_field(chart: Chart, p: PlanarPoint) -> tuple[float, float]:
    """The planar polynomial field of the chart at ``p``."""
    if p.chart is not chart:
        raise ValueError(f"point carries chart {p.chart}, expected {chart}")
    if chart is Chart.RICCI_BC:
        return _field_bc(p.x, p.y)
    return _field_ac(p.x, p.y)


def _jacobian_bc(b: float, c: float) -> tuple[tuple[float, float], tuple[float, float]]:
    j11 = 3.0 * b * b - 2.0 * b * c - c - 1.0
    j12 = -(b * b) - b
    j21 = -(c * c) - c
    j22 = 3.0 * c * c - 2.0 * b * c - b - 1.0
    return ((j11, j12), (j21, j22))


def _jacobian_ac(a: float, c: float) -> tuple[tuple[float, float], tuple[float, float]]:
    phi1, phi3 = _phi13(a, c)
    j11 = (3.0 * a * a + 2.0 * a * c + c - 1.0) * phi3 \
        + 2.0 * a * (a + 1.0) * (a + c - 1.0) * (a - c + 1.0)
    j12 = a * (a + 1.0) * (phi3 + 2.0 * (a + c - 1.0) * (1.0 - a - 3.0 * c))
    j21 = -c * (1.0 - c) * (phi1 - 2.0 * (a + c + 1.0) * (3.0 * a + c + 1.0))
    j22 = (3.0 * c * c + 2.0 * a * c - a - 1.0) * phi1 \
        - 2.0 * c * (1.0 - c) * (a + c + 1.0) * (c - 1.0 - a)
    return ((j11, j12), (j21, j22))


def planar_jacobian(chart: Chart, p: PlanarPoint
                    ) -> tuple[tuple[float, float], tuple[float, float]]:
    """Closed-form Jacobian of the planar field at ``p``."""
    if p.chart is not chart:
        raise ValueError(f"point carries chart {p.chart}, expected {chart}")
    if chart is Chart.RICCI_BC:
        return _jacobian_bc(p.x, p.y)
    return _jacobian_ac(p.x, p.y)


def _eig2(J: tuple[tuple[float, float], tuple[float, float]]) -> tuple[complex, complex]:
    (a, b), (c, d) = J
    tr = a + d
    disc = (a - d) * (a - d) + 4.0 * b * c
    root = cmath.sqrt(disc)
    lam1 = 0.5 * (tr + root)
    lam2 = 0.5 * (tr - root)
    return (complex(lam1), complex(lam2))


def _classify_eigs(eigs: tuple[complex, complex]) -> Stability:
    res = [e.real for e in eigs]
    if any(abs(r) < 1e-12 for r in res):
        return Stability.DEGENERATE
    if all(r < 0.0 for r in res):
        return Stability.ATTRACTING
    if all(r > 0.0 for r in res):
        return Stability.REPELLING
    return Stability.SADDLE


def find_equilibria(chart: Chart) -> list[EquilibriumReport]:
    """Finite rest points of the chart with closed-form linearizations.

    Ricci chart: (0, 0) attracting, (1, 0) a saddle.  XCF chart: (0, 0)
    attracting, (1, 0) repelling, (0, 1) degenerate (identically zero
    linearization).
    """
    if chart is Chart.RICCI_BC:
        locations = [(0.0, 0.0), (1.0, 0.0)]
    else:
        locations = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]
    reports = []
    for (x, y) in locations:
        p = PlanarPoint(x, y, chart)
        J = planar_jacobian(chart, p)
        eigs = _eig2(J)
        reports.append(EquilibriumReport(location=p, jacobian=J,
                                         eigenvalues=eigs, kind=_classify_eigs(eigs)))
    return reports


_CHART_FLOW = {Chart.RICCI_BC: Flow.RICCI_NORMALIZED, Chart.XCF_AC: Flow.CROSS_CURVATURE}


def _refine_polyline(traj, pick: Callable[[tuple[float, ...]], tuple[float, float]],
                     subdiv: int = 8) -> list[tuple[float, float]]:
    pts = [pick(traj.states[0])]
    for i in range(len(traj.times) - 1):
        t0, t1 = traj.times[i], traj.times[i + 1]
        for k in range(1, subdiv):
            pts.append(pick(dense_eval(traj, t0 + (t1 - t0) * k / subdiv)))
        pts.append(pick(traj.states[i + 1]))
    return pts


def _truncate_to_box(pts: list[tuple[float, float]], r_box: float) -> list[tuple[float, float]]:
    out = []
    for p in pts:
        out.append(p)
        if abs(p[0]) > r_box or abs(p[1]) > r_box:
            break
    return out


def _arclength_resample(pts: list[tuple[float, float]], s_values: list[float]
                        ) -> list[tuple[float, float]]:
    # cumulative arc length
    s = [0.0]
    for i in range(len(pts) - 1):
        s.append(s[-1] + math.hypot(pts[i + 1][0] - pts[i][0], pts[i + 1][1] - pts[i][1]))
    out = []
    j = 0
    for sv in s_values:
        while j < len(s) - 2 and s[j + 1] < sv:
            j += 1
        seg = s[j + 1] - s[j]
        w = 0.0 if seg == 0.0 else (sv - s[j]) / seg
        out.append((pts[j][0] + w * (pts[j + 1][0] - pts[j][0]),
                    pts[j][1] + w * (pts[j + 1][1] - pts[j][1])))
    return out


def _arclength(pts: list[tuple[float, float]]) -> float:
    total = 0.0
    for i in range(len(pts) - 1):
        total += math.hypot(pts[i + 1][0] - pts[i][0], pts[i + 1][1] - pts[i][1])
    return total


def orbit_correspondence_check(spec: FlowSpec, m0: MetricDiag, chart: Chart,
                               *, t_max: float = 50.0, n_compare: int = 800,
                               box: float = 50.0) -> float:
    """Sup distance between a projected 3D orbit and the planar orbit.

    Integrates the 3D flow from ``m0`` and the planar field from the
    projection of ``m0``, arc-length parametrizes both projected curves
    from their common start, and returns the largest pointwise deviation
    over the shared arc length (curves truncated to a coordinate box, so
    blow-up tails do not dominate).  Identical orbits up to time
    reparametrization give a deviation at the integration-accuracy level.

    The chart must match the flow, and the projected start point must lie
    in the chart's open domain.
    """
    if _CHART_FLOW[chart] is not spec.flow:
        raise ValueError(f"chart {chart} does not correspond to flow {spec.flow}")
    p0 = project(chart, m0)
    if not in_domain(p0):
        raise ValueError(f"projected start {p0.as_tuple()} outside the chart domain")

    cfg3 = IntegratorConfig(rtol=1e-11, atol=1e-13)
    traj3 = integrate(_fields.rhs(spec), m0.as_tuple(), (0.0, t_max), cfg3)

    if chart is Chart.RICCI_BC:
        def pick(s: tuple[float, ...]) -> tuple[float, float]:
            return (s[1] / s[0], s[2] / s[0])
        raw = _field_bc
    else:
        def pick(s: tuple[float, ...]) -> tuple[float, float]:
            return (s[0] / s[1], s[2] / s[1])
        raw = _field_ac

    # The planar polynomial field corresponds to the *backward* 3D flow;
    # flip it when following a forward 3D orbit.
    sgn = 1.0 if spec.direction is Direction.BACKWARD else -1.0

    def planar_rhs(t: float, y: tuple[float, ...]) -> tuple[float, float]:
        dx, dy = raw(y[0], y[1])
        return (sgn * dx, sgn * dy)

    cfg2 = IntegratorConfig(rtol=1e-11, atol=1e-13, component_floor=None,
                            component_ceiling=1e6)
    traj2 = integrate(planar_rhs, p0.as_tuple(), (0.0, t_max), cfg2)

    pts3 = _truncate_to_box(_refine_polyline(traj3, pick), box)
    pts2 = _truncate_to_box(_refine_polyline(traj2, lambda s: (s[0], s[1])), box)
    L = min(_arclength(pts3), _arclength(pts2))
    svals = [L * k / (n_compare - 1) for k in range(n_compare)]
    q3 = _arclength_resample(pts3, svals)
    q2 = _arclength_resample(pts2, svals)
    return max(math.hypot(q3[k][0] - q2[k][0], q3[k][1] - q2[k][1])
               for k in range(n_compare))
