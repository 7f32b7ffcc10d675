"""Desingularization of the degenerate planar rest point at (a, c) = (0, 1).

The XCF chart has a rest point at (0, 1) whose linearization vanishes
identically, so its local structure is resolved by a chain of coordinate
changes:

* translation: e = c - 1 moves the point to the origin of the (a, e) plane;
* square-root chart: a = u^2 opens the parabolic sector (the invariant
  curve through the point is tangent to a = (1/2) e^2);
* polar blow-up: (u, v) = (r cos t, r sin t), followed by division of the
  pulled-back field by r^2, which is the largest power that leaves the
  field smooth and not identically zero on the circle r = 0.

``polar_field_X`` is the full blown-up field X; ``polar_field_Y`` drops
the removable radial part supported on the axis sin t = 0:

    X.dr - Y.dr = (r^5 cos^8 t + r^7 cos^10 t) / 2,   X.dt == Y.dt.

Both are evaluated as exactly-summed polynomial brackets (math.fsum), and
the angular components share one code path, so X.dt equals Y.dt bitwise.

On the circle r = 0 the angular motion is dt/ds = -4 cos t sin t
(3 cos^2 t - 1), giving eight rest angles; ``circle_equilibria`` reports
each with its radial and angular linearization rates.  The axis t = 0 is
X-invariant with dr = (r^5 + r^7)/2 > 0, and ``axis_nonapproach_check``
verifies numerically that first-quadrant orbits of X slide along the axis
with growing r instead of converging to the origin — the behavior that
distinguishes X from the truncated field Y.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from math import fsum

from .engine import (EventAction, EventDirection, EventSpec, IntegratorConfig,
                     dense_eval, integrate)

__all__ = [
    "BlowupPoint",
    "CircleKind",
    "CircleEquilibrium",
    "AxisApproachReport",
    "translate_field",
    "sqrt_chart_field",
    "polar_field_X",
    "polar_field_Y",
    "circle_dtheta",
    "circle_radial_rate",
    "circle_angular_rate",
    "circle_equilibria",
    "axis_nonapproach_check",
]


@dataclass(frozen=True)
class BlowupPoint:
    """A point (r, theta) of the polar blow-up chart, r >= 0, theta in (-pi, pi]."""

    r: float
    theta: float

    def __post_init__(self) -> None:
        for name in ("r", "theta"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ValueError(f"{name} must be a real number, got {v!r}")
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v!r}")
            object.__setattr__(self, name, float(v))
        if self.r < 0.0:
            raise ValueError(f"r must be nonnegative, got {self.r!r}")
        if not (-math.pi < self.theta <= math.pi):
            raise ValueError(f"theta must lie in (-pi, pi], got {self.theta!r}")

    def as_tuple(self) -> tuple[float, float]:
        return (self.r, self.theta)


def translate_field(a: float, e: float) -> tuple[float, float]:
    """Field of the (a, e) = (a, c - 1) chart; the rest point sits at (0, 0)."""
    da = -a * (a + 1.0) * (a + e) * (3.0 * e * e + 4.0 * e + 2.0 * a * e - a * a)
    de = e * (e + 1.0) * (a + e + 2.0) * (e * e - 2.0 * a * e - 4.0 * a - 3.0 * a * a)
    return (da, de)


def sqrt_chart_field(u: float, v: float) -> tuple[float, float]:
    """Field of the square-root chart a = u^2 (u >= 0), v = e.

    The v-component is untransformed, so it is evaluated through
    :func:`translate_field` and agrees with it bitwise; the u-component
    carries the chain-rule factor: 2 u du = da(u^2, v).
    """
    if u < 0.0:
        raise ValueError(f"u must be nonnegative, got {u!r}")
    u2 = u * u
    du = -0.5 * u * (u2 + 1.0) * (v + u2) * (
        3.0 * v * v + 4.0 * v + 2.0 * u2 * v - u2 * u2)
    dv = translate_field(u2, v)[1]
    return (du, dv)


def _polar_dtheta(r: float, c: float, s: float) -> float:
    # Angular component shared by X and Y (identical by construction).
    return -0.5 * c * s * fsum((
        -2 * r**2 * s**4,
        -r**3 * s**3 * c**2,
        9 * r**2 * c**2 * s**2,
        5 * r**4 * s**2 * c**4,
        -9 * r * s**3,
        28 * r * c**2 * s,
        25 * r**3 * c**4 * s,
        5 * r**5 * s * c**6,
        -8 * s**2,
        16 * c**2,
        20 * r**2 * c**4,
        7 * r**4 * c**6,
        r**6 * c**8,
    ))


def _X_raw(r: float, theta: float) -> tuple[float, float]:
    c = math.cos(theta)
    s = math.sin(theta)
    dr = 0.5 * r * fsum((
        -33 * r**3 * c**4 * s**3,
        -29 * r**2 * c**4 * s**2,
        -11 * r**4 * c**6 * s**2,
        -r**5 * c**8 * s,
        -5 * r**3 * c**6 * s,
        r**6 * c**10,
        -35 * r * c**2 * s**3,
        -20 * c**2 * s**2,
        -4 * r * c**4 * s,
        r**4 * c**8,
        2 * r**2 * s**6,
        -2 * r**3 * s**5 * c**2,
        -18 * r**2 * c**2 * s**4,
        -10 * r**4 * s**4 * c**4,
        6 * r * s**5,
        -6 * r**5 * s**3 * c**6,
        4 * s**4,
    ))
    return (dr, _polar_dtheta(r, c, s))


def _Y_raw(r: float, theta: float) -> tuple[float, float]:
    c = math.cos(theta)
    s = math.sin(theta)
    dr = 0.5 * s * r * fsum((
        -5 * r**3 * c**6,
        -4 * r * c**4,
        -29 * r**2 * c**4 * s,
        -20 * s * c**2,
        -35 * r * c**2 * s**2,
        -r**5 * c**8,
        -11 * r**4 * c**6 * s,
        -33 * r**3 * c**4 * s**2,
        -6 * r**5 * c**6 * s**2,
        -10 * r**4 * c**4 * s**3,
        -2 * r**3 * c**2 * s**4,
        -18 * r**2 * c**2 * s**3,
        6 * r * s**4,
        2 * r**2 * s**5,
        4 * s**3,
    ))
    return (dr, _polar_dtheta(r, c, s))


def polar_field_X(p: BlowupPoint) -> tuple[float, float]:
    """Blown-up field (dr/ds, dtheta/ds): sqrt-chart pushforward over r^2."""
    return _X_raw(p.r, p.theta)


def polar_field_Y(p: BlowupPoint) -> tuple[float, float]:
    """X with the removable axis-supported radial part dropped.

    Y.dr = X.dr - (r^5 cos^8 t + r^7 cos^10 t)/2; the angular components
    are bitwise equal.  The axis sin t = 0 consists entirely of rest
    points of Y, whereas X pushes axis points outward.
    """
    return _Y_raw(p.r, p.theta)


def circle_dtheta(theta: float) -> float:
    """Angular velocity on the circle r = 0: -4 cos t sin t (3 cos^2 t - 1)."""
    c = math.cos(theta)
    s = math.sin(theta)
    return -4.0 * c * s * (3.0 * c * c - 1.0)


def _radial_rate_c2(c2: float) -> float:
    s2 = 1.0 - c2
    return 0.5 * (-20.0 * c2 * s2 + 4.0 * s2 * s2)


def _angular_rate_c2(c2: float) -> float:
    s2 = 1.0 - c2
    return -4.0 * ((c2 - s2) * (3.0 * c2 - 1.0) - 6.0 * c2 * s2)


def circle_radial_rate(theta: float) -> float:
    """Radial linearization rate on the circle: lim_{r->0} (dr/ds)/r."""
    c = math.cos(theta)
    return _radial_rate_c2(c * c)


def circle_angular_rate(theta: float) -> float:
    """Angular linearization rate on the circle: d(dtheta/ds)/dtheta at r = 0."""
    c = math.cos(theta)
    return _angular_rate_c2(c * c)


class CircleKind(enum.Enum):
    SADDLE_UNSTABLE_OUT = "SaddleUnstableOut"
    SADDLE_STABLE_IN = "SaddleStableIn"
    NEEDS_FURTHER_ANALYSIS = "NeedsFurtherAnalysis"


@dataclass(frozen=True)
class CircleEquilibrium:
    theta: float
    radial_rate: float
    angular_rate: float
    kind: CircleKind


def circle_equilibria() -> list[CircleEquilibrium]:
    """The eight rest angles on the circle r = 0, sorted by angle.

    They solve cos t sin t (3 cos^2 t - 1) = 0 in (-pi, pi]: the families
    cos^2 t = 0 (hyperbolic, radially unstable / angularly stable), cos^2 t
    = 1/3 (hyperbolic, radially stable / angularly unstable), and cos^2 t
    = 1 (zero radial rate: the axis pair, degenerate at linear order).
    """
    theta3 = math.acos(1.0 / math.sqrt(3.0))
    families = [
        (0.0, [math.pi / 2, -math.pi / 2]),
        (1.0 / 3.0, [theta3, -theta3, math.pi - theta3, -(math.pi - theta3)]),
        (1.0, [0.0, math.pi]),
    ]
    out = []
    for c2, angles in families:
        radial = _radial_rate_c2(c2)
        angular = _angular_rate_c2(c2)
        if radial > 0.0 and angular < 0.0:
            kind = CircleKind.SADDLE_UNSTABLE_OUT
        elif radial < 0.0 and angular > 0.0:
            kind = CircleKind.SADDLE_STABLE_IN
        else:
            kind = CircleKind.NEEDS_FURTHER_ANALYSIS
        for th in angles:
            out.append(CircleEquilibrium(theta=th, radial_rate=radial,
                                         angular_rate=angular, kind=kind))
    out.sort(key=lambda eq: eq.theta)
    return out


@dataclass(frozen=True)
class AxisApproachReport:
    """Outcome of the axis-sliding comparison between X and Y orbits."""

    passed: bool
    dtheta_negative: bool
    stays_outside_origin_ball: bool
    x_above_y: bool
    min_radius: float
    max_radial_gap: float
    compared_time: float
    final_state_x: tuple[float, float]
    termination_x: str


def axis_nonapproach_check(theta0: float, r0: float, *, t_max: float = 500.0,
                           r_cap: float = 1.4, theta_floor: float = 1e-9,
                           origin_ball: float = 1e-4) -> AxisApproachReport:
    """Verify that an X-orbit slides to the axis without nearing the origin.

    From a start in the open first quadrant below the interior rest angle
    arccos(1/sqrt 3), the X-orbit must have dtheta/ds < 0 throughout,
    stay outside the ball of radius ``origin_ball`` about the origin, and
    keep its radius (weakly) above the Y-orbit through the same start —
    the removable axis term is what pushes X outward, so X crosses
    Y-orbits from below to above.

    The orbits are integrated until the angle reaches ``theta_floor``,
    the radius reaches ``r_cap``, or ``t_max`` elapses; the radial
    comparison is made at shared times through the dense output.
    """
    theta3 = math.acos(1.0 / math.sqrt(3.0))
    if not (0.0 < theta0 < theta3):
        raise ValueError(
            f"theta0 must lie in (0, {theta3:.6f}) for monotone descent, got {theta0!r}")
    if not (r0 > 0.0):
        raise ValueError(f"r0 must be positive, got {r0!r}")

    events = [
        EventSpec("axis", lambda t, y: y[1] - theta_floor,
                  EventDirection.FALLING, EventAction.STOP),
        EventSpec("escape", lambda t, y: y[0] - r_cap,
                  EventDirection.RISING, EventAction.STOP),
    ]
    cfg = IntegratorConfig(rtol=1e-11, atol=1e-13,
                           component_floor=None, component_ceiling=None)

    def x_rhs(t, y):
        return _X_raw(y[0], y[1])

    def y_rhs(t, y):
        return _Y_raw(y[0], y[1])

    tx = integrate(x_rhs, (r0, theta0), (0.0, t_max), cfg, events)
    ty = integrate(y_rhs, (r0, theta0), (0.0, t_max), cfg, events)

    dtheta_negative = all(
        _X_raw(r, th)[1] < 0.0
        for (r, th) in tx.states
        if th > theta_floor
    )
    min_radius = min(r for (r, th) in tx.states)
    stays_outside = min_radius > origin_ball

    t_overlap = min(tx.t_end, ty.t_end)
    n_grid = 400
    max_gap = 0.0
    min_diff = math.inf
    for k in range(n_grid + 1):
        t = t_overlap * k / n_grid
        rx = dense_eval(tx, t)[0]
        ry = dense_eval(ty, t)[0]
        diff = rx - ry
        if diff > max_gap:
            max_gap = diff
        if diff < min_diff:
            min_diff = diff
    x_above_y = min_diff >= -1e-9

    passed = dtheta_negative and stays_outside and x_above_y
    return AxisApproachReport(
        passed=passed,
        dtheta_negative=dtheta_negative,
        stays_outside_origin_ball=stays_outside,
        x_above_y=x_above_y,
        min_radius=min_radius,
        max_radial_gap=max_gap,
        compared_time=t_overlap,
        final_state_x=tx.y_end,
        termination_x=tx.termination.value,
    )
