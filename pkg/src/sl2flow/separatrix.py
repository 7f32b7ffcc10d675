"""Separatrix tracing, basin classification, and blow-up asymptotics.

Each planar chart is divided by a distinguished orbit (the separatrix)
into two basins:

* Ricci chart: the stable manifold gamma of the saddle (1, 0) separates
  orbits converging to (0, 0) (basin Q1, the A-dominant backward regime)
  from orbits escaping along the vertical asymptote (basin Q2);
* XCF chart: the orbit gamma0 from the degenerate point (0, 1) to (1, 0)
  separates a -> infinity orbits (Q1) from orbits converging to (0, 0)
  (Q2).

``trace_separatrix`` shoots each curve from its saddle along the
linearized invariant direction (offset delta, reversed field).
``classify`` labels a metric point by integrating the backward 3D flow
until one of two scale-invariant guard functions crosses zero — each
guard holds identically on one basin's canonical regime and its first
crossing is a certificate of the basin — and optionally fits the blow-up
exponents and constants of the resulting trajectory.  Orbits on the
separatrix itself trigger neither guard and are labeled NearS0.

``fit_asymptotics`` recovers the blow-up time T_b, per-component power
laws y_i ~ eta_i * (T_b - s)^{p_i}, and confidence half-widths from the
trajectory tail, optimizing T_b so the tail is maximally log-log linear.
``case3_diagnostics`` reports the degenerate (separatrix) asymptotics,
which mix power laws with finite limits and need sqrt-corrected
extrapolation instead.
"""

from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass

import numpy as np

from . import fields as _fields
from .engine import (EventAction, EventDirection, EventSpec, IntegratorConfig,
                     Termination, Trajectory, dense_eval, integrate)
from .fields import Direction, Flow, FlowSpec
from .milnor import MetricDiag
from .planar import Chart, PlanarPoint, _field_bc
from .blowup import _X_raw

__all__ = [
    "SeparatrixCurve",
    "ClassificationReport",
    "FitReport",
    "Case3Report",
    "trace_separatrix",
    "classify",
    "fit_asymptotics",
    "case3_diagnostics",
    "separatrix_bisection",
]

logger = logging.getLogger(__name__)

_BLOWUP_TERMINATIONS = frozenset({
    Termination.COMPONENT_FLOOR,
    Termination.COMPONENT_CEILING,
    Termination.STEP_UNDERFLOW,
})

_CHART_OF_FLOW = {Flow.RICCI_NORMALIZED: Chart.RICCI_BC,
                  Flow.CROSS_CURVATURE: Chart.XCF_AC}


# ---------------------------------------------------------------------------
# separatrix curves
# ---------------------------------------------------------------------------

@dataclass
class SeparatrixCurve:
    """A traced separatrix as a sampled graph in its chart.

    Ricci chart: samples (b, c) with b increasing from the saddle (1, 0);
    the curve is the graph c = phi(b).  XCF chart: samples (a, c) with c
    decreasing from the degenerate point (0, 1); the curve is the graph
    a = gamma0(c).  ``interpolate`` evaluates the graph (phi for Ricci,
    gamma0 for XCF); ``side`` reports which basin a planar point lies on
    (+1 for Q1, -1 for Q2, 0 on the curve).
    """

    chart: Chart
    samples: list[tuple[float, float]]
    tangent_at_saddle: tuple[float, float]
    parameter_range: tuple[float, float]

    def __post_init__(self) -> None:
        if self.chart is Chart.RICCI_BC:
            xs = [p[0] for p in self.samples]
            ys = [p[1] for p in self.samples]
        else:
            xs = [p[1] for p in self.samples][::-1]
            ys = [p[0] for p in self.samples][::-1]
        # enforce a strictly increasing parameter for interpolation
        keep_x, keep_y = [xs[0]], [ys[0]]
        for x, y in zip(xs[1:], ys[1:]):
            if x > keep_x[-1]:
                keep_x.append(x)
                keep_y.append(y)
        self._xs = np.asarray(keep_x)
        self._ys = np.asarray(keep_y)

    def interpolate(self, x: float) -> float:
        """Ricci chart: phi(b) for b >= 1.  XCF chart: gamma0(c) for c in (0, 1)."""
        if self.chart is Chart.RICCI_BC:
            if x < 1.0:
                raise ValueError(f"phi is defined for b >= 1, got {x!r}")
            if x > self._xs[-1]:
                raise ValueError(f"b = {x!r} beyond the traced range {self._xs[-1]!r}")
        else:
            if not (0.0 < x <= 1.0):
                raise ValueError(f"gamma0 is defined for c in (0, 1], got {x!r}")
            if x < self._xs[0]:
                raise ValueError(f"c = {x!r} below the traced range {self._xs[0]!r}")
        return float(np.interp(x, self._xs, self._ys))

    def side(self, p: PlanarPoint) -> int:
        """+1 if ``p`` lies on the Q1 side of the curve, -1 for Q2, 0 on it."""
        if p.chart is not self.chart:
            raise ValueError(f"point carries chart {p.chart}, expected {self.chart}")
        if self.chart is Chart.RICCI_BC:
            b, c = p.x, p.y
            if b <= 1.0:
                return 1
            if b > self._xs[-1]:
                # extrapolate the last traced segment
                slope = ((self._ys[-1] - self._ys[-2])
                         / (self._xs[-1] - self._xs[-2]))
                ref = self._ys[-1] + slope * (b - self._xs[-1])
            else:
                ref = float(np.interp(b, self._xs, self._ys))
            diff = c - ref
        else:
            a, c = p.x, p.y
            if c > self._xs[-1]:
                ref = 0.5 * (c - 1.0) * (c - 1.0)  # tangent parabola at (0, 1)
            elif c < self._xs[0]:
                slope = ((self._ys[1] - self._ys[0])
                         / (self._xs[1] - self._xs[0]))
                ref = self._ys[0] + slope * (c - self._xs[0])
            else:
                ref = float(np.interp(c, self._xs, self._ys))
            diff = a - ref
        if diff > 0.0:
            return 1
        if diff < 0.0:
            return -1
        return 0

    def distance(self, p: PlanarPoint) -> float:
        """Euclidean distance from ``p`` to the sampled polyline."""
        if p.chart is not self.chart:
            raise ValueError(f"point carries chart {p.chart}, expected {self.chart}")
        pts = np.asarray(self.samples)
        d = np.hypot(pts[:, 0] - p.x, pts[:, 1] - p.y)
        return float(d.min())


def _refined_points(traj: Trajectory, subdiv: int = 4) -> list[tuple[float, ...]]:
    pts = [traj.states[0]]
    for i in range(len(traj.times) - 1):
        t0, t1 = traj.times[i], traj.times[i + 1]
        for k in range(1, subdiv):
            pts.append(dense_eval(traj, t0 + (t1 - t0) * k / subdiv))
        pts.append(traj.states[i + 1])
    return pts


def _trace_ricci(delta: float, b_max: float, rtol: float) -> SeparatrixCurve:
    # Saddle (1, 0): planar eigenvalues (2, -2), stable direction (1, 2).
    # Reversing the field makes the stable manifold the escaping one.
    inv_norm = 1.0 / math.sqrt(5.0)
    seed = (1.0 + delta * inv_norm, delta * 2.0 * inv_norm)

    def reversed_bc(t, y):
        db, dc = _field_bc(y[0], y[1])
        return (-db, -dc)

    events = [EventSpec("reach_bmax", lambda t, y: y[0] - b_max,
                        EventDirection.RISING, EventAction.STOP)]
    cfg = IntegratorConfig(rtol=rtol, atol=rtol * 1e-2,
                           component_floor=None, component_ceiling=None)
    traj = integrate(reversed_bc, seed, (0.0, 1e6), cfg, events)
    samples = [(1.0, 0.0)] + [(s[0], s[1]) for s in _refined_points(traj)]
    return SeparatrixCurve(chart=Chart.RICCI_BC, samples=samples,
                           tangent_at_saddle=(inv_norm, 2.0 * inv_norm),
                           parameter_range=(1.0, samples[-1][0]))


def _xcf_saddle_seed(delta: float) -> tuple[float, float]:
    # Circle saddle of the blown-up field on the sin t < 0 side:
    # t0 = -arccos(1/sqrt 3), rates (radial, angular) = (-4/3, 16/3).
    theta0 = -math.acos(1.0 / math.sqrt(3.0))
    c, s = math.cos(theta0), math.sin(theta0)
    # d(dtheta/ds)/dr on the circle (linearization off-diagonal entry)
    q = -0.5 * c * s * (28.0 * c * c * s - 9.0 * s ** 3)
    # stable eigenvector of [[-4/3, 0], [q, 16/3]]
    v = (1.0, -3.0 * q / 20.0)
    norm = math.hypot(*v)
    return (delta * v[0] / norm, theta0 + delta * v[1] / norm)


def _trace_xcf(delta: float, c_min: float, rtol: float) -> SeparatrixCurve:
    seed = _xcf_saddle_seed(delta)

    def reversed_X(t, y):
        dr, dth = _X_raw(y[0], y[1])
        return (-dr, -dth)

    def c_guard(t, y):
        return (1.0 + y[0] * math.sin(y[1])) - c_min

    events = [EventSpec("reach_cmin", c_guard,
                        EventDirection.FALLING, EventAction.STOP)]
    cfg = IntegratorConfig(rtol=rtol, atol=rtol * 1e-2,
                           component_floor=None, component_ceiling=None)
    traj = integrate(reversed_X, seed, (0.0, 1e6), cfg, events)
    samples = [(0.0, 1.0)]
    for (r, th) in _refined_points(traj):
        cc = math.cos(th)
        samples.append((r * r * cc * cc, 1.0 + r * math.sin(th)))
    return SeparatrixCurve(chart=Chart.XCF_AC, samples=samples,
                           tangent_at_saddle=(0.0, -1.0),
                           parameter_range=(samples[-1][1], 1.0))


@functools.lru_cache(maxsize=16)
def _trace_cached(flow: Flow, delta: float, extent: float, rtol: float) -> SeparatrixCurve:
    if flow is Flow.RICCI_NORMALIZED:
        return _trace_ricci(delta, extent, rtol)
    return _trace_xcf(delta, extent, rtol)


def trace_separatrix(flow: Flow, *, delta: float = 1e-8,
                     extent: float | None = None,
                     rtol: float = 1e-12) -> SeparatrixCurve:
    """Trace the separatrix of a flow's chart by shooting from its saddle.

    The curve is started ``delta`` along the linearized invariant
    direction and integrated with the reversed field until the chart
    parameter reaches ``extent`` (Ricci: largest b, default 1e3; XCF:
    smallest c, default 1e-3).  Results are cached per argument tuple.
    Halving ``delta`` moves the curve by O(delta), far below integration
    accuracy, so the default is effectively converged.
    """
    if not (0.0 < delta < 1e-3):
        raise ValueError(f"delta must be a small positive offset, got {delta!r}")
    if extent is None:
        extent = 1e3 if flow is Flow.RICCI_NORMALIZED else 1e-3
    return _trace_cached(flow, float(delta), float(extent), float(rtol))


# ---------------------------------------------------------------------------
# tail fitting
# ---------------------------------------------------------------------------

_WINDOW_DECADES = 1e10
_MIN_WINDOW_SAMPLES = 50


def _linfit(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float, float, float]:
    """Least-squares line fit: slope, intercept, SSE, se(slope), se(intercept)."""
    n = len(x)
    mx = float(x.mean())
    my = float(y.mean())
    dx = x - mx
    dy = y - my
    sxx = float(dx @ dx)
    sxy = float(dx @ dy)
    syy = float(dy @ dy)
    if sxx <= 0.0:
        return (0.0, my, syy, math.inf, math.inf)
    slope = sxy / sxx
    sse = max(syy - slope * sxy, 0.0)
    var = sse / max(n - 2, 1)
    se_slope = math.sqrt(var / sxx)
    se_inter = math.sqrt(var * (1.0 / n + mx * mx / sxx))
    return (slope, my - slope * mx, sse, se_slope, se_inter)


def _window_mask(d: np.ndarray, d_last: float, spacing: float) -> np.ndarray:
    floor = max(32.0 * d_last, 4.0 * spacing)
    return (d >= floor) & (d <= floor * _WINDOW_DECADES)


def _optimize_dlast(t: np.ndarray, Y: np.ndarray) -> float:
    """Choose the time offset from the last sample to the blow-up instant.

    Parametrized as d_last = T_b - t[-1]; distances from T_b are computed
    as (t[-1] - t) + d_last, which keeps the tail resolution exact.  The
    offset is chosen by golden-section search to make log Y vs log
    distance maximally linear over the tail window.
    """
    n = len(t)
    t_last = t[-1]
    rev = t_last - t
    spacing = t_last - t[-2]
    lo = math.log(0.01 * spacing)
    hi = math.log(max(float(rev[max(0, n - 30)]), 0.02 * spacing))
    if hi <= lo:
        hi = lo + 1.0

    def objective(ld: float) -> float:
        d_last = math.exp(ld)
        d = rev + d_last
        mask = _window_mask(d, d_last, spacing)
        if int(mask.sum()) < _MIN_WINDOW_SAMPLES:
            return math.inf
        x = np.log(d[mask])
        total = 0.0
        for j in range(Y.shape[1]):
            yj = Y[mask, j]
            good = yj > 0.0
            if int(good.sum()) < _MIN_WINDOW_SAMPLES:
                continue
            _, _, sse, _, _ = _linfit(x[good], np.log(yj[good]))
            total += sse
        return total

    gr = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c1 = b - gr * (b - a)
    c2 = a + gr * (b - a)
    f1, f2 = objective(c1), objective(c2)
    for _ in range(160):
        if f1 < f2:
            b, c2, f2 = c2, c1, f1
            c1 = b - gr * (b - a)
            f1 = objective(c1)
        else:
            a, c1, f1 = c1, c2, f2
            c2 = a + gr * (b - a)
            f2 = objective(c2)
    return math.exp(0.5 * (a + b))


@dataclass(frozen=True)
class FitReport:
    """Power-law tail fit y_i ~ eta_i * (T_b - s)^{p_i} of a blow-up trajectory."""

    Tb: float
    exponents: tuple[float, ...]
    exponent_halfwidths: tuple[float, ...]
    etas: tuple[float, ...]
    eta_halfwidths: tuple[float, ...]
    n_window: int
    window: tuple[float, float]


def fit_asymptotics(traj: Trajectory,
                    window: tuple[float, float] | None = None) -> FitReport:
    """Fit per-component blow-up power laws to a trajectory tail.

    Requires a trajectory that actually terminated in blow-up fashion
    (component floor/ceiling or step underflow) with at least 50 usable
    tail samples; otherwise raises ``ValueError``.  Exponents and
    prefactors come from a log-log line fit over an automatically chosen
    tail window; half-widths are two standard errors of the fit.

    ``window``, when given, restricts the fit to samples whose distance
    to the blow-up instant lies in ``[window[0], window[1]]`` instead of
    the automatic choice.  Slowly converging orbits need a window placed
    far below the pre-asymptotic transient (paired with a run pushed
    deep via a small ``h_min``) before the fitted exponents settle.
    """
    if traj.termination not in _BLOWUP_TERMINATIONS:
        raise ValueError(
            f"trajectory did not terminate at a blow-up (termination="
            f"{traj.termination.value}); nothing to fit")
    t = np.asarray(traj.times)
    Y = np.asarray(traj.states)
    if len(t) < _MIN_WINDOW_SAMPLES + 10:
        raise ValueError(f"only {len(t)} samples; too few for a tail fit")
    d_last = _optimize_dlast(t, Y)
    rev = t[-1] - t
    spacing = float(t[-1] - t[-2])
    d = rev + d_last
    if window is not None:
        lo, hi = float(window[0]), float(window[1])
        if not (0.0 < lo < hi):
            raise ValueError("window must satisfy 0 < window[0] < window[1]")
        mask = (d >= lo) & (d <= hi)
    else:
        mask = _window_mask(d, d_last, spacing)
    n_window = int(mask.sum())
    if n_window < _MIN_WINDOW_SAMPLES:
        raise ValueError(f"tail window holds {n_window} samples; need "
                         f"{_MIN_WINDOW_SAMPLES}")
    x = np.log(d[mask])
    exps, exp_hw, etas, eta_hw = [], [], [], []
    for j in range(Y.shape[1]):
        yj = Y[mask, j]
        good = yj > 0.0
        if int(good.sum()) < _MIN_WINDOW_SAMPLES:
            raise ValueError(f"component {j} has too few positive tail samples")
        slope, inter, _, se_s, se_i = _linfit(x[good], np.log(yj[good]))
        exps.append(slope)
        exp_hw.append(2.0 * se_s)
        etas.append(math.exp(inter))
        eta_hw.append(math.exp(inter) * 2.0 * se_i)
    return FitReport(Tb=float(t[-1] + d_last),
                     exponents=tuple(exps), exponent_halfwidths=tuple(exp_hw),
                     etas=tuple(etas), eta_halfwidths=tuple(eta_hw),
                     n_window=n_window,
                     window=(float(d[mask].min()), float(d[mask].max())))


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------

def _guards(flow: Flow):
    if flow is Flow.RICCI_NORMALIZED:
        def g1(t, y):  # holds on the A-dominant regime
            return y[0] - y[1]

        def g2(t, y):  # holds on the B-dominant (pancake) regime
            return (y[1] - y[2]) - y[0]

        return (g1, "A - B", g2, "(B - C) - A")

    def g1(t, y):  # A at least the curvature gap B - C
        return y[0] - (y[1] - y[2])

    def g2(t, y):  # A below the scale-invariant sectional-root threshold
        B, C = y[1], y[2]
        return (2.0 * math.sqrt(B * B - B * C + C * C) - B - C) / 3.0 - y[0]

    return (g1, "A - (B - C)", g2, "threshold(B, C) - A")


@dataclass
class ClassificationReport:
    """Basin label and optional blow-up fit for one backward orbit.

    ``label`` is "Q1", "Q2", or "NearS0".  ``trigger`` describes the
    guard crossing that certified the label (None for NearS0);
    ``trigger_time`` is the backward time of the crossing (0.0 when the
    guard already held at the start).  When the input had B < C the
    symmetric relabeling B <-> C is applied first and ``swapped_bc`` is
    set; fitted components refer to the relabeled order.  ``exponents``
    and ``etas`` are (value, halfwidth) pairs per component when a fit
    was made.  ``separatrix_distance`` is filled for NearS0: the planar
    distance from the final projected state to the traced separatrix.
    """

    flow: Flow
    label: str
    trigger: str | None
    trigger_time: float | None
    swapped_bc: bool
    Tb_estimate: float | None
    exponents: tuple[tuple[float, float], ...] | None
    etas: tuple[tuple[float, float], ...] | None
    separatrix_distance: float | None
    termination: str


def classify(flow: Flow, m0: MetricDiag, *, with_fit: bool = True,
             rtol: float = 1e-10, atol: float = 1e-12,
             t_max: float = 1e6) -> ClassificationReport:
    """Label the backward orbit of ``m0`` by its basin (Q1 / Q2 / NearS0).

    Integrates the backward flow and watches two scale-invariant guards;
    the first crossing fixes the label.  With ``with_fit`` the run
    continues to blow-up and the tail is fitted (T_b, exponents, etas);
    without it the run stops at the first crossing (label only, faster).
    Inputs with B < C are relabeled symmetrically first.
    """
    swapped = m0.B < m0.C
    m = m0.swapped_bc() if swapped else m0
    g1, g1_desc, g2, g2_desc = _guards(flow)
    y0 = m.as_tuple()

    g2_now = g2(0.0, y0)
    g2_holds = g2_now >= 0.0 if flow is Flow.RICCI_NORMALIZED else g2_now > 0.0
    if g1(0.0, y0) >= 0.0:
        label, trigger, t_trig = "Q1", g1_desc, 0.0
        immediate = True
    elif g2_holds:
        label, trigger, t_trig = "Q2", g2_desc, 0.0
        immediate = True
    else:
        label, trigger, t_trig = "NearS0", None, None
        immediate = False

    spec = FlowSpec(flow, Direction.BACKWARD)
    action = EventAction.RECORD if with_fit else EventAction.STOP
    events = [EventSpec("Q1", g1, EventDirection.RISING, action),
              EventSpec("Q2", g2, EventDirection.RISING, action)]
    cfg = IntegratorConfig(rtol=rtol, atol=atol)

    traj: Trajectory | None = None
    if immediate and not with_fit:
        return ClassificationReport(
            flow=flow, label=label, trigger=f"{trigger} held at s = 0",
            trigger_time=0.0, swapped_bc=swapped, Tb_estimate=None,
            exponents=None, etas=None, separatrix_distance=None,
            termination="NotIntegrated")

    run_events = [] if immediate else events
    traj = integrate(_fields.rhs(spec), y0, (0.0, t_max), cfg, run_events)

    if not immediate and traj.events:
        t_trig, ev_id, _ = traj.events[0]
        label = ev_id
        trigger = g1_desc if ev_id == "Q1" else g2_desc
        trigger = f"{trigger} crossed zero at s = {t_trig:.6g}"
    elif immediate:
        trigger = f"{trigger} held at s = 0"

    Tb = None
    exps = None
    etas = None
    sep_dist = None
    if with_fit and traj.termination in _BLOWUP_TERMINATIONS:
        try:
            fit = fit_asymptotics(traj)
        except ValueError as exc:
            logger.warning("classification fit skipped: %s", exc)
        else:
            Tb = fit.Tb
            exps = tuple(zip(fit.exponents, fit.exponent_halfwidths))
            etas = tuple(zip(fit.etas, fit.eta_halfwidths))
    if label == "NearS0":
        chart = _CHART_OF_FLOW[flow]
        curve = trace_separatrix(flow)
        A, B, C = traj.y_end
        if chart is Chart.RICCI_BC:
            p = PlanarPoint(B / A, C / A, chart)
        else:
            p = PlanarPoint(A / B, C / B, chart)
        sep_dist = curve.distance(p)

    return ClassificationReport(
        flow=flow, label=label, trigger=trigger,
        trigger_time=t_trig, swapped_bc=swapped, Tb_estimate=Tb,
        exponents=exps, etas=etas, separatrix_distance=sep_dist,
        termination=traj.termination.value)


# ---------------------------------------------------------------------------
# degenerate (separatrix) asymptotics
# ---------------------------------------------------------------------------

def _extrapolate_sqrt(sprime: np.ndarray, values: np.ndarray) -> float:
    """Limit as s' -> 0 of values with O(sqrt(s')) corrections."""
    slope, inter, _, _, _ = _linfit(np.sqrt(sprime), values)
    return inter


def _extrapolate_linear(sprime: np.ndarray, values: np.ndarray) -> float:
    """Limit as s' -> 0 of values with O(s') corrections."""
    slope, inter, _, _, _ = _linfit(sprime, values)
    return inter


def _monotone(vals, increasing: bool, rel_slack: float = 1e-10) -> bool:
    prev = vals[0]
    for v in vals[1:]:
        slack = rel_slack * max(abs(prev), abs(v), 1e-300)
        if increasing:
            if v < prev - slack:
                return False
        else:
            if v > prev + slack:
                return False
        prev = v
    return True


_TRACK_REL = 1e-3      # relative guard excursion that marks separatrix escape
_WINDOW_CUSHION = 8.0  # extrapolation-window floor, in units of the escape distance
_WINDOW_RATIO = 100.0  # window ceiling over window floor
_WINDOW_SHALLOW = 0.02  # window ceiling as a fraction of the tracked range


@dataclass(frozen=True)
class Case3Report:
    """Separatrix-regime asymptotics of one backward blow-up trajectory.

    Ricci: A/B -> 1, C/(T_b - s) -> (8/3) A B C, A sqrt(T_b - s) -> eta.
    XCF: B and C share a finite limit eta, (B - C)/sqrt(T_b - s) -> 8
    sqrt 2, and A eta / (T_b - s) -> 64.  The monotonicity flags follow
    each regime's natural orientation — the direction in which the
    separatrix orbit has A, B non-decreasing and C non-increasing:
    backward time (s increasing) for Ricci, forward time for XCF.
    """

    flow: Flow
    Tb: float
    a_over_b: float | None
    c_over_sprime: float | None
    a_sqrt_sprime: float | None
    eta: float | None
    b_minus_c_over_sqrt_sprime: float | None
    a_eta_over_sprime: float | None
    a_nondecreasing_in_t: bool
    b_nondecreasing_in_t: bool
    c_nonincreasing_in_t: bool


def _guard_arrays(flow: Flow, A: np.ndarray, B: np.ndarray, C: np.ndarray
                  ) -> tuple[np.ndarray, np.ndarray]:
    if flow is Flow.RICCI_NORMALIZED:
        return (A - B, (B - C) - A)
    g2 = (2.0 * np.sqrt(B * B - B * C + C * C) - B - C) / 3.0 - A
    return (A - (B - C), g2)


def case3_diagnostics(traj: Trajectory, flow: Flow) -> Case3Report:
    """Degenerate-regime limits for a backward orbit seeded on the separatrix.

    A numerical seed is never exactly on the separatrix, so the orbit can
    only shadow it for a finite span: the planar saddle's unstable mode
    amplifies the seed error until one classification guard fires and
    the run finishes as a clean Q1/Q2 blow-up.  The diagnostics use the
    tracked span only — the samples before either guard's value exceeds
    1e-3 of the metric scale — and reject trajectories that leave the
    separatrix almost immediately (clean Q1/Q2 orbits belong to
    :func:`fit_asymptotics` instead).

    The blow-up time T_b is fitted from the component that this regime
    makes asymptotically linear in time (C for Ricci, A for XCF): a line
    fit over the last decades of the tracked span, refined iteratively.
    Each limit is then extrapolated to T_b - s -> 0, linearly in
    sqrt(T_b - s) (or in T_b - s for the XCF eta, whose correction is
    first order).
    """
    t_all = np.asarray(traj.times)
    Y = np.asarray(traj.states)
    if Y.shape[0] < _MIN_WINDOW_SAMPLES + 10:
        raise ValueError("too few samples for separatrix diagnostics")
    A, B, C = Y[:, 0], Y[:, 1], Y[:, 2]
    if B[0] < C[0]:  # normalize to the B >= C labeling
        B, C = C, B
    g1_vals, g2_vals = _guard_arrays(flow, A, B, C)
    scale = np.maximum(np.abs(A), np.maximum(np.abs(B), np.abs(C)))
    rel = np.maximum(g1_vals, g2_vals) / scale
    escaped = np.nonzero(rel > _TRACK_REL)[0]
    span = int(escaped[0]) if escaped.size else len(t_all)
    if span < _MIN_WINDOW_SAMPLES + 10:
        raise ValueError(
            f"a classification guard fires after {span} samples; separatrix "
            "diagnostics need a run seeded on the traced curve (clean Q1/Q2 "
            "orbits belong to fit_asymptotics)")
    t = t_all[:span]
    A, B, C = A[:span], B[:span], C[:span]

    # T_b from the asymptotically linear component, iteratively re-windowed.
    # The first pass drops a tail of samples: nodes cluster near the escape,
    # where the linear law bends away from the separatrix regime.  Larger
    # drops are tried in turn for orbits with earlier escapes.
    lin = C if flow is Flow.RICCI_NORMALIZED else A
    Tb = math.nan
    for drop in (20, 6, 3, 2):
        end = span - max(5, span // drop)
        half = end // 2
        if end - half < _MIN_WINDOW_SAMPLES // 2:
            continue
        slope, inter, _, _, _ = _linfit(t[half:end], lin[half:end])
        if slope < 0.0 and -inter / slope > t[-1]:
            Tb = -inter / slope
            break
    else:
        if np.all(np.diff(lin) < 0.0):
            # monotone decay but every line fit roots inside the samples:
            # start the refinement just past the data and let it pull in
            Tb = t[-1] + 0.01 * (t[-1] - t[0])
    if not math.isfinite(Tb):
        raise ValueError(
            "no component vanishes linearly toward the blow-up; "
            "not a separatrix-regime orbit")
    mask = np.zeros(span, dtype=bool)
    for _ in range(3):
        sp = Tb - t
        if not sp[-1] > 0.0:
            raise ValueError("blow-up time estimate fell inside the sample range")
        lo = _WINDOW_CUSHION * float(sp[-1])
        hi = min(lo * _WINDOW_RATIO, _WINDOW_SHALLOW * float(sp[0]))
        mask = (sp >= lo) & (sp <= hi)
        if int(mask.sum()) < _MIN_WINDOW_SAMPLES:
            mask = (sp >= lo) & (sp <= 0.25 * float(sp[0]))
        if int(mask.sum()) < _MIN_WINDOW_SAMPLES:
            raise ValueError("tail window too small for separatrix diagnostics")
        slope, inter, _, _, _ = _linfit(t[mask], lin[mask])
        if not slope < 0.0:
            raise ValueError(
                "no component vanishes linearly toward the blow-up; "
                "not a separatrix-regime orbit")
        Tb = -inter / slope
    sp = Tb - t
    spm = sp[mask]

    a_over_b = c_over_sprime = a_sqrt_sprime = None
    eta = b_gap = a_eta = None
    if flow is Flow.RICCI_NORMALIZED:
        a_over_b = _extrapolate_sqrt(spm, (A / B)[mask])
        c_over_sprime = _extrapolate_sqrt(spm, C[mask] / spm)
        a_sqrt_sprime = _extrapolate_sqrt(spm, A[mask] * np.sqrt(spm))
    else:
        eta = _extrapolate_linear(spm, ((B + C) * 0.5)[mask])
        b_gap = _extrapolate_sqrt(spm, (B - C)[mask] / np.sqrt(spm))
        a_eta = _extrapolate_sqrt(spm, A[mask] * eta / spm)

    # Orientation in which the regime's monotonicity statement holds:
    # Ricci along backward time (sample order), XCF along forward time.
    if flow is Flow.RICCI_NORMALIZED:
        a_mono, b_mono, c_mono = A, B, C
    else:
        a_mono, b_mono, c_mono = A[::-1], B[::-1], C[::-1]
    return Case3Report(
        flow=flow, Tb=float(Tb),
        a_over_b=a_over_b, c_over_sprime=c_over_sprime,
        a_sqrt_sprime=a_sqrt_sprime,
        eta=eta, b_minus_c_over_sqrt_sprime=b_gap, a_eta_over_sprime=a_eta,
        a_nondecreasing_in_t=_monotone(a_mono, increasing=True),
        b_nondecreasing_in_t=_monotone(b_mono, increasing=True),
        c_nonincreasing_in_t=_monotone(c_mono, increasing=False),
    )


# ---------------------------------------------------------------------------
# bisection onto the separatrix
# ---------------------------------------------------------------------------

def _project_raw(flow: Flow, m: MetricDiag) -> tuple[float, float]:
    if flow is Flow.RICCI_NORMALIZED:
        return (m.B / m.A, m.C / m.A)
    return (m.A / m.B, m.C / m.B)


def separatrix_bisection(flow: Flow, m_q1: MetricDiag, m_q2: MetricDiag,
                         *, planar_tol: float = 1e-10,
                         max_iter: int = 200) -> MetricDiag:
    """Bisect a metric segment onto the separatrix surface.

    The endpoints must classify to opposite basins (in either order).
    The segment is bisected in metric coordinates, each midpoint labeled
    without fitting, until the projected bracket endpoints are within
    ``planar_tol`` of each other in the chart; the midpoint is returned.
    Gives an independent, tracing-free point on the separatrix.
    """
    la = classify(flow, m_q1, with_fit=False).label
    lb = classify(flow, m_q2, with_fit=False).label
    if {la, lb} != {"Q1", "Q2"}:
        raise ValueError(
            f"endpoints must classify to opposite basins, got {la}/{lb}")
    lo = np.asarray(m_q1.as_tuple())
    hi = np.asarray(m_q2.as_tuple())
    label_lo = la
    for _ in range(max_iter):
        p_lo = _project_raw(flow, MetricDiag(*lo))
        p_hi = _project_raw(flow, MetricDiag(*hi))
        if math.hypot(p_lo[0] - p_hi[0], p_lo[1] - p_hi[1]) < planar_tol:
            break
        mid = 0.5 * (lo + hi)
        m_mid = MetricDiag(*mid)
        label_mid = classify(flow, m_mid, with_fit=False).label
        if label_mid == "NearS0":
            return m_mid
        if label_mid == label_lo:
            lo = mid
        else:
            hi = mid
    return MetricDiag(*(0.5 * (lo + hi)))
