"""Adaptive explicit Runge-Kutta integration with events and dense output.

A Dormand-Prince 5(4) embedded pair (FSAL) with:

* proportional-integral step-size control (safety 0.9, step-ratio clamp
  [0.2, 5], PI exponents 0.17 / 0.04),
* quartic/quintic dense output on every accepted step,
* event location by bisection on the dense interpolant,
* blow-up-oriented termination: per-component magnitude floor/ceiling
  thresholds, step-size underflow (the signature of a finite-time
  singularity), a step budget, and event-triggered stops.

Everything is computed on plain Python floats with a fixed sequential
order of operations, so identical inputs produce bit-identical
trajectories.  The engine holds no global state; any number of
integrations may run concurrently as long as the field callables are pure.
"""

from __future__ import annotations

import enum
import logging
import math
from bisect import bisect_right
from dataclasses import dataclass, field as dataclass_field
from typing import Callable, Sequence

__all__ = [
    "IntegratorConfig",
    "Trajectory",
    "EventSpec",
    "Termination",
    "EventDirection",
    "EventAction",
    "NumericalError",
    "integrate",
    "dense_eval",
]

logger = logging.getLogger(__name__)

State = tuple[float, ...]
Field = Callable[[float, State], Sequence[float]]


class NumericalError(RuntimeError):
    """Hard numerical failure (non-finite field output at the minimum step)."""


class Termination(enum.Enum):
    TIME_REACHED = "TimeReached"
    COMPONENT_FLOOR = "ComponentFloor"
    COMPONENT_CEILING = "ComponentCeiling"
    STEP_UNDERFLOW = "StepUnderflow"
    EVENT_STOP = "EventStop"
    STEP_BUDGET = "StepBudget"


class EventDirection(enum.Enum):
    RISING = "Rising"
    FALLING = "Falling"
    ANY = "Any"


class EventAction(enum.Enum):
    RECORD = "Record"
    STOP = "Stop"


@dataclass(frozen=True)
class EventSpec:
    """A scalar guard whose sign change along the trajectory is located.

    ``guard(t, y)`` must be continuous along trajectories.  ``direction``
    selects which sign changes count (Rising: - to +, Falling: + to -).
    ``action`` Record logs the crossing; Stop also terminates integration
    at the crossing point.
    """

    id: str
    guard: Callable[[float, State], float]
    direction: EventDirection = EventDirection.ANY
    action: EventAction = EventAction.RECORD


@dataclass(frozen=True)
class IntegratorConfig:
    """Tolerances, step bounds and blow-up thresholds.

    ``component_floor``/``component_ceiling`` apply to component magnitudes
    |y_i| at accepted nodes; crossing either one terminates integration
    (ComponentFloor / ComponentCeiling).  ``None`` disables a threshold.
    ``h_init=None`` selects the step automatically.
    """

    rtol: float = 1e-10
    atol: float = 1e-12
    h_init: float | None = None
    h_min: float = 1e-16
    component_floor: float | None = 1e-13
    component_ceiling: float | None = 1e13
    max_steps: int = 100_000_000

    def __post_init__(self) -> None:
        if not (self.rtol > 0.0 and self.atol > 0.0 and self.h_min > 0.0):
            raise ValueError("rtol, atol and h_min must be positive")
        if self.h_init is not None and not (self.h_init > self.h_min):
            raise ValueError("h_init must exceed h_min")
        floor = self.component_floor
        ceiling = self.component_ceiling
        if floor is not None and floor <= 0.0:
            raise ValueError("component_floor must be positive (or None)")
        if ceiling is not None and ceiling <= 0.0:
            raise ValueError("component_ceiling must be positive (or None)")
        if floor is not None and ceiling is not None and not (floor < ceiling):
            raise ValueError("component_floor must be below component_ceiling")
        if self.max_steps <= 0:
            raise ValueError("max_steps must be positive")


@dataclass
class Trajectory:
    """Accepted nodes, dense-output segments, events and termination reason.

    ``dense[i]`` interpolates on [times[i], times[i+1]] and holds
    ``(t0, h, rcont)`` with five interpolation coefficient vectors.
    """

    times: list[float]
    states: list[State]
    dense: list[tuple[float, float, tuple[State, State, State, State, State]]]
    termination: Termination
    events: list[tuple[float, str, State]] = dataclass_field(default_factory=list)

    @property
    def t_end(self) -> float:
        return self.times[-1]

    @property
    def y_end(self) -> State:
        return self.states[-1]

    def __len__(self) -> int:
        return len(self.times)


# Dormand-Prince 5(4) tableau.
_C2, _C3, _C4, _C5 = 0.2, 0.3, 0.8, 8.0 / 9.0
_A21 = 0.2
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
_A61, _A62, _A63, _A64, _A65 = (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0,
                                49.0 / 176.0, -5103.0 / 18656.0)
_A71, _A73, _A74, _A75, _A76 = (35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0,
                                -2187.0 / 6784.0, 11.0 / 84.0)
# Error coefficients: 5th-order weights minus embedded 4th-order weights.
_E1, _E3, _E4, _E5, _E6, _E7 = (71.0 / 57600.0, -71.0 / 16695.0, 71.0 / 1920.0,
                                -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0)
# Dense-output coefficients.
_D1 = -12715105075.0 / 11282082432.0
_D3 = 87487479700.0 / 32700410799.0
_D4 = -10690763975.0 / 1880347072.0
_D5 = 701980252875.0 / 199316789632.0
_D6 = -1453857185.0 / 822651844.0
_D7 = 69997945.0 / 29380423.0

# Step controller constants (PI control).
_SAFETY = 0.9
_BETA = 0.04
_EXPO1 = 0.2 - _BETA * 0.75  # 0.17
_RATIO_MIN = 0.2
_RATIO_MAX = 5.0

_EVENT_BISECT_ITERS = 64


def _check_finite(vec: Sequence[float]) -> bool:
    for v in vec:
        if not math.isfinite(v):
            return False
    return True


def _rms_scaled(vals: State, sc: Sequence[float]) -> float:
    """RMS of vals/sc, saturating to inf before the squares can overflow."""
    acc = 0.0
    for v, s in zip(vals, sc):
        r = abs(v) / s
        if r > 1e150 or not math.isfinite(r):
            return math.inf
        acc += r * r
    return math.sqrt(acc / len(vals))


def _initial_step(f: Field, t0: float, y0: State, f0: State,
                  t_end: float, rtol: float, atol: float, h_min: float) -> float:
    """Classic order-based heuristic for the first step size."""
    n = len(y0)
    sc = [atol + rtol * abs(y0[i]) for i in range(n)]
    d0 = _rms_scaled(y0, sc)
    d1 = _rms_scaled(f0, sc)
    if not math.isfinite(d1):
        return h_min
    if d0 < 1e-5 or d1 < 1e-10:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    h0 = min(h0, t_end - t0)
    y1 = tuple(y0[i] + h0 * f0[i] for i in range(n))
    f1 = tuple(float(v) for v in f(t0 + h0, y1))
    if not _check_finite(f1):
        return max(h_min, 1e-6 * (t_end - t0))
    d2 = _rms_scaled(tuple(f1[i] - f0[i] for i in range(n)), sc) / h0
    dm = max(d1, d2)
    h1 = (0.01 / dm) ** 0.2 if dm > 1e-15 else max(1e-6, h0 * 1e3)
    return max(h_min, min(100.0 * h0, h1, t_end - t0))


def _dense_coeffs(y0: State, y1: State, h: float,
                  k1: State, k3: State, k4: State, k5: State, k6: State, k7: State,
                  ) -> tuple[State, State, State, State, State]:
    n = len(y0)
    rc1 = y0
    rc2 = tuple(y1[i] - y0[i] for i in range(n))
    rc3 = tuple(h * k1[i] - rc2[i] for i in range(n))
    rc4 = tuple(rc2[i] - h * k7[i] - rc3[i] for i in range(n))
    rc5 = tuple(h * (_D1 * k1[i] + _D3 * k3[i] + _D4 * k4[i]
                     + _D5 * k5[i] + _D6 * k6[i] + _D7 * k7[i]) for i in range(n))
    return (rc1, rc2, rc3, rc4, rc5)


def _dense_point(t0: float, h: float,
                 rcont: tuple[State, State, State, State, State], t: float) -> State:
    rc1, rc2, rc3, rc4, rc5 = rcont
    th = (t - t0) / h
    th1 = 1.0 - th
    n = len(rc1)
    return tuple(
        rc1[i] + th * (rc2[i] + th1 * (rc3[i] + th * (rc4[i] + th1 * rc5[i])))
        for i in range(n)
    )


def _crossed(g0: float, g1: float, direction: EventDirection) -> bool:
    if direction is EventDirection.RISING:
        return g0 < 0.0 <= g1
    if direction is EventDirection.FALLING:
        return g0 > 0.0 >= g1
    return (g0 < 0.0 <= g1) or (g0 > 0.0 >= g1)


def _locate_event(guard: Callable[[float, State], float],
                  t0: float, t1: float, g0: float,
                  seg_t0: float, seg_h: float,
                  rcont: tuple[State, State, State, State, State]) -> float:
    """Bisect the crossing time of ``guard`` inside [t0, t1] on the dense output."""
    lo, hi, glo = t0, t1, g0
    for _ in range(_EVENT_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        gm = guard(mid, _dense_point(seg_t0, seg_h, rcont, mid))
        # keep the bracket that preserves the sign change relative to g at lo
        if (glo < 0.0 <= gm) or (glo > 0.0 >= gm):
            hi = mid
        else:
            lo, glo = mid, gm
    return hi


def integrate(f: Field, y0: Sequence[float], t_span: tuple[float, float],
              config: IntegratorConfig | None = None,
              events: Sequence[EventSpec] = ()) -> Trajectory:
    """Integrate ``y' = f(t, y)`` forward over ``t_span``.

    Adaptive Dormand-Prince 5(4); local error per step is held below
    ``atol + rtol*|y|`` componentwise in RMS norm.  Events are located on
    the dense output.  The run ends with a :class:`Termination` reason:
    reaching ``t_span[1]``, a component magnitude crossing the configured
    floor/ceiling, step-size underflow (finite-time blow-up signature),
    an Stop-action event, or the step budget.

    Raises :class:`NumericalError` if the field returns non-finite values
    at the minimum step size, and ``ValueError`` for degenerate input.
    """
    cfg = config or IntegratorConfig()
    t0, t_end = float(t_span[0]), float(t_span[1])
    if not (math.isfinite(t0) and math.isfinite(t_end)) or not t_end > t0:
        raise ValueError(f"degenerate t_span {t_span!r}: need t_end > t0")
    y = tuple(float(v) for v in y0)
    if not _check_finite(y):
        raise ValueError(f"non-finite initial state {y0!r}")
    n = len(y)
    rtol, atol = cfg.rtol, cfg.atol

    k1 = tuple(float(v) for v in f(t0, y))
    if not _check_finite(k1):
        raise NumericalError(f"field non-finite at initial state {y!r}")
    h = cfg.h_init if cfg.h_init is not None else _initial_step(
        f, t0, y, k1, t_end, rtol, atol, cfg.h_min)
    h = min(h, t_end - t0)

    times: list[float] = [t0]
    states: list[State] = [y]
    dense: list[tuple[float, float, tuple[State, State, State, State, State]]] = []
    recorded: list[tuple[float, str, State]] = []
    g_prev: list[float] = [ev.guard(t0, y) for ev in events]

    t = t0
    facold = 1e-4
    rejected_last = False
    termination: Termination | None = None
    attempts = 0

    while termination is None:
        if attempts >= cfg.max_steps:
            termination = Termination.STEP_BUDGET
            break
        attempts += 1

        if h < cfg.h_min:
            if rejected_last:
                termination = Termination.STEP_UNDERFLOW
                break
            h = cfg.h_min
        last_step = t + h >= t_end
        if last_step:
            h = t_end - t
        if t + h == t:  # time no longer advances in double precision
            termination = Termination.STEP_UNDERFLOW
            break

        # --- stages (FSAL: k1 is f at the current node) ---
        y2 = tuple(y[i] + h * (_A21 * k1[i]) for i in range(n))
        k2 = tuple(float(v) for v in f(t + _C2 * h, y2))
        y3 = tuple(y[i] + h * (_A31 * k1[i] + _A32 * k2[i]) for i in range(n))
        k3 = tuple(float(v) for v in f(t + _C3 * h, y3))
        y4 = tuple(y[i] + h * (_A41 * k1[i] + _A42 * k2[i] + _A43 * k3[i]) for i in range(n))
        k4 = tuple(float(v) for v in f(t + _C4 * h, y4))
        y5 = tuple(y[i] + h * (_A51 * k1[i] + _A52 * k2[i] + _A53 * k3[i] + _A54 * k4[i])
                   for i in range(n))
        k5 = tuple(float(v) for v in f(t + _C5 * h, y5))
        y6 = tuple(y[i] + h * (_A61 * k1[i] + _A62 * k2[i] + _A63 * k3[i]
                               + _A64 * k4[i] + _A65 * k5[i]) for i in range(n))
        k6 = tuple(float(v) for v in f(t + h, y6))
        y1 = tuple(y[i] + h * (_A71 * k1[i] + _A73 * k3[i] + _A74 * k4[i]
                               + _A75 * k5[i] + _A76 * k6[i]) for i in range(n))
        k7 = tuple(float(v) for v in f(t + h, y1))

        if not (_check_finite(k2) and _check_finite(k3) and _check_finite(k4)
                and _check_finite(k5) and _check_finite(k6) and _check_finite(k7)
                and _check_finite(y1)):
            if h <= cfg.h_min:
                raise NumericalError(
                    f"field returned non-finite values at t={t!r} with minimum step")
            h = 0.5 * h
            rejected_last = True
            continue

        # --- embedded error estimate ---
        err_acc = 0.0
        for i in range(n):
            e = h * (_E1 * k1[i] + _E3 * k3[i] + _E4 * k4[i]
                     + _E5 * k5[i] + _E6 * k6[i] + _E7 * k7[i])
            sc = atol + rtol * max(abs(y[i]), abs(y1[i]))
            ratio = abs(e) / sc
            if ratio > 1e150:  # squaring would overflow: certain rejection
                err_acc = math.inf
                break
            err_acc += ratio * ratio
        err = math.sqrt(err_acc / n) if math.isfinite(err_acc) else math.inf

        if err > 1.0:
            ratio = max(_RATIO_MIN, _SAFETY * err ** -_EXPO1)
            h *= ratio
            rejected_last = True
            continue

        # --- accepted ---
        t_new = t + h
        if last_step:
            t_new = t_end
        rcont = _dense_coeffs(y, y1, h, k1, k3, k4, k5, k6, k7)
        seg = (t, h, rcont)

        # --- events on this step ---
        stop_time: float | None = None
        stop_state: State | None = None
        step_hits: list[tuple[float, str, State, EventAction]] = []
        for j, ev in enumerate(events):
            g1 = ev.guard(t_new, y1)
            if _crossed(g_prev[j], g1, ev.direction):
                t_star = _locate_event(ev.guard, t, t_new, g_prev[j], t, h, rcont)
                y_star = _dense_point(t, h, rcont, t_star)
                step_hits.append((t_star, ev.id, y_star, ev.action))
            g_prev[j] = g1
        step_hits.sort(key=lambda item: item[0])
        for t_star, ev_id, y_star, action in step_hits:
            if stop_time is not None and t_star > stop_time:
                break
            recorded.append((t_star, ev_id, y_star))
            if action is EventAction.STOP and stop_time is None:
                stop_time = t_star
                stop_state = y_star

        if stop_time is not None:
            assert stop_state is not None
            times.append(stop_time)
            states.append(stop_state)
            dense.append(seg)
            termination = Termination.EVENT_STOP
            break

        times.append(t_new)
        states.append(y1)
        dense.append(seg)

        # --- blow-up thresholds at the accepted node ---
        if cfg.component_floor is not None or cfg.component_ceiling is not None:
            for i in range(n):
                m = abs(y1[i])
                if cfg.component_floor is not None and m < cfg.component_floor:
                    termination = Termination.COMPONENT_FLOOR
                    break
                if cfg.component_ceiling is not None and m > cfg.component_ceiling:
                    termination = Termination.COMPONENT_CEILING
                    break
            if termination is not None:
                break

        if t_new >= t_end:
            termination = Termination.TIME_REACHED
            break

        # --- PI step-size update ---
        err_bounded = max(err, 1e-10)
        ratio = _SAFETY * err_bounded ** -_EXPO1 * facold ** _BETA
        ratio = min(_RATIO_MAX, max(_RATIO_MIN, ratio))
        if rejected_last:
            ratio = min(ratio, 1.0)
        facold = max(err, 1e-4)
        rejected_last = False
        t = t_new
        y = y1
        k1 = k7  # FSAL
        h *= ratio

    logger.debug("integrate: %d nodes, %d attempts, termination=%s",
                 len(times), attempts, termination.value)
    return Trajectory(times=times, states=states, dense=dense,
                      termination=termination, events=recorded)


def dense_eval(traj: Trajectory, t: float) -> State:
    """Evaluate the dense interpolant at ``t`` within the trajectory range.

    At a stored node the stored state is returned exactly.
    """
    times = traj.times
    if not times:
        raise ValueError("empty trajectory")
    if t < times[0] or t > times[-1]:
        raise ValueError(f"t={t!r} outside trajectory range [{times[0]!r}, {times[-1]!r}]")
    idx = bisect_right(times, t) - 1
    if idx >= 0 and times[idx] == t:
        return traj.states[idx]
    if idx >= len(traj.dense):
        idx = len(traj.dense) - 1
    t0, h, rcont = traj.dense[idx]
    return _dense_point(t0, h, rcont, t)
