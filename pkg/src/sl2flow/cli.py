"""Command-line interface.

Subcommands::

    curvature      curvature report at a metric point
    integrate      run a flow and emit the trajectory
    classify       basin label (and blow-up fit) for a backward orbit
    separatrix     trace a chart separatrix
    portrait       planar phase portrait (grid of orbits + separatrix)
    blowup-report  circle equilibria and the axis-sliding check
    exponents      blow-up exponent fit for a backward orbit

Common flags: ``--out`` (default stdout), ``--format`` (csv or json),
``--config`` (JSON file of defaults; explicit flags win).  The
``GEOMFLOW_LOG`` environment variable (error, warn, info, debug) sets
the log level on stderr.  Exit codes: 0 success, 2 invalid input,
3 numerical failure.  Identical invocations produce identical bytes.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

from .blowup import axis_nonapproach_check, circle_equilibria
from .engine import IntegratorConfig, NumericalError, integrate
from .fields import Direction, Flow, FlowSpec, rhs, volume_preserving_trajectory
from .milnor import MetricDiag, curvature_report
from .planar import Chart, PlanarPoint, in_domain, planar_field
from .separatrix import classify, fit_asymptotics, trace_separatrix

__all__ = ["main"]

logger = logging.getLogger(__name__)

_FLOWS = {"ricci": Flow.RICCI_NORMALIZED, "xcf": Flow.CROSS_CURVATURE}
_DIRECTIONS = {"forward": Direction.FORWARD, "backward": Direction.BACKWARD}
_LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING,
               "info": logging.INFO, "debug": logging.DEBUG}

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3


def _g(x: float) -> str:
    return format(float(x), ".17g")


def _setup_logging() -> None:
    raw = os.environ.get("GEOMFLOW_LOG", "warn").strip().lower()
    level = _LOG_LEVELS.get(raw)
    if level is None:
        level = logging.WARNING
    logging.basicConfig(level=level, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    if raw not in _LOG_LEVELS:
        logging.getLogger(__name__).warning(
            "unknown GEOMFLOW_LOG value %r; using warn", raw)


def _parse_metric(text: str) -> MetricDiag:
    parts = text.split(",")
    if len(parts) != 3:
        raise ValueError(f"--metric expects A,B,C (three numbers), got {text!r}")
    try:
        vals = [float(p) for p in parts]
    except ValueError:
        raise ValueError(f"--metric expects numbers, got {text!r}") from None
    return MetricDiag(*vals)


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError(f"config file {path} must hold a JSON object")
    return data


def _resolve(args: argparse.Namespace, config: dict, key: str, default):
    """Explicit flag > config file entry > built-in default."""
    val = getattr(args, key, None)
    if val is not None:
        return val
    if key in config:
        return config[key]
    return default


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def _json_dumps(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=True) + "\n"


def _integrator_config(args: argparse.Namespace, config: dict) -> IntegratorConfig:
    return IntegratorConfig(
        rtol=float(_resolve(args, config, "rtol", 1e-10)),
        atol=float(_resolve(args, config, "atol", 1e-12)),
    )


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_curvature(args: argparse.Namespace, config: dict) -> int:
    m = _parse_metric(args.metric)
    rep = curvature_report(m)
    fields = [
        ("k1", rep.k1), ("k2", rep.k2), ("k3", rep.k3),
        ("F1", rep.F1), ("F2", rep.F2), ("F3", rep.F3),
        ("ric1", rep.ricci[0]), ("ric2", rep.ricci[1]), ("ric3", rep.ricci[2]),
        ("h1", rep.cross[0]), ("h2", rep.cross[1]), ("h3", rep.cross[2]),
        ("scalar", rep.scalar),
    ]
    fmt = _resolve(args, config, "format", "json")
    if fmt == "json":
        _emit(_json_dumps({k: v for k, v in fields}), args.out)
    else:
        header = ",".join(k for k, _ in fields)
        row = ",".join(_g(v) for _, v in fields)
        _emit(f"{header}\n{row}\n", args.out)
    return EXIT_OK


def _cmd_integrate(args: argparse.Namespace, config: dict) -> int:
    m = _parse_metric(args.metric)
    flow = _FLOWS[_resolve(args, config, "flow", "ricci")]
    direction = _DIRECTIONS[_resolve(args, config, "direction", "forward")]
    t_end = float(_resolve(args, config, "t_end", 10.0))
    if not (t_end > 0.0 and math.isfinite(t_end)):
        raise ValueError(f"--t-end must be positive and finite, got {t_end!r}")
    spec = FlowSpec(flow, direction)
    if getattr(args, "volume_chart", False):
        if flow is not Flow.RICCI_NORMALIZED:
            raise ValueError("--volume-chart applies only to the ricci flow")
        traj = volume_preserving_trajectory(spec, m, (0.0, t_end),
                                            _integrator_config(args, config))
    else:
        traj = integrate(rhs(spec), m.as_tuple(), (0.0, t_end),
                         _integrator_config(args, config))
    fmt = _resolve(args, config, "format", "csv")
    if fmt == "json":
        payload = {
            "times": list(traj.times),
            "states": [list(s) for s in traj.states],
            "termination": traj.termination.value,
        }
        _emit(_json_dumps(payload), args.out)
    else:
        lines = ["t,A,B,C"]
        for t, (A, B, C) in zip(traj.times, traj.states):
            lines.append(f"{_g(t)},{_g(A)},{_g(B)},{_g(C)}")
        lines.append(f"# termination={traj.termination.value}")
        _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def _report_to_jsonable(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {k: _report_to_jsonable(v)
                for k, v in dataclasses.asdict(obj).items()}
    if isinstance(obj, dict):
        return {k: _report_to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_report_to_jsonable(v) for v in obj]
    if hasattr(obj, "value") and obj.__class__.__module__.startswith("sl2flow"):
        return obj.value  # enums
    return obj


def _cmd_classify(args: argparse.Namespace, config: dict) -> int:
    m = _parse_metric(args.metric)
    flow = _FLOWS[_resolve(args, config, "flow", "ricci")]
    cfg_rtol = float(_resolve(args, config, "rtol", 1e-10))
    cfg_atol = float(_resolve(args, config, "atol", 1e-12))
    rep = classify(flow, m, with_fit=not args.no_fit,
                   rtol=cfg_rtol, atol=cfg_atol)
    _emit(_json_dumps(_report_to_jsonable(rep)), args.out)
    return EXIT_OK


def _cmd_separatrix(args: argparse.Namespace, config: dict) -> int:
    flow = _FLOWS[_resolve(args, config, "flow", "ricci")]
    kwargs = {}
    if args.delta is not None:
        kwargs["delta"] = float(args.delta)
    if args.extent is not None:
        kwargs["extent"] = float(args.extent)
    curve = trace_separatrix(flow, **kwargs)
    fmt = _resolve(args, config, "format", "csv")
    if fmt == "json":
        payload = {
            "chart": curve.chart.value,
            "tangent_at_saddle": list(curve.tangent_at_saddle),
            "parameter_range": list(curve.parameter_range),
            "samples": [[x, y] for (x, y) in curve.samples],
        }
        _emit(_json_dumps(payload), args.out)
    else:
        lines = ["x,y"]
        for (x, y) in curve.samples:
            lines.append(f"{_g(x)},{_g(y)}")
        _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def _portrait_line(chart: Chart, seed: tuple[float, float],
                   t_max: float) -> list[tuple[float, float]]:
    """One orbit polyline through a seed: backward arc + seed + forward arc."""
    cfg = IntegratorConfig(rtol=1e-8, atol=1e-10,
                           component_floor=1e-6, component_ceiling=1e3)

    def fwd(t, y):
        return planar_field(chart, PlanarPoint(y[0], y[1], chart))

    def bwd(t, y):
        dx, dy = planar_field(chart, PlanarPoint(y[0], y[1], chart))
        return (-dx, -dy)

    pts: list[tuple[float, float]] = []
    try:
        tb = integrate(bwd, seed, (0.0, t_max), cfg)
        pts.extend((s[0], s[1]) for s in reversed(tb.states[1:]))
    except (NumericalError, ValueError):
        logger.warning("portrait: backward arc from %r failed", seed)
    pts.append(seed)
    try:
        tf = integrate(fwd, seed, (0.0, t_max), cfg)
        pts.extend((s[0], s[1]) for s in tf.states[1:])
    except (NumericalError, ValueError):
        logger.warning("portrait: forward arc from %r failed", seed)
    return pts


def _cmd_portrait(args: argparse.Namespace, config: dict) -> int:
    flow = _FLOWS[_resolve(args, config, "flow", "ricci")]
    chart = (Chart.RICCI_BC if flow is Flow.RICCI_NORMALIZED else Chart.XCF_AC)
    nx = int(_resolve(args, config, "nx", 10))
    ny = int(_resolve(args, config, "ny", 10))
    if nx < 1 or ny < 1:
        raise ValueError("--nx and --ny must be at least 1")
    if chart is Chart.RICCI_BC:
        default_box = (0.05, 3.0, 0.02, 2.5)
    else:
        default_box = (0.05, 2.0, 0.05, 0.95)
    x_min = float(_resolve(args, config, "x_min", default_box[0]))
    x_max = float(_resolve(args, config, "x_max", default_box[1]))
    y_min = float(_resolve(args, config, "y_min", default_box[2]))
    y_max = float(_resolve(args, config, "y_max", default_box[3]))
    if not (x_min < x_max and y_min < y_max):
        raise ValueError("portrait ranges must satisfy min < max")
    t_max = float(_resolve(args, config, "t_max", 40.0))

    curve = trace_separatrix(flow)
    seeds = []
    for i in range(nx):
        x = x_min + (x_max - x_min) * (i + 0.5) / nx
        for j in range(ny):
            y = y_min + (y_max - y_min) * (j + 0.5) / ny
            if in_domain(PlanarPoint(x, y, chart)):
                seeds.append((x, y))

    lines: list[tuple[int, list[tuple[float, float]]]] = [(0, list(curve.samples))]
    with ThreadPoolExecutor(max_workers=min(8, os.cpu_count() or 1)) as pool:
        futures = [(idx + 1, pool.submit(_portrait_line, chart, seed, t_max))
                   for idx, seed in enumerate(seeds)]
        for line_id, fut in futures:
            try:
                lines.append((line_id, fut.result()))
            except Exception:  # pragma: no cover - defensive
                logger.warning("portrait: line %d failed", line_id)

    out_lines = ["line_id,x,y"]
    for line_id, pts in lines:
        for (x, y) in pts:
            out_lines.append(f"{line_id},{_g(x)},{_g(y)}")
    _emit("\n".join(out_lines) + "\n", args.out)
    return EXIT_OK


def _cmd_blowup_report(args: argparse.Namespace, config: dict) -> int:
    theta0 = float(_resolve(args, config, "theta0", 0.5))
    r0 = float(_resolve(args, config, "r0", 0.1))
    eqs = circle_equilibria()
    axis = axis_nonapproach_check(theta0, r0)
    fmt = _resolve(args, config, "format", "json")
    if fmt == "csv":
        lines = ["theta,radial_rate,angular_rate,kind"]
        for eq in eqs:
            lines.append(f"{_g(eq.theta)},{_g(eq.radial_rate)},"
                         f"{_g(eq.angular_rate)},{eq.kind.value}")
        _emit("\n".join(lines) + "\n", args.out)
        return EXIT_OK
    payload = {
        "circle_equilibria": [
            {"theta": eq.theta, "radial_rate": eq.radial_rate,
             "angular_rate": eq.angular_rate, "kind": eq.kind.value}
            for eq in eqs
        ],
        "axis_check": {
            **_report_to_jsonable(axis),
            "start": {"theta0": theta0, "r0": r0},
            "conclusion": ("non-approach confirmed" if axis.passed
                           else "non-approach NOT confirmed"),
        },
    }
    _emit(_json_dumps(payload), args.out)
    return EXIT_OK


def _cmd_exponents(args: argparse.Namespace, config: dict) -> int:
    m = _parse_metric(args.metric)
    flow = _FLOWS[_resolve(args, config, "flow", "ricci")]
    spec = FlowSpec(flow, Direction.BACKWARD)
    traj = integrate(rhs(spec), m.as_tuple(), (0.0, 1e6),
                     _integrator_config(args, config))
    try:
        fit = fit_asymptotics(traj)
    except ValueError as exc:
        raise NumericalError(f"tail fit failed: {exc}") from exc
    payload = {
        "Tb": fit.Tb,
        "exponents": list(fit.exponents),
        "exponent_halfwidths": list(fit.exponent_halfwidths),
        "etas": list(fit.etas),
        "eta_halfwidths": list(fit.eta_halfwidths),
        "n_window": fit.n_window,
        "window": list(fit.window),
        "termination": traj.termination.value,
    }
    _emit(_json_dumps(payload), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser, *, fmt: bool = True) -> None:
    p.add_argument("--out", default=None, help="output file (default stdout)")
    p.add_argument("--config", default=None,
                   help="JSON file of default option values")
    if fmt:
        p.add_argument("--format", choices=["csv", "json"], default=None,
                       help="output format")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sl2flow",
        description="Numerical laboratory for geometric flows on a "
                    "left-invariant 3D metric cone.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("curvature", help="curvature report at a metric point")
    p.add_argument("--metric", required=True, help="A,B,C")
    _add_common(p)
    p.set_defaults(func=_cmd_curvature)

    p = sub.add_parser("integrate", help="run a flow and emit the trajectory")
    p.add_argument("--flow", choices=sorted(_FLOWS), default=None)
    p.add_argument("--direction", choices=sorted(_DIRECTIONS), default=None)
    p.add_argument("--metric", required=True, help="A,B,C")
    p.add_argument("--t-end", dest="t_end", type=float, default=None)
    p.add_argument("--rtol", type=float, default=None)
    p.add_argument("--atol", type=float, default=None)
    p.add_argument("--volume-chart", dest="volume_chart", action="store_true",
                   help="integrate the ricci flow in its volume-preserving "
                        "chart (rounding-level drift of A*B*C)")
    _add_common(p)
    p.set_defaults(func=_cmd_integrate)

    p = sub.add_parser("classify", help="basin label for a backward orbit")
    p.add_argument("--flow", choices=sorted(_FLOWS), default=None)
    p.add_argument("--metric", required=True, help="A,B,C")
    p.add_argument("--no-fit", action="store_true",
                   help="label only; skip the blow-up fit")
    p.add_argument("--rtol", type=float, default=None)
    p.add_argument("--atol", type=float, default=None)
    _add_common(p, fmt=False)
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("separatrix", help="trace a chart separatrix")
    p.add_argument("--flow", choices=sorted(_FLOWS), default=None)
    p.add_argument("--delta", type=float, default=None,
                   help="shooting offset from the saddle")
    p.add_argument("--extent", type=float, default=None,
                   help="chart extent to trace to (Ricci: max b; XCF: min c)")
    _add_common(p)
    p.set_defaults(func=_cmd_separatrix)

    p = sub.add_parser("portrait", help="planar phase portrait as CSV polylines")
    p.add_argument("--flow", choices=sorted(_FLOWS), default=None)
    p.add_argument("--nx", type=int, default=None)
    p.add_argument("--ny", type=int, default=None)
    p.add_argument("--x-min", dest="x_min", type=float, default=None)
    p.add_argument("--x-max", dest="x_max", type=float, default=None)
    p.add_argument("--y-min", dest="y_min", type=float, default=None)
    p.add_argument("--y-max", dest="y_max", type=float, default=None)
    p.add_argument("--t-max", dest="t_max", type=float, default=None)
    _add_common(p, fmt=False)
    p.set_defaults(func=_cmd_portrait)

    p = sub.add_parser("blowup-report",
                       help="circle equilibria and axis-sliding check")
    p.add_argument("--theta0", type=float, default=None)
    p.add_argument("--r0", type=float, default=None)
    _add_common(p)
    p.set_defaults(func=_cmd_blowup_report)

    p = sub.add_parser("exponents", help="blow-up exponent fit (backward orbit)")
    p.add_argument("--flow", choices=sorted(_FLOWS), default=None)
    p.add_argument("--metric", required=True, help="A,B,C")
    p.add_argument("--rtol", type=float, default=None)
    p.add_argument("--atol", type=float, default=None)
    _add_common(p, fmt=False)
    p.set_defaults(func=_cmd_exponents)

    return parser


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, _load_config(args.config))
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        logger.error("%s", exc)
        return EXIT_USAGE
    except NumericalError as exc:
        logger.error("numerical failure: %s", exc)
        return EXIT_NUMERICAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main(None))
