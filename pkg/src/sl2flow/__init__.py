"""Numerical laboratory for geometric flows on left-invariant SL(2,R) metrics.

The package integrates the normalized Ricci flow and the cross curvature
flow (XCF) restricted to left-invariant metrics diagonalized in a Milnor
frame, reduces them to planar systems on projective charts, desingularizes
the degenerate planar equilibrium of the XCF by a polar blow-up, traces the
separatrices that split the metric cone into its two generic basins, and
fits the power-law blow-up asymptotics of the backward flows.
"""

from .milnor import MetricDiag, CurvatureReport, sectional_curvatures, f_polynomials, curvature_report
from .fields import Flow, Direction, FlowSpec, field, rhs, conserved_volume_defect, volume_preserving_trajectory, renormalize, RenormalizedTrajectory, VOLUME_NORMALIZING
from .engine import IntegratorConfig, Trajectory, EventSpec, Termination, EventDirection, EventAction, integrate, dense_eval, NumericalError
from .planar import Chart, PlanarPoint, Stability, EquilibriumReport, project, planar_field, planar_jacobian, find_equilibria, orbit_correspondence_check, in_domain
from .blowup import BlowupPoint, CircleKind, CircleEquilibrium, AxisApproachReport, translate_field, sqrt_chart_field, polar_field_X, polar_field_Y, circle_dtheta, circle_radial_rate, circle_angular_rate, circle_equilibria, axis_nonapproach_check
from .separatrix import SeparatrixCurve, ClassificationReport, FitReport, Case3Report, trace_separatrix, classify, fit_asymptotics, case3_diagnostics, separatrix_bisection

__all__ = [
    "MetricDiag", "CurvatureReport", "sectional_curvatures", "f_polynomials", "curvature_report",
    "Flow", "Direction", "FlowSpec", "field", "rhs", "conserved_volume_defect",
    "volume_preserving_trajectory", "renormalize",
    "RenormalizedTrajectory", "VOLUME_NORMALIZING",
    "IntegratorConfig", "Trajectory", "EventSpec", "Termination", "EventDirection", "EventAction",
    "integrate", "dense_eval", "NumericalError",
    "Chart", "PlanarPoint", "Stability", "EquilibriumReport", "project", "planar_field",
    "planar_jacobian", "find_equilibria", "orbit_correspondence_check", "in_domain",
    "BlowupPoint", "CircleKind", "CircleEquilibrium", "AxisApproachReport",
    "translate_field", "sqrt_chart_field", "polar_field_X", "polar_field_Y",
    "circle_dtheta", "circle_radial_rate", "circle_angular_rate",
    "circle_equilibria", "axis_nonapproach_check",
    "SeparatrixCurve", "ClassificationReport", "FitReport", "Case3Report",
    "trace_separatrix", "classify", "fit_asymptotics", "case3_diagnostics",
    "separatrix_bisection",
]

__version__ = "0.1.0"
