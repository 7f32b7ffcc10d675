"""Curvature algebra for left-invariant SL(2,R) metrics in a Milnor frame.

A left-invariant metric on SL(2,R) is diagonalized by a Milnor frame
(f1, f2, f3) with bracket relations [f2,f3] = -2 f1, [f3,f1] = 2 f2,
[f1,f2] = 2 f3 (a fixed convention of this module).  The metric is the
triple g = A f1*f1 + B f2*f2 + C f3*f3 with A, B, C > 0.

The principal sectional curvatures k1 = K(f2^f3), k2 = K(f3^f1),
k3 = K(f1^f2) are rational in (A,B,C): k_i = F_i / (ABC) where the F_i are
the quadratic forms

    F1 = -3A^2 + B^2 + C^2 - 2BC - 2AC - 2AB
    F2 = -3B^2 + A^2 + C^2 + 2BC + 2AC - 2AB
    F3 = -3C^2 + A^2 + B^2 + 2BC - 2AC + 2AB

The diagonal Ricci entries are R_ii = k_j + k_l and the diagonal cross
curvature entries are h_ii = k_j * k_l (circular index convention
(i,j,l) in {(1,2,3),(2,3,1),(3,1,2)}).  Scalar curvature is reported with
the trace convention R = 2(k1 + k2 + k3).

F2 and F3 (the pair exchanged by the B<->C frame symmetry) are evaluated
with mirrored operation order and a shared antisymmetric term, so that
inputs with B == C yield bitwise-identical F2 == F3.  Downstream flow
fields rely on this to keep the symmetric plane {B = C} exactly invariant
under integration in floating point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "MetricDiag",
    "CurvatureReport",
    "sectional_curvatures",
    "f_polynomials",
    "curvature_report",
]


@dataclass(frozen=True)
class MetricDiag:
    """Diagonal metric coefficients (A, B, C) in a fixed Milnor frame.

    All three must be positive finite reals.
    """

    A: float
    B: float
    C: float

    def __post_init__(self) -> None:
        for name in ("A", "B", "C"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise TypeError(f"{name} must be a real number, got {value!r}")
            value = float(value)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
            if value <= 0.0:
                raise ValueError(f"{name} must be positive, got {value!r}")
            object.__setattr__(self, name, value)

    def scaled(self, lam: float) -> "MetricDiag":
        """The metric (lam*A, lam*B, lam*C)."""
        return MetricDiag(lam * self.A, lam * self.B, lam * self.C)

    def swapped_bc(self) -> "MetricDiag":
        """The metric with B and C exchanged (a Milnor frame symmetry)."""
        return MetricDiag(self.A, self.C, self.B)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.A, self.B, self.C)


@dataclass(frozen=True)
class CurvatureReport:
    """All curvature data of a metric: k_i, F_i, Ricci/cross diagonals, scalar."""

    k1: float
    k2: float
    k3: float
    F1: float
    F2: float
    F3: float
    ricci: tuple[float, float, float]
    cross: tuple[float, float, float]
    scalar: float


def f_polynomials(m: MetricDiag) -> tuple[float, float, float]:
    """The quadratic forms (F1, F2, F3); F_i = k_i * ABC.

    Degree-2 homogeneous: F(lam*m) = lam^2 * F(m).  B == C inputs give
    bitwise F2 == F3.
    """
    return _f_raw(m.A, m.B, m.C)


def _f_raw(A: float, B: float, C: float) -> tuple[float, float, float]:
    # F2 and F3 share the symmetric base (identical op order when B == C)
    # and an antisymmetric term that is exactly 0.0 when B == C.
    F1 = (-3.0 * A * A + B * B + C * C - 2.0 * B * C) - (2.0 * A * C + 2.0 * A * B)
    base2 = A * A - 3.0 * B * B + C * C + 2.0 * B * C
    base3 = A * A - 3.0 * C * C + B * B + 2.0 * B * C
    anti = 2.0 * A * C - 2.0 * A * B
    F2 = base2 + anti
    F3 = base3 - anti
    return (F1, F2, F3)


def sectional_curvatures(m: MetricDiag) -> tuple[float, float, float]:
    """Principal sectional curvatures (k1, k2, k3) = (F1, F2, F3)/(ABC).

    Computed by a single division of the F polynomials, so that
    k_i * ABC - F_i vanishes to roundoff.  Degree-(-1) homogeneous:
    k(lam*m) = k(m)/lam.
    """
    F1, F2, F3 = f_polynomials(m)
    vol = m.A * m.B * m.C
    return (F1 / vol, F2 / vol, F3 / vol)


def curvature_report(m: MetricDiag) -> CurvatureReport:
    """Assemble sectional, Ricci, cross and scalar curvature of ``m``."""
    F1, F2, F3 = f_polynomials(m)
    vol = m.A * m.B * m.C
    k1, k2, k3 = F1 / vol, F2 / vol, F3 / vol
    ricci = (k2 + k3, k3 + k1, k1 + k2)
    cross = (k2 * k3, k3 * k1, k1 * k2)
    scalar = 2.0 * (k1 + k2 + k3)
    return CurvatureReport(k1=k1, k2=k2, k3=k3, F1=F1, F2=F2, F3=F3,
                           ricci=ricci, cross=cross, scalar=scalar)
