"""Determinant ratios from boundary-value data of the zero-energy solutions.

For two operators L_j = -d^2/dx^2 + R_j(x) on the same interval with the
same boundary condition (M, N), the ratio of their (zeta-regularised)
determinants needs no eigenvalue at all:

    det L_1 / det L_2 = det(M + N Y_1(b)) / det(M + N Y_2(b)),

with Y_j the fundamental matrix of L_j at lambda = 0.  Both sides are built
from two initial-value integrations.  If either characteristic vanishes the
operator has a zero mode and the ratio must be taken through the primed
path (zeromode.det_ratio_primed) instead.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .boundary import BoundarySpec, characteristic, check_self_adjoint
from .odeprop import Problem, SolverControls, propagate_combination, propagate_fundamental

ZERO_MODE_TOL = 1e-8


class ZeroModePresent(RuntimeError):
    """A characteristic vanished; the plain ratio is 0 or undefined."""


@dataclass
class DetRatioReport:
    ratio: complex
    char1: complex
    char2: complex
    path: str = "standard"
    zero_mode: bool = False
    self_adjoint: str = "unchecked"
    imag_residue: float = 0.0
    stats: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    oracle: dict | None = None

    @property
    def value(self) -> float:
        """Real part; the imaginary residue is tracked separately."""
        return self.ratio.real


def _screen_zero(char: complex, m, n, h) -> bool:
    scale = max(1.0, float(np.max(np.abs(m + n @ h))))
    return abs(char) <= ZERO_MODE_TOL * scale


def det_ratio(p1: Problem, p2: Problem, bc: BoundarySpec,
              controls: SolverControls | None = None,
              oracle_check: int = 0) -> DetRatioReport:
    """Ratio det L_1 / det L_2 under the boundary condition bc.

    `oracle_check = N` additionally runs the eigenvalue oracle and attaches
    the N-term truncated product with its deviation from the returned
    ratio (scalar real self-adjoint problems only).
    """
    if not p1.same_interval(p2):
        raise ValueError("operators must share interval and component count")
    if bc.r != p1.r:
        raise ValueError("boundary spec has the wrong component count")
    f1 = propagate_fundamental(p1, 0.0, controls)
    f2 = propagate_fundamental(p2, 0.0, controls)
    char1 = characteristic(bc, f1)
    char2 = characteristic(bc, f2)
    if _screen_zero(char1, bc.m, bc.n, f1.matrix):
        raise ZeroModePresent(
            "det(M + N Y_1(b)) vanishes within tolerance: L_1 has a zero "
            "mode, use det_ratio_primed")
    if _screen_zero(char2, bc.m, bc.n, f2.matrix):
        raise ZeroModePresent(
            "det(M + N Y_2(b)) vanishes within tolerance: L_2 has a zero "
            "mode and cannot serve as reference")
    ratio = char1 / char2
    sa = check_self_adjoint(bc)
    report = DetRatioReport(
        ratio=ratio, char1=char1, char2=char2,
        self_adjoint=sa.status,
        imag_residue=abs(ratio.imag),
        stats={
            "steps_1": f1.stats.accepted, "steps_2": f2.stats.accepted,
            "rejected_1": f1.stats.rejected, "rejected_2": f2.stats.rejected,
            "det_drift_1": f1.det_drift, "det_drift_2": f2.det_drift,
        },
    )
    if oracle_check:
        from . import oracle
        product = oracle.truncated_product_ratio(p1, p2, bc, oracle_check)
        deviation = abs(product - ratio.real)
        report.oracle = {"count": oracle_check, "product": product,
                         "deviation": deviation}
        ev = oracle.eigenvalue_scan(p1, bc, oracle_check)
        if np.any(ev.values < -1e-9):
            report.warnings.append(
                "oracle scan located negative eigenvalues; the determinant "
                "ratio mixes signs of individual factors")
    return report


def dirichlet_ratio(p1: Problem, p2: Problem,
                    controls: SolverControls | None = None) -> complex:
    """Dirichlet special case y_1(b) / y_2(b), scalar problems only.

    y_j is the solution with y(a) = 0, y'(a) = 1.  No separate
    normalisation factor appears: it cancels between numerator and
    denominator exactly as in the determinant form, which this equals.
    """
    if p1.r != 1 or p2.r != 1:
        raise ValueError("the Dirichlet shortcut is scalar only")
    if not p1.same_interval(p2):
        raise ValueError("operators must share their interval")
    t1 = propagate_combination(p1, 0.0, (0.0, 1.0), controls, record=False)
    t2 = propagate_combination(p2, 0.0, (0.0, 1.0), controls, record=False)
    y1 = complex(t1.end_state[0])
    y2 = complex(t2.end_state[0])
    if y2 == 0:
        raise ZeroModePresent("y_2(b) = 0: reference operator has a zero mode")
    return y1 / y2
