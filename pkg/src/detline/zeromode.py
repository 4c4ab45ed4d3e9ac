"""Zero-mode extraction and the primed determinant ratio.

When det(M + N Y_1(b)) = 0 the operator L_1 annihilates a boundary-
compatible solution y_1 and the plain determinant ratio degenerates.  The
useful object is then det' L_1, the determinant with the zero eigenvalue
removed, and

    det' L_1 / det L_2 = - B <y_1 | y_1> / det(M + N Y_2(b)),

where y_1 is the zero mode normalised by the adjugate column of
M + N Y_1(b) and B is a boundary constant carrying the boundary-condition
data.  B comes from eliminating two boundary data through one of six 2x2
minors of [M | N]; each nondegenerate minor gives an equivalent expression,
and the implementation evaluates the first applicable case in the standard
order while cross-checking the remaining ones.

For Dirichlet conditions B = 1 / conj(y_1'(b)) and the ratio collapses to
- <y_1|y_1> / (conj(y_1'(b)) y_2(b)).  For r > 1 only the twisted-style
normalisation is supported: a designated boundary row in the derivative
block is left unsatisfied and f_10 = <y_1|y_1> / conj(y_1,c(b)) with c the
matching component, giving det' L_1 / det L_2 = f_10 / det(M + N Y_2(b)).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .boundary import (BoundarySpec, characteristic, check_self_adjoint,
                       normalized_initial_data)
from .gelfand import ZERO_MODE_TOL, ZeroModePresent
from .odeprop import (ModeTrajectory, Problem, SolverControls, inner_product,
                      propagate_combination, propagate_fundamental)


class ZeroModeError(RuntimeError):
    pass


class SelfAdjointnessError(RuntimeError):
    """The primed ratio was refused on self-adjointness grounds."""


@dataclass
class ZeroModeDetection:
    present: bool
    char: complex
    scale: float
    tol: float
    fund: object = None


def detect_zero_mode(p: Problem, bc: BoundarySpec,
                     controls: SolverControls | None = None,
                     tol: float = ZERO_MODE_TOL) -> ZeroModeDetection:
    """Screen det(M + N Y(b)) against tol * max(1, |M + N Y(b)|)."""
    fund = propagate_fundamental(p, 0.0, controls)
    char = characteristic(bc, fund)
    scale = max(1.0, float(np.max(np.abs(bc.m + bc.n @ fund.matrix))))
    return ZeroModeDetection(present=abs(char) <= tol * scale, char=char,
                             scale=scale, tol=tol, fund=fund)


@dataclass
class ZeroMode:
    trajectory: ModeTrajectory
    row: int
    norm: float
    bc_residual: float
    char: complex

    @property
    def u_a(self):
        return self.trajectory.u_a

    @property
    def v_a(self):
        return self.trajectory.v_a

    @property
    def u_b(self):
        return self.trajectory.u_b

    @property
    def v_b(self):
        return self.trajectory.v_b


def normalized_zero_mode(p: Problem, bc: BoundarySpec,
                         controls: SolverControls | None = None,
                         row: int | None = None,
                         detection: ZeroModeDetection | None = None) -> ZeroMode:
    """Construct the zero mode with adjugate-column initial data.

    The initial data z = adj(M + N Y(b)) e_row satisfies
    (M + N Y(b)) z = det(...) e_row, which is zero within the detection
    tolerance, so the propagated solution is the boundary-compatible kernel
    element in the normalisation every downstream formula assumes.
    """
    if detection is None:
        detection = detect_zero_mode(p, bc, controls)
    if not detection.present:
        raise ZeroModeError(
            f"no zero mode: |det(M + N Y(b))| = {abs(detection.char):.3e} "
            f"exceeds {detection.tol:.1e} * {detection.scale:.3e}")
    init, row_used = normalized_initial_data(bc, detection.fund.matrix, row)
    if float(np.max(np.abs(init))) <= 1e-12:
        raise ZeroModeError("zero-mode initial data vanish "
                            "(kernel dimension > 1?)")
    traj = propagate_combination(p, 0.0, init, controls)
    norm_c = inner_product(traj, traj, controls)
    norm = norm_c.real
    data_scale = max(float(np.max(np.abs(traj.init))),
                     float(np.max(np.abs(traj.end_state))))
    if norm <= 1e-12 * (p.b - p.a) * data_scale ** 2:
        raise ZeroModeError("constructed zero mode has vanishing norm "
                            "(kernel dimension > 1?)")
    residual = float(np.max(np.abs(
        bc.m @ traj.init + bc.n @ traj.end_state)))
    return ZeroMode(trajectory=traj, row=row_used, norm=norm,
                    bc_residual=residual, char=detection.char)


@dataclass
class BConstant:
    value: complex
    case: int
    discrepancy: float
    evaluated: dict = field(default_factory=dict)


def b_constant(bc: BoundarySpec, mode: ZeroMode) -> BConstant:
    """Boundary constant B of det(M + N H_k(b)) = B k^2 <y_1 | u_1,k>.

    The six equivalent expressions are tried in their standard order; the
    first whose selector minor and denominator are away from zero is the
    returned value, and every other applicable case contributes to the
    reported relative discrepancy (which should sit at solver accuracy for
    a self-adjoint condition).
    """
    if bc.r != 1:
        raise ValueError("b_constant is the scalar-case reduction; "
                         "use the designated-row path for systems")
    m, n = bc.m, bc.n
    ya, va = np.conj(mode.u_a[0]), np.conj(mode.v_a[0])
    yb, vb = np.conj(mode.u_b[0]), np.conj(mode.v_b[0])
    cases = (
        (n[0, 1] * m[1, 1] - m[0, 1] * n[1, 1], m[0, 1] * yb + n[0, 1] * ya),
        (m[0, 0] * n[1, 0] - m[1, 0] * n[0, 0], m[0, 0] * vb + n[0, 0] * va),
        (m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0], m[0, 1] * va + m[0, 0] * ya),
        (m[0, 1] * n[1, 0] - m[1, 1] * n[0, 0], m[0, 1] * vb - n[0, 0] * ya),
        (n[0, 1] * n[1, 0] - n[1, 1] * n[0, 0], n[0, 1] * vb + n[0, 0] * yb),
        (m[0, 0] * n[1, 1] - m[1, 0] * n[0, 1], n[0, 1] * va - m[0, 0] * yb),
    )
    mn_scale = max(1.0, float(np.max(np.abs(np.hstack([m, n])))))
    data_scale = max(abs(ya), abs(va), abs(yb), abs(vb))
    evaluated = {}
    for idx, (sel, den) in enumerate(cases, start=1):
        if abs(sel) <= 1e-12 * mn_scale ** 2:
            continue
        if abs(den) <= 1e-12 * max(1.0, mn_scale * data_scale):
            continue
        evaluated[idx] = sel / den
    if not evaluated:
        raise ZeroModeError("no applicable boundary-constant case: all "
                            "selector minors or denominators vanish")
    first = min(evaluated)
    value = evaluated[first]
    disc = 0.0
    for other, bval in evaluated.items():
        if other != first:
            disc = max(disc, abs(bval - value) / max(abs(value), 1e-300))
    return BConstant(value=value, case=first, discrepancy=disc,
                     evaluated=evaluated)


@dataclass
class DetRatioPrimedReport:
    ratio: complex
    f10: complex
    norm: float
    char2: complex
    b_value: complex | None
    b_case: int | None
    b_discrepancy: float
    mode_residual: float
    row: int
    self_adjoint: str
    path: str = "primed"
    zero_mode: bool = True
    imag_residue: float = 0.0
    warnings: list = field(default_factory=list)
    oracle: dict | None = None

    @property
    def value(self) -> float:
        return self.ratio.real


def det_ratio_primed(p1: Problem, p2: Problem, bc: BoundarySpec,
                     controls: SolverControls | None = None,
                     allow_unverified: bool = False,
                     designated_row: int | None = None,
                     oracle_check: int = 0) -> DetRatioPrimedReport:
    """Ratio det' L_1 / det L_2 with the zero mode of L_1 removed.

    Refuses to run when the boundary condition fails the self-adjointness
    check; an unverified status (r > 1) passes only with
    allow_unverified=True.  L_2 must not have a zero mode of its own.
    """
    if not p1.same_interval(p2):
        raise ValueError("operators must share interval and component count")
    if bc.r != p1.r:
        raise ValueError("boundary spec has the wrong component count")
    sa = check_self_adjoint(bc)
    if sa.status == "fail":
        raise SelfAdjointnessError(
            f"boundary condition is not self-adjoint (max bracket "
            f"{sa.max_bracket:.3e}); det' relies on the reduction identities")
    if sa.status == "not_verified" and not allow_unverified:
        raise SelfAdjointnessError(
            "self-adjointness not verified for this spec; pass "
            "allow_unverified=True to proceed on your own authority")

    det2 = detect_zero_mode(p2, bc, controls)
    if det2.present:
        raise ZeroModePresent("reference operator L_2 has a zero mode")
    char2 = det2.char

    det1 = detect_zero_mode(p1, bc, controls)
    mode = normalized_zero_mode(p1, bc, controls, row=designated_row,
                                detection=det1)

    warnings = []
    if p1.r == 1:
        bres = b_constant(bc, mode)
        f10 = -bres.value * mode.norm
        b_value, b_case, b_disc = bres.value, bres.case, bres.discrepancy
        if b_disc > 1e-8:
            warnings.append(
                f"boundary-constant cases disagree by {b_disc:.3e} relative")
    else:
        row = mode.row
        if row < p1.r:
            raise ZeroModeError(
                "designated row must lie in the derivative block for the "
                "twisted-style system reduction")
        comp = row - p1.r
        ub_c = complex(mode.u_b[comp])
        if abs(ub_c) <= 1e-12 * max(1.0, float(np.max(np.abs(mode.u_b)))):
            raise ZeroModeError(
                "zero mode vanishes in the designated component at b; "
                "choose another designated row")
        f10 = mode.norm / np.conj(ub_c)
        b_value, b_case, b_disc = None, None, 0.0

    ratio = f10 / char2
    real_setting = p1.is_real and p2.is_real and bc.is_real
    if real_setting and abs(ratio.imag) < 1e-10 and ratio.real < 0.0:
        warnings.append(
            "negative det' ratio for a real self-adjoint pair; the zero "
            "mode is then not the lowest eigenvalue of L_1")

    report = DetRatioPrimedReport(
        ratio=ratio, f10=f10, norm=mode.norm, char2=char2,
        b_value=b_value, b_case=b_case, b_discrepancy=b_disc,
        mode_residual=mode.bc_residual, row=mode.row,
        self_adjoint=sa.status, imag_residue=abs(ratio.imag),
        warnings=warnings)
    if oracle_check:
        from . import oracle
        product = oracle.truncated_product_ratio(p1, p2, bc, oracle_check,
                                                 skip_zero=True)
        report.oracle = {"count": oracle_check, "product": product,
                         "deviation": abs(product - ratio.real),
                         "skip_zero": True}
    return report
