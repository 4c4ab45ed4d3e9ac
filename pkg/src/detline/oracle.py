"""Independent checks: eigenvalue scans, truncated products, closed forms.

Everything here deliberately avoids the adaptive propagator used by the
determinant-ratio path so that agreement between the two is meaningful.
The characteristic function is evaluated on a fixed mesh with exact
propagators for a piecewise-constant potential (the midpoint value on each
cell), once on m cells and once on 2m, combined by Richardson
extrapolation; the error then falls off as the fourth power of the cell
width and a whole batch of spectral points is propagated at once.  Roots
are bracketed by sign changes on a grid whose spacing tracks the
asymptotic eigenvalue gap and polished by bisection.

Also here: Maclaurin-series Airy values with their defining constants, and
the closed-form fundamental matrix of the two-component twisted problem,
both used as references for the numerical propagator.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .boundary import BoundarySpec, check_self_adjoint
from .odeprop import Problem


class OracleError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# characteristic function on fixed meshes

class _CellCharacteristic:
    """det(M + N H_lam(b)) via exact piecewise-constant-cell propagation.

    On a cell of width h where the potential is frozen at its midpoint
    value q, the propagator of (u, v) for -u'' + q u = lam u is

        [[ cos(w h),      sin(w h)/w ],      w = sqrt(lam - q),
         [ -w sin(w h),   cos(w h)   ]]

    with the hyperbolic counterpart for lam < q and a series for small
    |lam - q| h^2.  Freezing the potential is second-order accurate, so
    the two-mesh Richardson combination (4 C_2m - C_m)/3 is fourth-order.
    """

    def __init__(self, p: Problem, bc: BoundarySpec, cells: int = 1024):
        a, b = p.a, p.b
        self.span = b - a
        # the pairwise reduction in _end_matrix wants a power of two
        self.m_coarse = 1 << max(int(cells) - 1, 1).bit_length()
        self.meshes = []
        qlo, qhi = math.inf, -math.inf
        for m in (self.m_coarse, 2 * self.m_coarse):
            h = self.span / m
            mid = a + (np.arange(m) + 0.5) * h
            q = np.array([p.q_scalar(float(x)).real for x in mid])
            qlo = min(qlo, float(q.min()))
            qhi = max(qhi, float(q.max()))
            self.meshes.append((q, h))
        self.qmin = qlo
        self.qmax = qhi
        self.m11, self.m12 = bc.m[0].real
        self.m21, self.m22 = bc.m[1].real
        self.n11, self.n12 = bc.n[0].real
        self.n21, self.n22 = bc.n[1].real

    @staticmethod
    def _end_matrix(q, h, lam):
        # all per-cell propagators at once, then a pairwise (tree) product
        # over the cell axis: same arithmetic as a left-to-right sweep but
        # a few dozen whole-array operations instead of one per cell
        w = lam[:, None] - q[None, :]
        z = w * (h * h)
        small = np.abs(z) < 1e-8
        arg = np.sqrt(np.abs(w)) * h
        wsafe = np.where(small, 1.0, np.abs(w))
        p11 = np.where(small, 1.0 - z / 2 + z * z / 24,
                       np.where(w >= 0, np.cos(arg), np.cosh(arg)))
        p12 = np.where(small, h * (1.0 - z / 6 + z * z / 120),
                       np.where(w >= 0, np.sin(arg), np.sinh(arg))
                       / np.sqrt(wsafe))
        p21 = -w * p12
        p22 = p11
        while p11.shape[1] > 1:
            a11, a12 = p11[:, 0::2], p12[:, 0::2]
            a21, a22 = p21[:, 0::2], p22[:, 0::2]
            b11, b12 = p11[:, 1::2], p12[:, 1::2]
            b21, b22 = p21[:, 1::2], p22[:, 1::2]
            p11 = b11 * a11 + b12 * a21
            p12 = b11 * a12 + b12 * a22
            p21 = b21 * a11 + b22 * a21
            p22 = b21 * a12 + b22 * a22
        return p11[:, 0], p12[:, 0], p21[:, 0], p22[:, 0]

    def _char_on_mesh(self, mesh, lam):
        q, h = mesh
        h11, h12, h21, h22 = self._end_matrix(q, h, lam)
        a11 = self.m11 + self.n11 * h11 + self.n12 * h21
        a12 = self.m12 + self.n11 * h12 + self.n12 * h22
        a21 = self.m21 + self.n21 * h11 + self.n22 * h21
        a22 = self.m22 + self.n21 * h12 + self.n22 * h22
        return a11 * a22 - a12 * a21

    def chars(self, lam) -> np.ndarray:
        lam = np.atleast_1d(np.asarray(lam, dtype=float))
        coarse = self._char_on_mesh(self.meshes[0], lam)
        fine = self._char_on_mesh(self.meshes[1], lam)
        return fine + (fine - coarse) / 3.0


# ---------------------------------------------------------------------------
# scanning

@dataclass
class EigenvalueList:
    values: np.ndarray
    residuals: np.ndarray
    brackets: list
    warnings: list = field(default_factory=list)

    def __len__(self):
        return len(self.values)

    def __getitem__(self, i):
        return self.values[i]

    def __iter__(self):
        return iter(self.values)


def _scan_preconditions(p: Problem, bc: BoundarySpec):
    if p.r != 1 or bc.r != 1:
        raise OracleError("eigenvalue scan handles scalar problems only")
    if not p.is_real:
        raise OracleError("eigenvalue scan requires a real potential")
    if not bc.is_real:
        raise OracleError("eigenvalue scan requires real boundary matrices")
    if not check_self_adjoint(bc).passed:
        raise OracleError("eigenvalue scan requires a self-adjoint boundary "
                          "condition (real characteristic on real lambda)")


def _bisect_all(ev: _CellCharacteristic, lo, hi, clo):
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    slo = np.sign(clo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        done = (hi - lo) <= 1e-12 * np.maximum(1.0, np.abs(mid))
        if done.all():
            break
        cm = ev.chars(mid)
        go_left = np.sign(cm) == slo
        lo = np.where(~done & go_left, mid, lo)
        hi = np.where(~done & ~go_left, mid, hi)
    return 0.5 * (lo + hi)


def eigenvalue_scan(p: Problem, bc: BoundarySpec, count: int,
                    cells: int = 1024) -> EigenvalueList:
    """Lowest `count` real eigenvalues of -u'' + q u = lam u under (M, N).

    Grid scan with sign-change bracketing and bisection to
    |dlam| <= 1e-12 max(1, |lam|).  The grid starts below the potential
    minimum with spacing pi^2/(2(b-a)^2) and widens with the asymptotic
    root gap, so simple roots cannot slip between grid points; near-zero
    dips without a sign change are refined and, if unresolved, flagged as
    suspected even-multiplicity roots (they are not counted).
    """
    if count < 1:
        raise OracleError("count must be at least 1")
    _scan_preconditions(p, bc)
    ev = _CellCharacteristic(p, bc, cells)
    span = p.b - p.a
    unit = math.pi ** 2 / span ** 2
    bcscale = max(1.0, float(np.max(np.abs(np.hstack([bc.m, bc.n]))).real))
    margin = 10.0 * unit * bcscale ** 2
    crossover = ev.qmin + 10.0 * unit
    lam_cap = ev.qmax + margin + unit * float(count + 50) ** 2

    warnings: list[str] = []
    roots: list[float] = []
    resids: list[float] = []
    kept_brackets: list[tuple] = []

    def grid_step(x):
        if x < crossover:
            return 0.5 * unit
        return max(0.5 * unit, 0.9 * math.sqrt(x - ev.qmin) * math.pi / span)

    def flush_brackets(blo, bhi, clo, chi):
        found = _bisect_all(ev, blo, bhi, clo)
        res = np.abs(ev.chars(found))
        for j, lam in enumerate(found):
            scale = max(abs(clo[j]), abs(chi[j]))
            if res[j] > 1e-9 * max(1.0, scale):
                warnings.append(
                    f"residual {res[j]:.2e} at lambda = {lam:.6g} exceeds "
                    f"1e-9 of the local characteristic scale")
            roots.append(float(lam))
            resids.append(float(res[j]))
            kept_brackets.append((float(blo[j]), float(bhi[j])))

    def handle_dip(xl, xm, xr, cm):
        # same-sign local minimum of |char|: either two roots inside one
        # grid cell or an even-multiplicity root; refine to tell apart
        pts = np.linspace(xl, xr, 17)
        for _ in range(2):
            cs = ev.chars(pts)
            flips = np.nonzero(np.sign(cs[:-1]) * np.sign(cs[1:]) < 0)[0]
            if flips.size:
                flush_brackets(pts[flips], pts[flips + 1],
                               cs[flips], cs[flips + 1])
                return
            k = int(np.argmin(np.abs(cs)))
            lo = pts[max(k - 1, 0)]
            hi = pts[min(k + 1, len(pts) - 1)]
            pts = np.linspace(lo, hi, 17)
        warnings.append(
            f"suspected even-multiplicity root near lambda = {xm:.6g}; "
            "no sign change, not counted")

    tail_x = [ev.qmin - margin]
    tail_c = [float(ev.chars(tail_x)[0])]
    while len(roots) < count:
        if tail_x[-1] > lam_cap:
            raise OracleError(
                f"root count not reached within the eigenvalue budget "
                f"(found {len(roots)} of {count} below {lam_cap:.6g})")
        pts = []
        x = tail_x[-1]
        while len(pts) < 256:
            x = x + grid_step(x)
            pts.append(x)
        vals = ev.chars(np.array(pts))
        # carrying two old points keeps the dip test seamless across chunks
        xs = np.concatenate([tail_x, pts])
        cs = np.concatenate([tail_c, vals])
        sgn = np.sign(cs)
        exact = np.nonzero(sgn == 0)[0]
        for j in exact:
            roots.append(float(xs[j]))
            resids.append(0.0)
            kept_brackets.append((float(xs[j]), float(xs[j])))
            sgn[j] = 1.0  # avoid counting the adjacent interval too
        flips = np.nonzero(sgn[:-1] * sgn[1:] < 0)[0]
        absc = np.abs(cs)
        for j in range(1, len(cs) - 1):
            if (j - 1 not in flips and j not in flips
                    and absc[j] < absc[j - 1] and absc[j] < absc[j + 1]
                    and absc[j] < 0.1 * max(absc[j - 1], absc[j + 1])):
                handle_dip(xs[j - 1], xs[j], xs[j + 1], cs[j])
        if flips.size:
            flush_brackets(xs[flips], xs[flips + 1], cs[flips], cs[flips + 1])
        roots_sorted = sorted(range(len(roots)), key=lambda i: roots[i])
        roots = [roots[i] for i in roots_sorted]
        resids = [resids[i] for i in roots_sorted]
        kept_brackets = [kept_brackets[i] for i in roots_sorted]
        tail_x = [float(v) for v in xs[-2:]]
        tail_c = [float(v) for v in cs[-2:]]

    values = np.array(roots)
    residuals = np.array(resids)
    keep = np.ones(len(values), dtype=bool)
    for j in range(1, len(values)):
        if values[j] - values[j - 1] <= 1e-9 * max(1.0, abs(values[j])):
            keep[j] = False
    if not keep.all():
        warnings.append("merged near-coincident roots at 1e-9 spacing")
    values = values[keep][:count]
    residuals = residuals[keep][:count]
    kept_brackets = [kb for kb, k in zip(kept_brackets, keep) if k][:count]
    if len(values) < count:
        raise OracleError(
            f"root count not reached: {len(values)} of {count} after "
            "deduplication")
    return EigenvalueList(values=values, residuals=residuals,
                          brackets=kept_brackets, warnings=warnings)


def truncated_product_ratio(p1: Problem, p2: Problem, bc: BoundarySpec,
                            n: int, skip_zero: bool = False,
                            cells: int = 1024) -> float:
    """Ratio of the products of the lowest n eigenvalues of two operators.

    With skip_zero the lowest eigenvalue of the first operator must be
    numerically zero (below 1e-6) and is dropped, approximating the
    primed determinant ratio; the pairing stays index-aligned, so the
    result is prod_{j=2..n}(lam_j1/lam_j2) / lam_12.
    """
    e1 = eigenvalue_scan(p1, bc, n, cells)
    e2 = eigenvalue_scan(p2, bc, n, cells)
    v1, v2 = e1.values, e2.values
    if skip_zero:
        if abs(v1[0]) >= 1e-6:
            raise OracleError(
                f"skip_zero: lowest eigenvalue of the first operator is "
                f"{v1[0]:.6g}, not numerically zero")
        if np.any(np.abs(v2) < 1e-9):
            raise OracleError("zero eigenvalue in the reference spectrum")
        return float(np.prod(v1[1:] / v2[1:]) / v2[0])
    if np.any(np.abs(v1) < 1e-9) or np.any(np.abs(v2) < 1e-9):
        raise OracleError("zero eigenvalue present; use skip_zero or the "
                          "primed determinant ratio")
    return float(np.prod(v1 / v2))


# ---------------------------------------------------------------------------
# Airy reference values

@dataclass
class AiryValues:
    ai: float
    bi: float
    dai: float
    dbi: float


_SQRT3 = math.sqrt(3.0)
_C1 = 3.0 ** (-2.0 / 3.0) / math.gamma(2.0 / 3.0)
_C2 = 3.0 ** (-1.0 / 3.0) / math.gamma(1.0 / 3.0)


def _airy_series(x: float, first_power: int):
    """Value and derivative of the series solution x^p (1 + ...) of y''=xy.

    first_power 0 gives the even-type solution (y(0)=1, y'(0)=0), 1 the
    odd-type one (y(0)=0, y'(0)=1); coefficients follow
    a_{n+3} = a_n / ((n+3)(n+2)).
    """
    if x == 0.0:
        return (1.0, 0.0) if first_power == 0 else (0.0, 1.0)
    val = 0.0
    der = 0.0
    term = x ** first_power  # a_n x^n with a_n = 1 at n = first_power
    n = first_power
    for _ in range(200):
        val += term
        der += n * term / x
        if abs(term) < 1e-18 * (abs(val) + 1.0):
            break
        term = term * x ** 3 / ((n + 3) * (n + 2))
        n += 3
    return val, der


def airy_reference(x: float) -> AiryValues:
    """Ai, Bi and derivatives from their Maclaurin series.

    Alternating-series cancellation is mild for |x| <= 6, which covers
    every reference point used here; outside the range the call refuses
    rather than silently losing digits.
    """
    x = float(x)
    if abs(x) > 6.0:
        raise OracleError("airy_reference is validated only for |x| <= 6")
    f, df = _airy_series(x, 0)
    g, dg = _airy_series(x, 1)
    ai = _C1 * f - _C2 * g
    dai = _C1 * df - _C2 * dg
    bi = _SQRT3 * (_C1 * f + _C2 * g)
    dbi = _SQRT3 * (_C1 * df + _C2 * dg)
    return AiryValues(ai=ai, bi=bi, dai=dai, dbi=dbi)


# ---------------------------------------------------------------------------
# closed-form fundamental matrix of the twisted two-component problem

def analytic_fundamental_twisted(x: float, mu: float, l: float) -> np.ndarray:
    """Fundamental matrix Y(x), Y(-l/2) = I_4, of the coupled pair

        -u'' + (1 - 2 mu^2) u1 + (1 - mu^2) e^{ 2 i mu x} u2 = 0
        -u'' + (1 - mu^2) e^{-2 i mu x} u1 + (1 - 2 mu^2) u2 = 0

    assembled from the four closed-form solutions (derivatives written
    out by hand).  Requires mu^2 < 1/3 so the growth rate nu is real.
    """
    mu = float(mu)
    l = float(l)
    nu2 = 2.0 * (1.0 - 3.0 * mu * mu)
    if nu2 <= 0.0:
        raise OracleError("analytic twisted solution needs mu^2 < 1/3")
    if l <= 0.0:
        raise OracleError("interval length l must be positive")
    if not (-l / 2 - 1e-12 <= x <= l / 2 + 1e-12):
        raise OracleError("x outside [-l/2, l/2]")
    nu = math.sqrt(nu2)
    one = 1.0 - mu * mu
    z = x + l / 2.0
    ch = math.cosh(nu * z)
    sh = math.sinh(nu * z)
    pre_p = cmath.exp(1j * mu * l / 2.0) / nu2
    pre_m = cmath.exp(-1j * mu * l / 2.0) / nu2
    ep = cmath.exp(1j * mu * x)
    em = cmath.exp(-1j * mu * x)
    im = 1j * mu
    c37 = 3.0 - 7.0 * mu * mu
    c15 = 1.0 - 5.0 * mu * mu

    a1 = nu2 / 2 + im * one * z + nu2 / 2 * ch - im / nu * c37 * sh
    da1 = im * one + nu2 / 2 * nu * sh - im * c37 * ch
    b1 = one * (-1.0 - im * z + ch + im / nu * sh)
    db1 = one * (-im + nu * sh + im * ch)

    a2 = one * (-1.0 + im * z + ch - im / nu * sh)
    da2 = one * (im + nu * sh - im * ch)
    b2 = nu2 / 2 - im * one * z + nu2 / 2 * ch + im / nu * c37 * sh
    db2 = -im * one + nu2 / 2 * nu * sh + im * c37 * ch

    a3 = 2 * im + one * z - 2 * im * ch + c15 / nu * sh
    da3 = one - 2 * im * nu * sh + c15 * ch
    b3 = one * (-z + sh / nu)
    db3 = one * (-1.0 + ch)

    a4 = one * (-z + sh / nu)
    da4 = one * (-1.0 + ch)
    b4 = -2 * im + one * z + 2 * im * ch + c15 / nu * sh
    db4 = one + 2 * im * nu * sh + c15 * ch

    y = np.empty((4, 4), dtype=complex)
    for j, (pre, a, da, b, db) in enumerate((
            (pre_p, a1, da1, b1, db1),
            (pre_m, a2, da2, b2, db2),
            (pre_p, a3, da3, b3, db3),
            (pre_m, a4, da4, b4, db4))):
        y[0, j] = pre * a * ep
        y[1, j] = pre * b * em
        y[2, j] = pre * (da + im * a) * ep
        y[3, j] = pre * (db - im * b) * em
    return y
