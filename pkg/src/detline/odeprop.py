"""Propagation of -u'' + Q(x)u = lambda u as a first-order system.

The operator data lives in a Problem: an interval [a, b], a component count
r and an r x r potential matrix of expression trees.  Writing the state as
(u, v) with v = u', the equation becomes

    d/dx (u, v) = (v, (Q(x) - lambda I) u),

whose 2r x 2r fundamental matrix H(x) satisfies H(a) = I.  The generator is
traceless, so det H(x) = 1 along the whole interval; the drift of that
determinant is recorded as an accuracy diagnostic.

Integration uses an adaptive Dormand-Prince 5(4) pair.  The embedded error
estimate controls the step against atol + rtol * |y|, steps are capped at a
tenth of the interval, and the first step is a hundredth of it.  Inner
products of two solutions are computed by adjoining an accumulator component
to the joint state so the quadrature error is controlled by the same
stepper.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import expr


class OdePropError(RuntimeError):
    pass


@dataclass
class SolverControls:
    rtol: float = 1e-10
    atol: float = 1e-12
    max_step: float | None = None
    first_step: float | None = None

    def validated(self) -> "SolverControls":
        if not (1e-14 <= self.rtol <= 1e-4):
            raise ValueError(f"rtol {self.rtol} outside [1e-14, 1e-4]")
        if not (0.0 < self.atol <= 1e-4):
            raise ValueError(f"atol {self.atol} outside (0, 1e-4]")
        if self.max_step is not None and self.max_step <= 0.0:
            raise ValueError("max_step must be positive")
        if self.first_step is not None and self.first_step <= 0.0:
            raise ValueError("first_step must be positive")
        return self


@dataclass
class IntegratorStats:
    accepted: int = 0
    rejected: int = 0
    rhs_evaluations: int = 0
    max_error_estimate: float = 0.0


def _parse_entry(src):
    return expr.parse(src) if isinstance(src, str) else src


class Problem:
    """Interval, component count and potential matrix of one operator."""

    def __init__(self, a: float, b: float, potential, params: dict | None = None):
        a = float(a)
        b = float(b)
        if not (math.isfinite(a) and math.isfinite(b) and a < b):
            raise ValueError(f"bad interval [{a}, {b}]")
        if isinstance(potential, (str,)) or not isinstance(potential, (list, tuple)):
            rows = [[_parse_entry(potential)]]
        else:
            rows = [[_parse_entry(e) for e in row] for row in potential]
        r = len(rows)
        if any(len(row) != r for row in rows):
            raise ValueError("potential matrix must be square")
        self.a = a
        self.b = b
        self.r = r
        self.entries = rows
        self.params = {k: complex(v) for k, v in (params or {}).items()}
        unbound = set()
        for row in rows:
            for e in row:
                unbound |= expr.free_params(e) - set(self.params)
        if unbound:
            raise ValueError(f"unbound parameters: {sorted(unbound)}")
        self.is_real = self._sample_realness()

    def _sample_realness(self) -> bool:
        for x in np.linspace(self.a, self.b, 65):
            for row in self.entries:
                for e in row:
                    q = expr.evaluate(e, x, self.params)
                    if abs(q.imag) > 1e-13 * (1.0 + abs(q.real)):
                        return False
        return True

    def q_scalar(self, x: float) -> complex:
        return expr.evaluate(self.entries[0][0], x, self.params)

    def q_matrix(self, x: float) -> np.ndarray:
        r = self.r
        out = np.empty((r, r), dtype=complex)
        for ii in range(r):
            for jj in range(r):
                out[ii, jj] = expr.evaluate(self.entries[ii][jj], x, self.params)
        return out

    def conjugated(self) -> "Problem":
        """Problem whose potential is the complex conjugate of this one.

        Conjugates of solutions of the original equation solve the
        conjugated one, which is how trajectory conjugates are propagated
        without leaving the ODE formalism.
        """
        new = Problem.__new__(Problem)
        new.a, new.b, new.r = self.a, self.b, self.r
        new.entries = self.entries
        new.params = self.params
        new.is_real = self.is_real
        new._conj = not getattr(self, "_conj", False)
        return new

    def same_interval(self, other: "Problem") -> bool:
        return self.a == other.a and self.b == other.b and self.r == other.r


def assemble_first_order(problem: Problem, lam: complex):
    """RHS of the first-order system for the given spectral parameter.

    The returned callable maps (x, y) to dy/dx where y holds the state
    (u, v) stacked along its first axis; a trailing axis of columns is
    allowed, so it serves vector solutions and fundamental matrices alike.
    """
    r = problem.r
    lam = complex(lam)
    conj = getattr(problem, "_conj", False)
    if r == 1:
        q_of = problem.q_scalar

        def rhs(x, y):
            q = q_of(x)
            if conj:
                q = q.conjugate()
            out = np.empty_like(y)
            out[0] = y[1]
            out[1] = (q - lam) * y[0]
            return out
    else:
        q_of = problem.q_matrix

        def rhs(x, y):
            q = q_of(x)
            if conj:
                q = np.conj(q)
            out = np.empty_like(y)
            out[:r] = y[r:]
            out[r:] = q @ y[:r] - lam * y[:r]
            return out
    return rhs


# Dormand-Prince 5(4) tableau
_C = (0.0, 1/5, 3/10, 4/5, 8/9, 1.0, 1.0)
_A = (
    (),
    (1/5,),
    (3/40, 9/40),
    (44/45, -56/15, 32/9),
    (19372/6561, -25360/2187, 64448/6561, -212/729),
    (9017/3168, -355/33, 46732/5247, 49/176, -5103/18656),
    (35/384, 0.0, 500/1113, 125/192, -2187/6784, 11/84),
)
_B5 = (35/384, 0.0, 500/1113, 125/192, -2187/6784, 11/84, 0.0)
_E = (71/57600, 0.0, -71/16695, 71/1920, -17253/339200, 22/525, -1/40)


def _integrate(rhs, a, b, y0, controls, checkpoints=(), record=False):
    """Advance y0 from a to b; returns (y, stats, samples, checkpoint states).

    Accepted steps never straddle a checkpoint, so the states stored there
    carry no interpolation error.
    """
    controls = (controls or SolverControls()).validated()
    span = b - a
    hmax = controls.max_step if controls.max_step is not None else span / 10
    hmax = min(hmax, span)
    h = controls.first_step if controls.first_step is not None else span / 100
    h = min(h, hmax)
    hmin = 1e-14 * span

    cps = sorted(float(c) for c in checkpoints)
    for c in cps:
        if not (a <= c <= b):
            raise ValueError(f"checkpoint {c} outside [{a}, {b}]")
    cp_states: dict[float, np.ndarray] = {}
    icp = 0

    stats = IntegratorStats()
    samples = [(a, y0.copy())] if record else []

    t = a
    y = y0.astype(complex).copy()
    while icp < len(cps) and cps[icp] <= t:
        cp_states[cps[icp]] = y.copy()
        icp += 1

    k = [None] * 7
    k[0] = rhs(t, y)
    stats.rhs_evaluations += 1

    while t < b:
        h = min(h, b - t)
        if icp < len(cps) and cps[icp] > t:
            h = min(h, cps[icp] - t)
        if h < hmin:
            raise OdePropError(f"step size underflow at x = {t}")

        for s in range(1, 7):
            acc = _A[s][0] * k[0]
            for j in range(1, s):
                if _A[s][j] != 0.0:
                    acc = acc + _A[s][j] * k[j]
            k[s] = rhs(t + _C[s] * h, y + h * acc)
        stats.rhs_evaluations += 6

        y_new = y + h * (_B5[0] * k[0] + _B5[2] * k[2] + _B5[3] * k[3]
                         + _B5[4] * k[4] + _B5[5] * k[5])
        # stage 7 is the FSAL evaluation at (t+h, y_new)
        k6 = rhs(t + h, y_new)
        stats.rhs_evaluations += 1
        err_vec = h * (_E[0] * k[0] + _E[2] * k[2] + _E[3] * k[3]
                       + _E[4] * k[4] + _E[5] * k[5] + _E[6] * k6)
        scale = controls.atol + controls.rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = math.sqrt(float(np.mean((np.abs(err_vec) / scale) ** 2)))

        if not math.isfinite(err):
            stats.rejected += 1
            h *= 0.2
            continue
        if err <= 1.0:
            t_new = t + h
            if icp < len(cps) and abs(t_new - cps[icp]) < 1e-13 * span:
                t_new = cps[icp]
            t = t_new
            y = y_new
            k[0] = k6
            stats.accepted += 1
            stats.max_error_estimate = max(stats.max_error_estimate, err)
            if record:
                samples.append((t, y.copy()))
            while icp < len(cps) and cps[icp] <= t:
                cp_states[cps[icp]] = y.copy()
                icp += 1
            factor = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
            h = min(hmax, h * factor)
        else:
            stats.rejected += 1
            h *= max(0.2, min(1.0, 0.9 * err ** -0.2))

    return y, stats, samples, cp_states


@dataclass
class FundamentalSolution:
    problem: Problem
    lam: complex
    matrix: np.ndarray
    stats: IntegratorStats
    det_drift: float
    imag_drift: float | None = None
    samples: list = field(default_factory=list)
    checkpoint_matrices: dict = field(default_factory=dict)


def propagate_fundamental(problem: Problem, lam: complex = 0.0,
                          controls: SolverControls | None = None,
                          record: bool = False,
                          checkpoints=()) -> FundamentalSolution:
    """Fundamental matrix H(b) with H(a) = I at spectral parameter lam.

    With record=True the accepted-step states are kept; `checkpoints` asks
    for exact states at interior points (the stepper lands on them).
    """
    n = 2 * problem.r
    y0 = np.eye(n, dtype=complex).reshape(-1)
    rhs_vec = assemble_first_order(problem, lam)

    def rhs(x, y):
        return rhs_vec(x, y.reshape(n, n)).reshape(-1)

    y, stats, samples, cps = _integrate(rhs, problem.a, problem.b, y0,
                                        controls, checkpoints, record)
    mat = y.reshape(n, n)
    det_drift = abs(np.linalg.det(mat) - 1.0)
    imag_drift = None
    if problem.is_real and complex(lam).imag == 0.0:
        imag_drift = float(np.max(np.abs(mat.imag)))
    return FundamentalSolution(
        problem=problem, lam=complex(lam), matrix=mat, stats=stats,
        det_drift=float(det_drift), imag_drift=imag_drift,
        samples=[(x, s.reshape(n, n)) for x, s in samples],
        checkpoint_matrices={x: s.reshape(n, n) for x, s in cps.items()},
    )


@dataclass
class ModeTrajectory:
    problem: Problem
    lam: complex
    init: np.ndarray
    end_state: np.ndarray
    stats: IntegratorStats
    samples: list = field(default_factory=list)

    @property
    def u_a(self) -> np.ndarray:
        return self.init[: self.problem.r]

    @property
    def v_a(self) -> np.ndarray:
        return self.init[self.problem.r:]

    @property
    def u_b(self) -> np.ndarray:
        return self.end_state[: self.problem.r]

    @property
    def v_b(self) -> np.ndarray:
        return self.end_state[self.problem.r:]


def propagate_combination(problem: Problem, lam: complex, init,
                          controls: SolverControls | None = None,
                          record: bool = True) -> ModeTrajectory:
    """Propagate one solution with initial data (u(a), v(a)) = init."""
    init = np.asarray(init, dtype=complex).reshape(-1)
    if init.shape != (2 * problem.r,):
        raise ValueError(f"initial data must have length {2 * problem.r}")
    rhs = assemble_first_order(problem, lam)
    y, stats, samples, _ = _integrate(rhs, problem.a, problem.b, init.copy(),
                                      controls, (), record)
    return ModeTrajectory(problem=problem, lam=complex(lam), init=init,
                          end_state=y, stats=stats, samples=samples)


def inner_product(t1: ModeTrajectory, t2: ModeTrajectory,
                  controls: SolverControls | None = None) -> complex:
    """L2 pairing integral of conj(u1) . u2 over the interval.

    Both trajectories are re-propagated jointly: the conjugate of the first
    solution solves the conjugated problem, and the accumulator component
    acc' = conj(u1) . u2 rides along in the adaptive state, so the value
    comes out at stepper accuracy rather than quadrature-rule accuracy.
    """
    p1, p2 = t1.problem, t2.problem
    if not p1.same_interval(p2):
        raise ValueError("trajectories live on different intervals")
    r = p1.r
    rhs_w = assemble_first_order(p1.conjugated(), complex(t1.lam).conjugate())
    rhs_z = assemble_first_order(p2, t2.lam)

    def rhs(x, y):
        out = np.empty_like(y)
        out[: 2 * r] = rhs_w(x, y[: 2 * r])
        out[2 * r: 4 * r] = rhs_z(x, y[2 * r: 4 * r])
        out[4 * r] = np.dot(y[:r], y[2 * r: 3 * r])
        return out

    y0 = np.concatenate([np.conj(t1.init), t2.init, [0.0 + 0j]])
    y, _, _, _ = _integrate(rhs, p1.a, p1.b, y0, controls)
    return complex(y[4 * r])
