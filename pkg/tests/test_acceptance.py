"""Acceptance suite: the ten headline checks at their stated tolerances.

Each test prints one PASS/FAIL line (visible with pytest -s, or in the
failure output otherwise) and then asserts, so a red row is a red test.
Run order follows the numbering; nothing here relaxes a tolerance.
"""

import json
import math

import numpy as np
import pytest

from detline import cli
from detline.boundary import BoundarySpec, characteristic, check_self_adjoint, \
    named_bc, normalized_initial_data, reduced_boundary_form
from detline.gelfand import det_ratio
from detline.odeprop import Problem, SolverControls, propagate_combination, \
    propagate_fundamental
from detline.oracle import airy_reference, analytic_fundamental_twisted, \
    eigenvalue_scan, truncated_product_ratio
from detline.zeromode import b_constant, detect_zero_mode, det_ratio_primed, \
    normalized_zero_mode

TWISTED_Q = [["1 - 2*mu^2", "(1 - mu^2) * exp(2*i*mu*x)"],
             ["(1 - mu^2) * exp(-2*i*mu*x)", "1 - 2*mu^2"]]


def free():
    return Problem(0, 1, "0")


def report(num, ok, detail):
    print(f"[criterion {num:2d}] {'PASS' if ok else 'FAIL'}  {detail}")
    return ok


def test_criterion_01_airy_dirichlet_ratio():
    ratio = det_ratio(Problem(0, 1, "x"), free(), named_bc("dirichlet")).value
    v1 = airy_reference(1.0)
    closed = math.gamma(1 / 3) / (2 * 3 ** (1 / 6)) * (v1.bi - math.sqrt(3) * v1.ai)
    ok = abs(ratio - 1.085) <= 1e-3 and abs(ratio - closed) <= 1e-8
    assert report(1, ok, f"airy/free ratio {ratio:.10g}, closed form "
                         f"{closed:.10g}, target 1.085 +- 1e-3")


def test_criterion_02_zero_mode_airy():
    x0 = float(eigenvalue_scan(Problem(0, 1, "x"), named_bc("dirichlet"), 1)[0])
    primed = det_ratio_primed(Problem(0, 1, f"x - {x0!r}"), free(),
                              named_bc("dirichlet")).value
    ok = abs(x0 - 10.3685) <= 1e-3 and abs(primed - 0.050666) <= 1e-4
    assert report(2, ok, f"x0 {x0:.10g}, det'/det {primed:.10g}, "
                         f"target 0.050666 +- 1e-4")


def test_criterion_03_eigenvalue_asymptotics():
    # lambda_n ~ n^2 pi^2 + 1/2 quoted as correct to 0.01%; the ground state
    # misses that by ~11% of the allowance, which this suite reports rather
    # than hides
    roots = eigenvalue_scan(Problem(0, 1, "x"), named_bc("dirichlet"), 5)
    devs = [abs(z - (n ** 2 * np.pi ** 2 + 0.5)) / (n ** 2 * np.pi ** 2)
            for n, z in enumerate(roots.values, start=1)]
    ok = all(d <= 1e-4 for d in devs)
    detail = ", ".join(f"n={n}: {d:.4e}" for n, d in enumerate(devs, start=1))
    assert report(3, ok, f"asymptotic deviations {detail} (allowance 1e-4)")


def test_criterion_04_two_component_closed_form():
    mu, l = 0.3, 4.0
    p1 = Problem(-l / 2, l / 2, TWISTED_Q, {"mu": mu})
    p2 = Problem(-l / 2, l / 2, [["0", "0"], ["0", "0"]], {"mu": mu})
    bc = named_bc("twisted", r=2, mu=mu, l=l)
    f10 = det_ratio_primed(p1, p2, bc, allow_unverified=True).f10
    nu2 = 2 * (1 - 3 * mu ** 2)
    expect = 8 * l ** 2 * (1 - mu ** 2) * np.sinh(l * np.sqrt(nu2) / 2) ** 2 / nu2
    rel = abs(f10 - expect) / expect
    assert report(4, rel <= 1e-6,
                  f"f10 {f10.real:.10g}, closed form {expect:.10g}, "
                  f"relative error {rel:.3e} (allowance 1e-6)")


def test_criterion_05_twisted_propagation_oracle():
    mu, l = 0.25, 2.0
    p = Problem(-l / 2, l / 2, TWISTED_Q, {"mu": mu})
    xs = np.linspace(-l / 2, l / 2, 11)
    sol = propagate_fundamental(p, 0.0, checkpoints=xs[:-1])
    worst = float(np.max(np.abs(sol.matrix
                                - analytic_fundamental_twisted(l / 2, mu, l))))
    for x in xs[:-1]:
        err = np.max(np.abs(sol.checkpoint_matrices[float(x)]
                            - analytic_fundamental_twisted(float(x), mu, l)))
        worst = max(worst, float(err))
    init = float(np.max(np.abs(
        analytic_fundamental_twisted(-l / 2, mu, l) - np.eye(4))))
    ok = worst <= 1e-8 and init <= 1e-14
    assert report(5, ok, f"max propagation error {worst:.3e} over 11 points "
                         f"(allowance 1e-8), initial identity defect {init:.1e}")


def test_criterion_06_oracle_equivalence_standard():
    p1, p2, bc = Problem(0, 1, "x"), free(), named_bc("dirichlet")
    ratio = det_ratio(p1, p2, bc).value
    dev25 = abs(truncated_product_ratio(p1, p2, bc, 25) - ratio)
    dev200 = abs(truncated_product_ratio(p1, p2, bc, 200) - ratio)
    ok = dev200 <= 0.01 * ratio and dev200 < dev25
    assert report(6, ok, f"product deviations N=25: {dev25:.3e}, "
                         f"N=200: {dev200:.3e} (1% of ratio = {0.01 * ratio:.3e})")


def test_criterion_07_oracle_equivalence_primed():
    p1 = Problem(0, 1, repr(-np.pi ** 2))
    primed = det_ratio_primed(p1, free(), named_bc("dirichlet")).value
    target = 1 / (2 * np.pi ** 2)
    product = truncated_product_ratio(p1, free(), named_bc("dirichlet"), 500,
                                      skip_zero=True)
    ok = abs(primed - target) <= 1e-8 and abs(product - target) <= 0.005 * target
    assert report(7, ok, f"det'/det {primed:.10g} vs 1/(2 pi^2) "
                         f"{target:.10g}; skip-zero product (N=500) off by "
                         f"{abs(product - target) / target:.2%} (allowance 0.5%)")


def test_criterion_08_periodic_closed_forms():
    bc = named_bc("periodic")
    primed = det_ratio_primed(free(), Problem(0, 1, "1"), bc).value
    plain = det_ratio(Problem(0, 1, "1"), Problem(0, 1, "4"), bc).value
    t1 = 1 / (4 * np.sinh(0.5) ** 2)
    t2 = np.sinh(0.5) ** 2 / np.sinh(1.0) ** 2
    ok = abs(primed - t1) <= 1e-8 and abs(plain - t2) <= 1e-8
    assert report(8, ok, f"det'(0)/det(1) {primed:.10g} vs {t1:.10g}; "
                         f"det(1)/det(4) {plain:.10g} vs {t2:.10g}")


def synthetic_zero_mode(rng):
    """Self-adjoint scalar spec with exact kernel element e^(c0+c1 x+c2 x^2)."""
    c0, c1, c2 = (round(float(v), 3) for v in rng.uniform(-0.8, 0.8, 3))
    p = Problem(0, 1, f"2*{c2} + ({c1} + 2*{c2}*x)^2")

    def data(x):
        y = np.exp(c0 + c1 * x + c2 * x ** 2)
        return np.array([y, (c1 + 2 * c2 * x) * y])

    wa, wb = data(0.0), data(1.0)
    if rng.integers(0, 2):
        bc = BoundarySpec(1, [[wa[1], -wa[0]], [0.0, 0.0]],
                          [[0.0, 0.0], [wb[1], -wb[0]]])
    else:
        q = np.array([-wa[1], wa[0]])
        beta = float(wb @ wb) / float(wa @ wa)
        col2 = float(rng.uniform(-1, 1)) * wa + beta * q
        basis = np.column_stack([wb, np.array([-wb[1], wb[0]])])
        s = np.column_stack([wa, col2]) @ np.linalg.inv(basis)
        bc = BoundarySpec(1, np.eye(2), -s)
    return p, bc


def test_criterion_09_property_batteries():
    rng = np.random.default_rng(90125)

    # determinant drift across randomized propagations; the bound is on the
    # invariant itself, so run the integrator a notch below it
    ctrl = SolverControls(rtol=1e-11)
    worst_drift = 0.0
    for k in range(100):
        if k % 10 == 9:
            mu = float(rng.uniform(0.05, 0.5))
            p = Problem(-1, 1, TWISTED_Q, {"mu": mu})
        else:
            c = rng.uniform(-4, 4, 3).round(3)
            pot = f"{c[0]} + {c[1]}*x + {c[2]}*sin(2*x)"
            if k % 7 == 3:
                pot += " + i*cos(x)"
            p = Problem(0, float(rng.uniform(0.5, 1.8)), pot)
        lam = complex(rng.uniform(-10, 30), rng.uniform(-2, 2) * (k % 3 == 0))
        worst_drift = max(worst_drift,
                          propagate_fundamental(p, lam, controls=ctrl).det_drift)
    drift_ok = worst_drift <= 1e-10

    # boundary-row reduction identity on random specs
    worst_detlow = 0.0
    p = Problem(0, 1, "2 - x")
    for k in range(30):
        kind = k % 3
        if kind == 0:
            coeffs = rng.uniform(-2, 2, 4)
            if max(abs(coeffs[0]), abs(coeffs[1])) < 0.1 or \
               max(abs(coeffs[2]), abs(coeffs[3])) < 0.1:
                continue
            bc = named_bc("robin", A=coeffs[0], B=coeffs[1],
                          C=coeffs[2], D=coeffs[3])
        elif kind == 1:
            bc = named_bc("periodic")
        else:
            try:
                m = rng.uniform(-2, 2, (2, 2)) + 1j * rng.uniform(-2, 2, (2, 2))
                n = rng.uniform(-2, 2, (2, 2)) + 1j * rng.uniform(-2, 2, (2, 2))
                bc = BoundarySpec(1, m, n)
            except ValueError:
                continue
        lam = float(rng.uniform(-5, 20))
        fund = propagate_fundamental(p, lam)
        char = characteristic(bc, fund)
        z, row = normalized_initial_data(bc, fund.matrix)
        traj = propagate_combination(p, lam, z)
        val = reduced_boundary_form(
            bc, (traj.u_a[0], traj.v_a[0], traj.u_b[0], traj.v_b[0]), row)
        worst_detlow = max(worst_detlow,
                           abs(val - char) / max(1.0, abs(char)))
    detlow_ok = worst_detlow <= 1e-10

    # boundary-constant case agreement on synthetic zero modes
    worst_case = 0.0
    for _ in range(15):
        p, bc = synthetic_zero_mode(rng)
        assert check_self_adjoint(bc).passed
        mode = normalized_zero_mode(p, bc)
        worst_case = max(worst_case, b_constant(bc, mode).discrepancy)
    cases_ok = worst_case <= 1e-8

    # trivial ratio under the four named conditions
    worst_trivial = 0.0
    for bc in (named_bc("dirichlet"), named_bc("neumann"),
               named_bc("robin", A=1, B=2, C=3, D=4), named_bc("periodic")):
        p = Problem(0, 1, "1 + cos(x)")
        worst_trivial = max(worst_trivial,
                            abs(det_ratio(p, p, bc).ratio - 1.0))
    trivial_ok = worst_trivial <= 1e-12

    ok = drift_ok and detlow_ok and cases_ok and trivial_ok
    assert report(9, ok, f"det drift {worst_drift:.2e} (<=1e-10), "
                         f"row identity {worst_detlow:.2e} (<=1e-10), "
                         f"case spread {worst_case:.2e} (<=1e-8), "
                         f"trivial ratio defect {worst_trivial:.2e} (<=1e-12)")


def test_criterion_10_self_adjointness_gate(tmp_path):
    passes = all(check_self_adjoint(bc).passed for bc in (
        named_bc("dirichlet"), named_bc("neumann"),
        named_bc("robin", A=1, B=0.5, C=2, D=-1), named_bc("periodic")))
    fails = check_self_adjoint(
        BoundarySpec(1, np.eye(2), -2 * np.eye(2))).status == "fail"

    problem = {
        "a": 0.0, "b": 1.0, "potential1": repr(math.log(2.0) ** 2),
        "potential2": "0",
        "boundary": {"M": [[[1, 0], [0, 0]], [[0, 0], [1, 0]]],
                     "N": [[[-2, 0], [0, 0]], [[0, 0], [-2, 0]]]},
        "task": {"extract_zero_mode": "force"},
    }
    path = tmp_path / "gate.json"
    path.write_text(json.dumps(problem))
    code = cli.run(["ratio", "--problem", str(path)])
    ok = passes and fails and code == 1
    assert report(10, ok, f"named specs pass: {passes}, scaled identity "
                          f"fails: {fails}, primed refusal exit code {code}")
