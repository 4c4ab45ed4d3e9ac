"""Tests for the first-order propagation machinery."""

import numpy as np
import pytest

from detline.odeprop import (OdePropError, Problem, SolverControls,
                             assemble_first_order, inner_product,
                             propagate_combination, propagate_fundamental)

# closed form for the free/Airy endpoint entry u2(1) of -u'' + x u = 0:
# Gamma(1/3) / (2 * 3^(1/6)) * (Bi(1) - sqrt(3) Ai(1))
AIRY_H01 = 1.0853396480829829

TWISTED_Q = [["1 - 2*mu^2", "(1 - mu^2) * exp(2*i*mu*x)"],
             ["(1 - mu^2) * exp(-2*i*mu*x)", "1 - 2*mu^2"]]


def twisted_problem(mu, l):
    return Problem(-l / 2, l / 2, TWISTED_Q, {"mu": mu})


class TestProblem:
    def test_bad_interval(self):
        with pytest.raises(ValueError):
            Problem(1.0, 0.0, "0")
        with pytest.raises(ValueError):
            Problem(0.0, 0.0, "0")

    def test_non_square_matrix(self):
        with pytest.raises(ValueError):
            Problem(0, 1, [["0", "0"], ["0"]])

    def test_unbound_parameter(self):
        with pytest.raises(ValueError, match="mu"):
            Problem(0, 1, "mu*x")

    def test_realness_flag(self):
        assert Problem(0, 1, "x - 2").is_real
        assert not Problem(0, 1, "i*x").is_real
        assert twisted_problem(0.3, 4.0).is_real is False

    def test_same_interval(self):
        assert Problem(0, 1, "0").same_interval(Problem(0, 1, "x"))
        assert not Problem(0, 1, "0").same_interval(Problem(0, 2, "0"))


class TestAssembleFirstOrder:
    def test_free_scalar(self):
        rhs = assemble_first_order(Problem(0, 1, "0"), 1.0)
        out = rhs(0.3, np.array([0.0 + 0j, 1.0]))
        assert out[0] == 1.0
        assert out[1] == -0.0  # (0 - 1) * 0

    def test_linear_potential(self):
        rhs = assemble_first_order(Problem(0, 3, "x"), 0.0)
        out = rhs(2.0, np.array([1.0 + 0j, 0.0]))
        assert out[0] == 0.0
        assert out[1] == 2.0

    def test_two_component_at_mu_zero(self):
        p = twisted_problem(0.0, 4.0)
        rhs = assemble_first_order(p, 0.0)
        state = np.array([1.0, 0.0, 0.0, 0.0], dtype=complex)
        out = rhs(0.0, state)
        # Q(0) at mu=0 is the all-ones matrix
        assert np.allclose(out, [0.0, 0.0, 1.0, 1.0], atol=1e-15)

    def test_matrix_states_accepted(self):
        rhs = assemble_first_order(Problem(0, 1, "x"), 0.5)
        y = np.eye(2, dtype=complex)
        out = rhs(0.25, y)
        assert out.shape == (2, 2)
        assert np.allclose(out[0], y[1])


class TestPropagateFundamental:
    def test_free_rotation(self):
        h = propagate_fundamental(Problem(0, 1, "0"), 1.0).matrix
        c, s = np.cos(1.0), np.sin(1.0)
        assert np.max(np.abs(h - [[c, s], [-s, c]])) < 1e-10

    def test_free_shear(self):
        h = propagate_fundamental(Problem(0, 1, "0"), 0.0).matrix
        assert np.max(np.abs(h - [[1, 1], [0, 1]])) < 1e-12

    def test_airy_endpoint_entry(self):
        h = propagate_fundamental(Problem(0, 1, "x")).matrix
        assert abs(h[0, 1] - 1.08542) <= 1e-4
        assert abs(h[0, 1] - AIRY_H01) < 1e-9

    def test_det_drift_reported(self):
        sol = propagate_fundamental(Problem(0, 1, "x - 2"), 3.7)
        assert sol.det_drift <= 1e-10

    def test_det_drift_along_samples(self):
        # per-sample check, so integrate a notch below the drift bound
        sol = propagate_fundamental(twisted_problem(0.3, 4.0), 0.0,
                                    controls=SolverControls(rtol=1e-11),
                                    record=True)
        assert len(sol.samples) > 2
        for _, mat in sol.samples:
            assert abs(np.linalg.det(mat) - 1.0) <= 1e-10

    def test_realness_diagnostic(self):
        sol = propagate_fundamental(Problem(0, 1, "cos(x)"), -1.5)
        assert sol.imag_drift is not None
        assert sol.imag_drift <= 1e-12
        assert propagate_fundamental(Problem(0, 1, "i*x"), 0.0).imag_drift is None

    def test_depends_on_lambda_only(self):
        k = 1.3
        p = Problem(0, 1, "x - 1")
        h_plus = propagate_fundamental(p, (1j * k) ** 2).matrix
        h_minus = propagate_fundamental(p, (-1j * k) ** 2).matrix
        assert np.array_equal(h_plus, h_minus)

    def test_convergence_under_tightened_tolerance(self):
        p = Problem(0, 1, "10*cos(4*x)")
        coarse = propagate_fundamental(p, 2.0, SolverControls(rtol=1e-8))
        fine = propagate_fundamental(p, 2.0, SolverControls(rtol=1e-10))
        diff = np.max(np.abs(coarse.matrix - fine.matrix))
        scale = max(1.0, float(np.max(np.abs(fine.matrix))))
        assert diff < 100 * 1e-8 * scale

    def test_group_property(self):
        m = 0.4
        h_full = propagate_fundamental(Problem(0, 1, "x - 2")).matrix
        h_left = propagate_fundamental(Problem(0, m, "x - 2")).matrix
        h_right = propagate_fundamental(Problem(m, 1, "x - 2")).matrix
        assert np.max(np.abs(h_right @ h_left - h_full)) < 1e-9

    def test_checkpoints(self):
        m = 0.4
        sol = propagate_fundamental(Problem(0, 1, "x - 2"), checkpoints=(m,))
        h_left = propagate_fundamental(Problem(0, m, "x - 2")).matrix
        assert m in sol.checkpoint_matrices
        assert np.max(np.abs(sol.checkpoint_matrices[m] - h_left)) < 1e-9

    def test_stats_populated(self):
        sol = propagate_fundamental(Problem(0, 1, "x"))
        assert sol.stats.accepted > 0
        assert sol.stats.rhs_evaluations >= 6 * sol.stats.accepted
        assert sol.stats.max_error_estimate <= 1.0

    def test_rtol_out_of_range(self):
        with pytest.raises(ValueError):
            propagate_fundamental(Problem(0, 1, "0"),
                                  controls=SolverControls(rtol=1e-3))


class TestPropagateCombination:
    def test_linear_solution(self):
        traj = propagate_combination(Problem(0, 1, "0"), 0.0, (0.0, 1.0))
        assert abs(traj.u_b[0] - 1.0) < 1e-12
        assert abs(traj.v_b[0] - 1.0) < 1e-12

    def test_eigenfunction_vanishes(self):
        traj = propagate_combination(Problem(0, 1, "0"), np.pi ** 2, (0.0, 1.0))
        assert abs(traj.u_b[0]) < 1e-10

    def test_all_zero_initial_data(self):
        traj = propagate_combination(Problem(0, 1, "x"), 0.0, (0.0, 0.0))
        assert np.max(np.abs(traj.end_state)) == 0.0

    def test_twisted_zero_mode_shape(self):
        mu, l = 0.3, 4.0
        p = twisted_problem(mu, l)
        e = np.exp(1j * mu * l / 2)
        init = np.array([1 / e, -e, 1j * mu / e, 1j * mu * e])
        traj = propagate_combination(p, 0.0, init)
        expect = np.array([e, -1 / e, 1j * mu * e, 1j * mu / e])
        # the mode (e^{i mu x}, -e^{-i mu x}) propagates exactly
        assert np.max(np.abs(traj.end_state - expect)) < 1e-8

    def test_wrong_length(self):
        with pytest.raises(ValueError):
            propagate_combination(Problem(0, 1, "0"), 0.0, (1.0, 0.0, 0.0))


class TestInnerProduct:
    def test_monomial(self):
        traj = propagate_combination(Problem(0, 1, "0"), 0.0, (0.0, 1.0))
        assert inner_product(traj, traj) == pytest.approx(1 / 3, abs=1e-10)

    def test_sine_mode(self):
        p = Problem(0, 1, repr(-np.pi ** 2))
        traj = propagate_combination(p, 0.0, (0.0, 1.0))
        assert inner_product(traj, traj) == pytest.approx(
            1 / (2 * np.pi ** 2), abs=1e-9)

    def test_orthogonal_sines(self):
        p = Problem(0, 1, "0")
        t1 = propagate_combination(p, np.pi ** 2, (0.0, 1.0))
        t2 = propagate_combination(p, 4 * np.pi ** 2, (0.0, 1.0))
        assert abs(inner_product(t1, t2)) < 1e-10

    def test_conjugation_order(self):
        p = Problem(0, 1, "0")
        t1 = propagate_combination(p, 0.0, (1j, 0.0))
        t2 = propagate_combination(p, 0.0, (1.0, 0.0))
        val = inner_product(t1, t2)
        assert val == pytest.approx(-1j, abs=1e-10)
        assert inner_product(t2, t1) == pytest.approx(1j, abs=1e-10)

    def test_twisted_norm_closed_form(self):
        mu, l = 0.3, 4.0
        p = twisted_problem(mu, l)
        nu = np.sqrt(2 * (1 - 3 * mu ** 2))
        pref = 4 * l * (1 - mu ** 2) * np.sinh(l * nu / 2) ** 2 / nu ** 2
        e = np.exp(1j * mu * l / 2)
        init = pref * np.array([1 / e, -e, 1j * mu / e, 1j * mu * e])
        traj = propagate_combination(p, 0.0, init)
        norm = inner_product(traj, traj)
        assert norm.real == pytest.approx(pref ** 2 * 2 * l, rel=1e-9)
        assert abs(norm.imag) < 1e-9 * norm.real

    def test_interval_mismatch(self):
        t1 = propagate_combination(Problem(0, 1, "0"), 0.0, (0.0, 1.0))
        t2 = propagate_combination(Problem(0, 2, "0"), 0.0, (0.0, 1.0))
        with pytest.raises(ValueError):
            inner_product(t1, t2)


class TestSolverControls:
    def test_defaults_valid(self):
        SolverControls().validated()

    @pytest.mark.parametrize("kwargs", [
        {"rtol": 1e-15}, {"rtol": 1e-3}, {"atol": 0.0}, {"atol": -1.0},
        {"max_step": 0.0}, {"first_step": -0.5},
    ])
    def test_rejects(self, kwargs):
        with pytest.raises(ValueError):
            SolverControls(**kwargs).validated()


def test_random_problem_det_drift():
    rng = np.random.default_rng(42)
    for _ in range(25):
        a = float(rng.uniform(-1, 0))
        b = a + float(rng.uniform(0.5, 2.0))
        c0, c1, c2 = rng.uniform(-4, 4, size=3).round(3)
        p = Problem(a, b, f"{c0} + {c1}*x + {c2}*cos(3*x)")
        lam = float(rng.uniform(-5, 20))
        sol = propagate_fundamental(p, lam, controls=SolverControls(rtol=1e-11))
        assert sol.det_drift <= 1e-10


def test_conjugated_problem_propagates_conjugates():
    p = Problem(0, 2, TWISTED_Q, {"mu": 0.25})
    init = np.array([0.2 + 0.1j, -0.4, 0.0, 0.3j])
    fwd = propagate_combination(p, 0.0, init)
    back = propagate_combination(p.conjugated(), 0.0, np.conj(init))
    assert np.max(np.abs(back.end_state - np.conj(fwd.end_state))) < 1e-9
