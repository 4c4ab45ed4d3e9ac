"""Tests for the determinant-ratio computation without zero modes."""

import numpy as np
import pytest

from detline.boundary import named_bc
from detline.gelfand import ZeroModePresent, det_ratio, dirichlet_ratio
from detline.odeprop import Problem, SolverControls
from detline.oracle import airy_reference, eigenvalue_scan

AIRY_RATIO = 1.0853396480829829  # Gamma(1/3)/(2*3^(1/6)) * (Bi(1) - sqrt(3) Ai(1))


def free():
    return Problem(0, 1, "0")


class TestDetRatio:
    def test_airy_over_free(self):
        report = det_ratio(Problem(0, 1, "x"), free(), named_bc("dirichlet"))
        assert report.value == pytest.approx(1.085, abs=1e-3)
        assert report.value == pytest.approx(AIRY_RATIO, abs=1e-9)
        assert report.zero_mode is False
        assert report.path == "standard"

    def test_identical_operators(self):
        for bc in (named_bc("dirichlet"), named_bc("neumann"),
                   named_bc("robin", A=1, B=2, C=3, D=4), named_bc("periodic")):
            p = Problem(0, 1, "1 + x")
            report = det_ratio(p, p, bc)
            assert abs(report.ratio - 1.0) <= 1e-12

    def test_periodic_constants(self):
        report = det_ratio(Problem(0, 1, "1"), Problem(0, 1, "4"),
                           named_bc("periodic"))
        expect = np.sinh(0.5) ** 2 / np.sinh(1.0) ** 2
        assert report.value == pytest.approx(expect, abs=1e-8)

    def test_report_carries_characteristics(self):
        report = det_ratio(Problem(0, 1, "x"), free(), named_bc("dirichlet"))
        assert report.ratio == pytest.approx(report.char1 / report.char2)
        assert report.char2 == pytest.approx(1.0, abs=1e-10)
        assert report.imag_residue <= 1e-10
        for key in ("steps_1", "steps_2", "det_drift_1", "det_drift_2"):
            assert key in report.stats

    def test_zero_mode_in_numerator_redirects(self):
        p1 = Problem(0, 1, repr(-np.pi ** 2))
        with pytest.raises(ZeroModePresent):
            det_ratio(p1, free(), named_bc("dirichlet"))

    def test_zero_mode_in_reference_rejected(self):
        p2 = Problem(0, 1, repr(-np.pi ** 2))
        with pytest.raises(ZeroModePresent):
            det_ratio(free(), p2, named_bc("dirichlet"))

    def test_interval_mismatch(self):
        with pytest.raises(ValueError):
            det_ratio(Problem(0, 2, "0"), free(), named_bc("dirichlet"))

    def test_component_mismatch(self):
        with pytest.raises(ValueError):
            det_ratio(free(), free(), named_bc("periodic", r=2))

    def test_negative_eigenvalue_warning(self):
        report = det_ratio(Problem(0, 1, "-30"), free(),
                           named_bc("dirichlet"), oracle_check=3)
        assert any("negative" in w for w in report.warnings)
        assert report.oracle is not None

    def test_complex_potential_ratio(self):
        # a non-real potential gives a genuinely complex ratio; the report
        # must keep the imaginary part
        report = det_ratio(Problem(0, 1, "x + i*x"), free(),
                           named_bc("dirichlet"))
        assert abs(report.ratio.imag) > 1e-3
        assert report.imag_residue == abs(report.ratio.imag)


class TestDirichletRatio:
    def test_airy_over_free(self):
        val = dirichlet_ratio(Problem(0, 1, "x"), free())
        assert val == pytest.approx(1.085, abs=1e-3)

    def test_trivial(self):
        assert dirichlet_ratio(free(), free()) == pytest.approx(1.0, abs=1e-12)

    def test_shifted_airy_closed_form(self):
        val = dirichlet_ratio(Problem(0, 1, "x - 0.5"), free())
        lo, hi = airy_reference(-0.5), airy_reference(0.5)
        closed = np.pi * (lo.ai * hi.bi - lo.bi * hi.ai)
        assert val == pytest.approx(closed, abs=1e-9)

    def test_agrees_with_det_ratio(self):
        p1 = Problem(0, 1, "x - 0.3")
        tight = SolverControls(rtol=1e-12)
        val = dirichlet_ratio(p1, free(), controls=tight)
        report = det_ratio(p1, free(), named_bc("dirichlet"), controls=tight)
        assert abs(val - report.ratio) <= 1e-12 * max(1.0, abs(val))


def test_truncated_product_converges_to_ratio():
    # partial eigenvalue products approach the propagated ratio from below
    # the tail; the deviation must shrink as the truncation grows
    p1, p2, bc = Problem(0, 1, "x"), free(), named_bc("dirichlet")
    ratio = det_ratio(p1, p2, bc).value
    e1 = eigenvalue_scan(p1, bc, 200)
    e2 = eigenvalue_scan(p2, bc, 200)
    devs = []
    for n in (25, 50, 100, 200):
        product = float(np.prod(e1.values[:n] / e2.values[:n]))
        devs.append(abs(product - ratio))
    for coarse, finer in zip(devs, devs[1:]):
        assert finer <= coarse * 1.1
    assert devs[-1] <= 0.01 * ratio
