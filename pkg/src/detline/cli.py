"""Command-line front end: problem files in, ratios and scans out.

Problem definitions are JSON files with a flat schema (see load_problem);
complex numbers are written as two-element arrays [re, im].  The `ratio`
subcommand auto-switches to the primed path when the first operator turns
out to have a zero mode and always reports which path ran.  `validate`
replays a built-in table of closed-form regression cases and exits 0 only
if every row passes.

Exit codes: 0 success, 1 computation refused or failed (zero-mode
conflicts, self-adjointness gate, scan budget), 2 bad input or usage.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import expr, oracle
from .boundary import BoundarySpec, check_self_adjoint, named_bc
from .gelfand import DetRatioReport, ZeroModePresent, det_ratio
from .odeprop import OdePropError, Problem, SolverControls
from .oracle import OracleError
from .zeromode import (DetRatioPrimedReport, SelfAdjointnessError,
                       ZeroModeError, det_ratio_primed)


class ConfigError(Exception):
    """Problem-file schema violation; the message names the field."""


def _fmt(x) -> str:
    return f"{float(x):.10g}"


# ---------------------------------------------------------------------------
# problem files

_TOP_FIELDS = {"a", "b", "r", "potential1", "potential2", "parameters",
               "boundary", "solver", "task"}
_BOUNDARY_FIELDS = {"kind", "A", "B", "C", "D", "mu", "l", "M", "N"}
_SOLVER_FIELDS = {"rtol", "atol", "max_step"}
_TASK_FIELDS = {"extract_zero_mode", "oracle_check"}


def _as_real(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: expected a number")
    return float(value)


def _as_complex(value, where: str) -> complex:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(value)
    if (isinstance(value, list) and len(value) == 2
            and all(isinstance(v, (int, float)) and not isinstance(v, bool)
                    for v in value)):
        return complex(value[0], value[1])
    raise ConfigError(f"{where}: expected a number or [re, im]")


def _as_matrix(value, size: int, where: str) -> np.ndarray:
    if not isinstance(value, list) or len(value) != size:
        raise ConfigError(f"{where}: expected {size} rows")
    out = np.empty((size, size), dtype=complex)
    for i, row in enumerate(value):
        if not isinstance(row, list) or len(row) != size:
            raise ConfigError(f"{where}: row {i} must have {size} entries")
        for j, cell in enumerate(row):
            out[i, j] = _as_complex(cell, f"{where}[{i}][{j}]")
    return out


def _as_potential(value, r: int, where: str):
    if isinstance(value, str):
        if r != 1:
            raise ConfigError(f"{where}: r = {r} needs an {r}x{r} matrix "
                              "of expression strings")
        return value
    if isinstance(value, list):
        if len(value) != r or any(not isinstance(row, list) or len(row) != r
                                  for row in value):
            raise ConfigError(f"{where}: expected an {r}x{r} matrix")
        for i, row in enumerate(value):
            for j, cell in enumerate(row):
                if not isinstance(cell, str):
                    raise ConfigError(
                        f"{where}[{i}][{j}]: expected an expression string")
        return value
    raise ConfigError(f"{where}: expected an expression string or matrix")


def _check_fields(section: dict, allowed: set, where: str):
    for key in section:
        if key not in allowed:
            raise ConfigError(f"{where}: unknown field {key!r}")


@dataclass
class ProblemConfig:
    p1: Problem
    p2: Problem
    bc: BoundarySpec
    controls: SolverControls
    extract_zero_mode: str
    oracle_check: int
    source: dict


def load_problem(path: str) -> ProblemConfig:
    """Read and fully validate a JSON problem file.

    Defaults: rtol 1e-10 (the DETLINE_RTOL environment variable overrides
    it when the file does not set one), atol 1e-12,
    extract_zero_mode "auto", oracle_check off.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be an object")
    _check_fields(raw, _TOP_FIELDS, path)
    for req in ("a", "b", "potential1", "potential2", "boundary"):
        if req not in raw:
            raise ConfigError(f"{path}: missing required field {req!r}")

    a = _as_real(raw["a"], "a")
    b = _as_real(raw["b"], "b")
    r = raw.get("r", 1)
    if isinstance(r, bool) or not isinstance(r, int) or r < 1:
        raise ConfigError("r: expected a positive integer")

    params = {}
    for name, val in (raw.get("parameters") or {}).items():
        if not isinstance(name, str) or not name.isidentifier():
            raise ConfigError(f"parameters: bad name {name!r}")
        params[name] = _as_complex(val, f"parameters.{name}")

    pot1 = _as_potential(raw["potential1"], r, "potential1")
    pot2 = _as_potential(raw["potential2"], r, "potential2")
    try:
        p1 = Problem(a, b, pot1, params)
        p2 = Problem(a, b, pot2, params)
    except (expr.ExprSyntaxError, expr.ExprNameError, ValueError,
            ArithmeticError) as exc:
        raise ConfigError(f"potential: {exc}") from None

    bsec = raw["boundary"]
    if not isinstance(bsec, dict):
        raise ConfigError("boundary: expected an object")
    _check_fields(bsec, _BOUNDARY_FIELDS, "boundary")
    if "M" in bsec or "N" in bsec:
        if "kind" in bsec:
            raise ConfigError("boundary: give either kind or M/N, not both")
        if "M" not in bsec or "N" not in bsec:
            raise ConfigError("boundary: custom spec needs both M and N")
        m = _as_matrix(bsec["M"], 2 * r, "boundary.M")
        n = _as_matrix(bsec["N"], 2 * r, "boundary.N")
        try:
            bc = BoundarySpec(r, m, n)
        except ValueError as exc:
            raise ConfigError(f"boundary: {exc}") from None
    else:
        kind = bsec.get("kind")
        if not isinstance(kind, str):
            raise ConfigError("boundary.kind: expected a string")
        bparams = {}
        for key in ("A", "B", "C", "D"):
            if key in bsec:
                bparams[key] = _as_complex(bsec[key], f"boundary.{key}")
        for key in ("mu", "l"):
            if key in bsec:
                bparams[key] = _as_real(bsec[key], f"boundary.{key}")
        try:
            bc = named_bc(kind, r, **bparams)
        except ValueError as exc:
            raise ConfigError(f"boundary: {exc}") from None
        if kind == "twisted":
            ell = bparams.get("l")
            if ell is None or abs((b - a) - ell) > 1e-12 * max(1.0, abs(ell)):
                raise ConfigError(
                    f"boundary.l: twisted conditions need b - a = l "
                    f"(interval length {b - a!r}, l {ell!r})")

    ssec = raw.get("solver") or {}
    if not isinstance(ssec, dict):
        raise ConfigError("solver: expected an object")
    _check_fields(ssec, _SOLVER_FIELDS, "solver")
    rtol = ssec.get("rtol")
    if rtol is None:
        env = os.environ.get("DETLINE_RTOL")
        if env is not None:
            try:
                rtol = float(env)
            except ValueError:
                raise ConfigError(
                    f"DETLINE_RTOL: not a number ({env!r})") from None
    controls = SolverControls(
        rtol=_as_real(rtol, "solver.rtol") if rtol is not None else 1e-10,
        atol=_as_real(ssec["atol"], "solver.atol")
        if "atol" in ssec else 1e-12,
        max_step=_as_real(ssec["max_step"], "solver.max_step")
        if "max_step" in ssec else None)
    try:
        controls = controls.validated()
    except ValueError as exc:
        raise ConfigError(f"solver: {exc}") from None

    tsec = raw.get("task") or {}
    if not isinstance(tsec, dict):
        raise ConfigError("task: expected an object")
    _check_fields(tsec, _TASK_FIELDS, "task")
    mode = tsec.get("extract_zero_mode", "auto")
    if mode not in ("auto", "force", "off"):
        raise ConfigError(
            "task.extract_zero_mode: expected auto, force or off")
    ocheck = tsec.get("oracle_check", 0)
    if ocheck == "off":
        ocheck = 0
    if isinstance(ocheck, bool) or not isinstance(ocheck, int) or ocheck < 0:
        raise ConfigError("task.oracle_check: expected off or a count")

    return ProblemConfig(p1=p1, p2=p2, bc=bc, controls=controls,
                         extract_zero_mode=mode, oracle_check=ocheck,
                         source=raw)


# ---------------------------------------------------------------------------
# subcommands

def _report_payload(report) -> dict:
    payload = {
        "ratio_re": report.ratio.real,
        "ratio_im": report.ratio.imag,
        "zero_mode": report.zero_mode,
        "path": report.path,
        "self_adjoint": report.self_adjoint,
    }
    if isinstance(report, DetRatioPrimedReport):
        payload["b_case"] = report.b_case
    if report.oracle is not None:
        payload["oracle_product"] = report.oracle["product"]
        payload["oracle_deviation"] = report.oracle["deviation"]
    payload["warnings"] = list(report.warnings)
    return payload


def _print_report(report, output: str):
    payload = _report_payload(report)
    if output == "json":
        print(json.dumps(payload))
        return
    label = ("det_ratio_primed" if isinstance(report, DetRatioPrimedReport)
             else "det_ratio")
    print(f"{label} = {_fmt(report.ratio.real)}")
    if abs(report.ratio.imag) > 0:
        print(f"imag_residue = {_fmt(abs(report.ratio.imag))}")
    print(f"zero_mode = {'yes' if report.zero_mode else 'no'}")
    print(f"path = {report.path}")
    if isinstance(report, DetRatioPrimedReport) and report.b_case is not None:
        print(f"b_case = {report.b_case}")
    print(f"self_adjoint = {report.self_adjoint}")
    if report.oracle is not None:
        print(f"oracle_product = {_fmt(report.oracle['product'])} "
              f"(N = {report.oracle['count']})")
        print(f"oracle_deviation = {_fmt(report.oracle['deviation'])}")
    for w in report.warnings:
        print(f"warning: {w}")


def _cmd_ratio(args) -> int:
    cfg = load_problem(args.problem)
    ocheck = args.oracle if args.oracle is not None else cfg.oracle_check
    mode = cfg.extract_zero_mode

    def primed():
        try:
            return det_ratio_primed(cfg.p1, cfg.p2, cfg.bc, cfg.controls,
                                    allow_unverified=args.allow_unverified,
                                    oracle_check=ocheck)
        except SelfAdjointnessError as exc:
            if "not verified" in str(exc) and not args.allow_unverified:
                raise SelfAdjointnessError(
                    "self-adjointness not verified for this spec; rerun "
                    "with --allow-unverified to proceed") from None
            raise

    if mode == "force":
        report = primed()
    elif mode == "off":
        report = det_ratio(cfg.p1, cfg.p2, cfg.bc, cfg.controls,
                           oracle_check=ocheck)
    else:
        try:
            report = det_ratio(cfg.p1, cfg.p2, cfg.bc, cfg.controls,
                               oracle_check=ocheck)
        except ZeroModePresent:
            report = primed()
    _print_report(report, args.output)
    return 0


def _cmd_eigenvalues(args) -> int:
    cfg = load_problem(args.problem)
    ev = oracle.eigenvalue_scan(cfg.p1, cfg.bc, args.count)
    if args.output == "json":
        print(json.dumps({
            "eigenvalues": [float(v) for v in ev.values],
            "residuals": [float(rv) for rv in ev.residuals],
            "warnings": list(ev.warnings)}))
        return 0
    for i, v in enumerate(ev.values, start=1):
        print(f"lambda_{i} = {_fmt(v)}")
    for w in ev.warnings:
        print(f"warning: {w}")
    return 0


def _cmd_describe(args) -> int:
    cfg = load_problem(args.problem)
    p1 = cfg.p1
    print(f"interval = [{_fmt(p1.a)}, {_fmt(p1.b)}]")
    print(f"components = {p1.r}")
    for tag, p in (("potential1", cfg.p1), ("potential2", cfg.p2)):
        if p.r == 1:
            print(f"{tag} = {expr.to_string(p.entries[0][0])}")
        else:
            for i, row in enumerate(p.entries):
                cells = ", ".join(expr.to_string(e) for e in row)
                print(f"{tag}[{i}] = [{cells}]")
    for name, val in sorted(cfg.p1.params.items()):
        if val.imag == 0:
            print(f"parameter {name} = {_fmt(val.real)}")
        else:
            print(f"parameter {name} = {_fmt(val.real)} + {_fmt(val.imag)}i")
    kind = cfg.bc.kind
    sep = "separated" if cfg.bc.is_separated() else "non-separated"
    print(f"boundary = {kind} ({sep})")
    sa = check_self_adjoint(cfg.bc)
    print(f"self_adjoint = {sa.status} (max bracket {sa.max_bracket:.3e})")
    if sa.note:
        print(f"note: {sa.note}")
    print(f"solver rtol = {_fmt(cfg.controls.rtol)}, "
          f"atol = {_fmt(cfg.controls.atol)}")
    print(f"extract_zero_mode = {cfg.extract_zero_mode}")
    print(f"oracle_check = {cfg.oracle_check or 'off'}")
    return 0


# ---------------------------------------------------------------------------
# built-in regression table

def _validate_rows():
    dir_bc = named_bc("dirichlet")

    def airy_closed_form():
        av = oracle.airy_reference(1.0)
        return (math.gamma(1.0 / 3.0) / (2.0 * 3.0 ** (1.0 / 6.0))
                * (av.bi - math.sqrt(3.0) * av.ai))

    def row_airy_ratio():
        got = det_ratio(Problem(0, 1, "x"), Problem(0, 1, "0"), dir_bc).value
        return got, airy_closed_form(), 1e-8

    def row_airy_quoted():
        got = det_ratio(Problem(0, 1, "x"), Problem(0, 1, "0"), dir_bc).value
        return got, 1.085, 1e-3

    def row_free_eigenvalues():
        ev = oracle.eigenvalue_scan(Problem(0, 1, "0"), dir_bc, 3)
        worst = max(abs(v - n * n * math.pi ** 2) / (n * n * math.pi ** 2)
                    for n, v in enumerate(ev.values, start=1))
        return worst, 0.0, 1e-8

    def row_tuned_zero_mode():
        x0 = float(oracle.eigenvalue_scan(Problem(0, 1, "x"),
                                          dir_bc, 1).values[0])
        rep = det_ratio_primed(Problem(0, 1, "x - x0", {"x0": x0}),
                               Problem(0, 1, "0"), dir_bc)
        return rep.value, 0.050666, 1e-4

    def row_periodic_primed():
        rep = det_ratio_primed(Problem(0, 1, "0"), Problem(0, 1, "1"),
                               named_bc("periodic"))
        return rep.value, 1.0 / (4.0 * math.sinh(0.5) ** 2), 1e-8

    def row_periodic_plain():
        rep = det_ratio(Problem(0, 1, "1"), Problem(0, 1, "4"),
                        named_bc("periodic"))
        return rep.value, math.sinh(0.5) ** 2 / math.sinh(1.0) ** 2, 1e-8

    def row_twisted_f10():
        mu, ell = 0.3, 4.0
        q1 = [["1 - 2*mu^2", "(1 - mu^2)*exp(2*i*mu*x)"],
              ["(1 - mu^2)*exp(-2*i*mu*x)", "1 - 2*mu^2"]]
        q0 = [["0", "0"], ["0", "0"]]
        p1 = Problem(-2, 2, q1, {"mu": mu})
        p2 = Problem(-2, 2, q0)
        bc = named_bc("twisted", r=2, mu=mu, l=ell)
        rep = det_ratio_primed(p1, p2, bc, allow_unverified=True)
        nu = math.sqrt(2.0 * (1.0 - 3.0 * mu * mu))
        ref = (8.0 * ell ** 2 * (1.0 - mu * mu)
               * math.sinh(ell * nu / 2.0) ** 2 / nu ** 2)
        return rep.f10.real, ref, 1e-6 * ref

    def row_twisted_matrix():
        mu, ell = 0.25, 2.0
        q1 = [["1 - 2*mu^2", "(1 - mu^2)*exp(2*i*mu*x)"],
              ["(1 - mu^2)*exp(-2*i*mu*x)", "1 - 2*mu^2"]]
        p = Problem(-1, 1, q1, {"mu": mu})
        xs = np.linspace(-1.0, 1.0, 11)
        from .odeprop import propagate_fundamental
        fund = propagate_fundamental(p, 0.0, checkpoints=xs[1:-1])
        worst = 0.0
        mats = dict(fund.checkpoint_matrices)
        mats[1.0] = fund.matrix
        for x, h in mats.items():
            ref = oracle.analytic_fundamental_twisted(float(x), mu, ell)
            worst = max(worst, float(np.max(np.abs(h - ref))))
        return worst, 0.0, 1e-8

    def row_trivial():
        p = Problem(0, 1, "1 + x")
        return det_ratio(p, p, dir_bc).value, 1.0, 1e-12

    def row_boundary_identity():
        from .boundary import (characteristic, normalized_initial_data,
                               reduced_boundary_form)
        from .odeprop import propagate_combination, propagate_fundamental
        bc = named_bc("robin", A=1.0, B=0.5, C=2.0, D=-1.0)
        p = Problem(0, 1, "2 - x")
        fund = propagate_fundamental(p, 0.0)
        char = characteristic(bc, fund)
        init, row = normalized_initial_data(bc, fund.matrix)
        traj = propagate_combination(p, 0.0, init, record=False)
        form = reduced_boundary_form(
            bc, (traj.u_a[0], traj.v_a[0], traj.u_b[0], traj.v_b[0]), row)
        return abs(form - char) / abs(char), 0.0, 1e-10

    def row_gate():
        ok = check_self_adjoint(named_bc("dirichlet")).passed
        ok = ok and check_self_adjoint(named_bc("neumann")).passed
        ok = ok and check_self_adjoint(
            named_bc("robin", A=1, B=2, C=3, D=4)).passed
        ok = ok and check_self_adjoint(named_bc("periodic")).passed
        bad = BoundarySpec(1, np.eye(2), -2.0 * np.eye(2))
        ok = ok and not check_self_adjoint(bad).passed
        refused = False
        try:
            det_ratio_primed(Problem(0, 1, "0.4804530139182014"),
                             Problem(0, 1, "1"), bad)
        except SelfAdjointnessError:
            refused = True
        return (1.0 if (ok and refused) else 0.0), 1.0, 0.0

    return [
        ("airy ratio vs closed form", row_airy_ratio),
        ("airy ratio vs quoted 1.085", row_airy_quoted),
        ("free dirichlet eigenvalues", row_free_eigenvalues),
        ("tuned linear-potential primed ratio", row_tuned_zero_mode),
        ("periodic primed closed form", row_periodic_primed),
        ("periodic plain closed form", row_periodic_plain),
        ("twisted f10 closed form", row_twisted_f10),
        ("twisted propagation vs analytic matrix", row_twisted_matrix),
        ("trivial ratio", row_trivial),
        ("boundary-row determinant identity", row_boundary_identity),
        ("self-adjointness gate", row_gate),
    ]


def _cmd_validate(args) -> int:
    failures = 0
    for name, fn in _validate_rows():
        try:
            got, ref, tol = fn()
            ok = abs(got - ref) <= tol
            detail = f"value {_fmt(got)}, reference {_fmt(ref)}"
        except Exception as exc:  # a row crashing is a failure, not a halt
            ok = False
            detail = f"raised {type(exc).__name__}: {exc}"
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
        if not ok:
            failures += 1
    print(f"{'all rows passed' if not failures else f'{failures} row(s) failed'}")
    return 0 if failures == 0 else 1


# ---------------------------------------------------------------------------
# dispatch

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="detline",
        description="determinant ratios of one-dimensional operators "
                    "-d^2/dx^2 + R(x) under general boundary conditions")
    sub = parser.add_subparsers(dest="command", required=True)

    pr = sub.add_parser("ratio", help="determinant ratio of a problem file")
    pr.add_argument("--problem", required=True, metavar="FILE")
    pr.add_argument("--output", choices=("text", "json"), default="text")
    pr.add_argument("--oracle", type=int, default=None, metavar="N",
                    help="cross-check with the N-term eigenvalue product")
    pr.add_argument("--allow-unverified", action="store_true",
                    help="run the primed path even when self-adjointness "
                         "cannot be verified (multi-component specs)")
    pr.set_defaults(fn=_cmd_ratio)

    pe = sub.add_parser("eigenvalues", help="scan the lowest eigenvalues")
    pe.add_argument("--problem", required=True, metavar="FILE")
    pe.add_argument("--count", required=True, type=int, metavar="N")
    pe.add_argument("--output", choices=("text", "json"), default="text")
    pe.set_defaults(fn=_cmd_eigenvalues)

    pv = sub.add_parser("validate",
                        help="run the built-in closed-form regression table")
    pv.set_defaults(fn=_cmd_validate)

    pd = sub.add_parser("describe",
                        help="echo a parsed problem and its classification")
    pd.add_argument("--problem", required=True, metavar="FILE")
    pd.set_defaults(fn=_cmd_describe)
    return parser


def run(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (expr.ExprSyntaxError, expr.ExprNameError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ZeroModePresent, ZeroModeError, SelfAdjointnessError,
            OracleError, OdePropError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry():
    sys.exit(run())


if __name__ == "__main__":
    entry()
