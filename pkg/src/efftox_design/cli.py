"""Command-line interface.

Commands::

    efftox-design optimize   PROBLEM [--k K] [--seed S] [--grid N] [--tol T] [--out PATH]
    efftox-design minimal    PROBLEM [--out PATH]
    efftox-design verify     PROBLEM DESIGN [--grid N] [--tol T] [--curve CSV] [--out PATH]
    efftox-design efficiency PROBLEM DESIGN REFERENCE [--out PATH]

Problem and design files are JSON; sensitivity curves are written as CSV.
Exit codes: 0 ok/optimal, 1 input error, 2 not converged / not optimal,
3 numerical failure, 4 no closed form available.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from dataclasses import dataclass, fields

import numpy as np

from .activecontrol import ControlSpec, extend
from .criteria import CriterionSpec, efficiency
from .design_theory import minimal_d_design
from .equivalence import DEFAULT_GRID, DEFAULT_TOL, verify
from .errors import ConfigurationError, DesignError, NoClosedFormError, SingularDesignError
from .infomat import BivariateModel, CovarianceSpec, Design, DoseRange, make_design
from .models import ModelFamily, ModelSpec, param_count
from .pso import DesignProblem, PsoConfig, optimize

log = logging.getLogger(__name__)

EXIT_OK, EXIT_INPUT, EXIT_NOT_CONVERGED, EXIT_NUMERIC, EXIT_NO_CLOSED_FORM = 0, 1, 2, 3, 4


class InputError(Exception):
    """Invalid input file; the message starts with the offending field path."""

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass
class Problem:
    design_problem: DesignProblem
    control: ControlSpec | None
    pso: PsoConfig


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(path, f"cannot read file ({exc.strerror})") from exc
    except json.JSONDecodeError as exc:
        raise InputError(path, f"invalid JSON at line {exc.lineno} column {exc.colno}") from exc


def _get(obj, key, path, kind=dict):
    if not isinstance(obj, dict) or key not in obj:
        raise InputError(path + key if not path else f"{path}.{key}", "missing")
    val = obj[key]
    if kind is not None and not isinstance(val, kind):
        raise InputError(f"{path}.{key}" if path else key, f"expected {kind.__name__}")
    return val


def _number(val, path, positive=False):
    if isinstance(val, bool) or not isinstance(val, (int, float)) or not math.isfinite(val):
        raise InputError(path, f"expected a finite number, got {val!r}")
    if positive and val <= 0:
        raise InputError(path, f"must be positive, got {val}")
    return float(val)


def _model(obj, name):
    block = _get(obj, name, "", dict)
    try:
        family = ModelFamily.parse(_get(block, "family", name, str))
    except ConfigurationError as exc:
        raise InputError(f"{name}.family", str(exc)) from exc
    params = _get(block, "params", name, list)
    n = param_count(family)
    if len(params) != n:
        raise InputError(f"{name}.params", f"{family.value} needs {n} values, got {len(params)}")
    values = [_number(v, f"{name}.params[{i}]") for i, v in enumerate(params)]
    if family in (ModelFamily.MICHAELIS_MENTEN, ModelFamily.EMAX) and values[-1] <= 0:
        raise InputError(f"{name}.params[{n - 1}]",
                         f"half-maximal dose must be positive, got {values[-1]}")
    return ModelSpec(family, values)


def _covariance(block, path, default_rho=None):
    se = _number(_get(block, "sigma_e", path, None), f"{path}.sigma_e", positive=True)
    st = _number(_get(block, "sigma_t", path, None), f"{path}.sigma_t", positive=True)
    if "rho" in block:
        rho = _number(block["rho"], f"{path}.rho")
    elif default_rho is not None:
        rho = default_rho
    else:
        raise InputError(f"{path}.rho", "missing")
    if not -1.0 < rho < 1.0:
        raise InputError(f"{path}.rho", f"must lie in (-1, 1), got {rho}")
    return CovarianceSpec(se, st, rho)


def _criterion(block, s):
    p = block.get("p", 0)
    if isinstance(p, str):
        if p.strip().lower() not in ("-inf", "-infinity"):
            raise InputError("criterion.p", f"expected a number or \"-inf\", got {p!r}")
        p = -math.inf
    else:
        p = _number(p, "criterion.p")
    if not p < 1:
        raise InputError("criterion.p", f"must be below 1, got {p}")
    K = block.get("K")
    if K is not None:
        try:
            K = np.array(K, dtype=float)
        except (TypeError, ValueError) as exc:
            raise InputError("criterion.K", "expected a list of numeric rows") from exc
        if K.ndim != 2 or K.shape[0] != s:
            raise InputError("criterion.K", f"expected {s} rows of equal length")
    try:
        return CriterionSpec(p, K)
    except ConfigurationError as exc:
        raise InputError("criterion.K", str(exc)) from exc


def _pso_config(block):
    known = {f.name for f in fields(PsoConfig)}
    kwargs = {}
    for key, val in block.items():
        if key not in known:
            raise InputError(f"pso.{key}", "unknown setting")
        kwargs[key] = val
    try:
        return PsoConfig(**kwargs)
    except (ConfigurationError, TypeError, ValueError) as exc:
        raise InputError("pso", str(exc)) from exc


def parse_problem(data) -> Problem:
    """Validate a decoded problem file."""
    if not isinstance(data, dict):
        raise InputError("<root>", "expected a JSON object")
    eff, tox = _model(data, "efficacy"), _model(data, "toxicity")
    cov = _covariance(_get(data, "covariance", "", dict), "covariance")
    rng_block = _get(data, "range", "", dict)
    L = _number(_get(rng_block, "L", "range", None), "range.L")
    R = _number(_get(rng_block, "R", "range", None), "range.R")
    if L < 0:
        raise InputError("range.L", f"must be non-negative, got {L}")
    if not R > L:
        raise InputError("range.R", f"must exceed range.L, got {R}")
    bm = BivariateModel(eff, tox, cov)
    crit = _criterion(data.get("criterion", {}), bm.n_params)
    control = None
    if "control" in data:
        cblock = _get(data, "control", "", dict)
        ccov = _covariance(cblock, "control", default_rho=cov.rho)
        dose = _number(cblock.get("dose", 0.0), "control.dose")
        control = ControlSpec(ccov, dose)
    pso = _pso_config(data.get("pso", {}))
    return Problem(DesignProblem(bm, DoseRange(L, R), crit), control, pso)


def load_problem(path) -> Problem:
    return parse_problem(_load_json(path))


def parse_design(data, dose_range: DoseRange) -> Design:
    """Design from ``{"points", "weights"}``, optionally nested under ``design``."""
    if isinstance(data, dict) and "design" in data and isinstance(data["design"], dict):
        data, prefix = data["design"], "design"
    else:
        prefix = ""
    pts = _get(data, "points", prefix, list)
    w = _get(data, "weights", prefix, list)
    where = f"{prefix}." if prefix else ""
    pts = [_number(v, f"{where}points[{i}]") for i, v in enumerate(pts)]
    w = [_number(v, f"{where}weights[{i}]") for i, v in enumerate(w)]
    if len(pts) != len(w) or not pts:
        raise InputError(f"{where}weights", "points and weights must be non-empty and equally long")
    for i, d in enumerate(pts):
        if not dose_range.contains(d):
            raise InputError(f"{where}points[{i}]", f"dose {d} outside [{dose_range.L}, {dose_range.R}]")
    for i, v in enumerate(w):
        if v <= 0:
            raise InputError(f"{where}weights[{i}]", f"must be positive, got {v}")
    try:
        # already canonical input is kept bit for bit so reports reproduce exactly
        return Design(pts, w)
    except DesignError:
        return make_design(pts, w, dose_range)


def load_design(path, dose_range) -> Design:
    return parse_design(_load_json(path), dose_range)


def _fmt(values):
    return ", ".join(f"{v:.6g}" for v in values)


def _summary(xi: Design) -> str:
    return f"doses [{_fmt(xi.points)}]  weights [{_fmt(xi.weights)}]"


def _emit(payload, out):
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _criterion_json(crit: CriterionSpec):
    p = "-inf" if crit.is_e_optimal else crit.p
    out = {"p": p}
    if crit.K is not None:
        out["K"] = crit.K.tolist()
    return out


def _with_control(payload, problem: Problem, xi: Design):
    if problem.control is not None:
        ac = extend(xi, problem.design_problem.bm, problem.control, problem.design_problem.crit.p)
        payload["active_control"] = ac.to_dict()


def cmd_optimize(args) -> int:
    problem = load_problem(args.problem)
    cfg = problem.pso
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.k is not None:
        overrides["k_max"] = args.k
    if overrides:
        cfg = PsoConfig(**{**{f.name: getattr(cfg, f.name) for f in fields(PsoConfig)}, **overrides})
    xi, diag = optimize(problem.design_problem, cfg, grid_n=args.grid, tol=args.tol)
    payload = {
        "design": xi.to_dict(),
        "criterion": _criterion_json(problem.design_problem.crit),
        "report": diag.report.to_dict(),
        "diagnostics": diag.to_dict(),
    }
    _with_control(payload, problem, xi)
    _emit(payload, args.out)
    print(_summary(xi), file=sys.stderr)
    return EXIT_OK if diag.converged else EXIT_NOT_CONVERGED


def cmd_minimal(args) -> int:
    problem = load_problem(args.problem)
    dp = problem.design_problem
    try:
        xi = minimal_d_design(dp.bm, dp.dose_range)
    except NoClosedFormError as exc:
        print(f"{exc}\nsuggestion: efftox-design optimize {args.problem} --k {exc.suggested_k}",
              file=sys.stderr)
        return EXIT_NO_CLOSED_FORM
    payload = {"design": xi.to_dict()}
    if problem.control is not None:
        ac = extend(xi, dp.bm, problem.control, 0.0)
        payload["active_control"] = ac.to_dict()
    _emit(payload, args.out)
    print(_summary(xi), file=sys.stderr)
    return EXIT_OK


def cmd_verify(args) -> int:
    problem = load_problem(args.problem)
    dp = problem.design_problem
    xi = load_design(args.design, dp.dose_range)
    report = verify(xi, dp.bm, dp.crit, dp.dose_range, args.grid, args.tol, keep_curve=bool(args.curve))
    if args.curve:
        with open(args.curve, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["dose", "sensitivity"])
            writer.writerows(report.curve)
    payload = {"design": xi.to_dict(), "report": report.to_dict()}
    _emit(payload, args.out)
    return EXIT_OK if report.optimal else EXIT_NOT_CONVERGED


def cmd_efficiency(args) -> int:
    problem = load_problem(args.problem)
    dp = problem.design_problem
    xi = load_design(args.design, dp.dose_range)
    ref = load_design(args.reference, dp.dose_range)
    eff = efficiency(xi, ref, dp.bm, dp.crit)
    if args.out:
        _emit({"efficiency": eff}, args.out)
    else:
        print(repr(eff))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write JSON output here instead of stdout")
    common.add_argument("--seed", type=int, help="PSO seed (overrides the problem file)")
    common.add_argument("--grid", type=int, default=DEFAULT_GRID, help="sensitivity grid size")
    common.add_argument("--tol", type=float, default=DEFAULT_TOL,
                        help="relative tolerance of the optimality check")
    common.add_argument("--k", type=int, help="support-point budget for PSO")
    common.add_argument("--curve", help="CSV path for the sensitivity curve (verify)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="efftox-design", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("optimize", parents=[common], help="PSO search for an optimal design")
    p.add_argument("problem")
    p.set_defaults(func=cmd_optimize)
    p = sub.add_parser("minimal", parents=[common], help="closed-form minimal D-optimal design")
    p.add_argument("problem")
    p.set_defaults(func=cmd_minimal)
    p = sub.add_parser("verify", parents=[common], help="check a design with the equivalence theorem")
    p.add_argument("problem")
    p.add_argument("design")
    p.set_defaults(func=cmd_verify)
    p = sub.add_parser("efficiency", parents=[common], help="efficiency of a design against a reference")
    p.add_argument("problem")
    p.add_argument("design")
    p.add_argument("reference")
    p.set_defaults(func=cmd_efficiency)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ConfigurationError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (SingularDesignError, DesignError, np.linalg.LinAlgError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
