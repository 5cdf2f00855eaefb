"""Command-line front end: run solvers from JSON configs, emit CSV traces,
verify the geometry constants, and check rate certificates.

Exit codes: 0 success/converged, 1 error (bad config, bad arguments),
2 iteration budget exhausted, 3 descent assertion failure in strict mode,
4 rate bound violated.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from pathlib import Path

import jsonschema
import numpy as np

from .geometry import PrimalVector, SpaceDescriptor, step_size_cap
from .operators import (
    IntervalIndicator,
    QuadraticPiece,
    ScaledAbs,
    SeparableConvex,
    ZeroFn,
    affine_map,
    least_squares_gradient,
    zero_map,
)
from .problems import (
    ProblemInstance,
    composite_to_inclusion,
    gen_lasso_like,
    gen_skew_vi,
    gen_strongly_monotone,
)
from .solvers import (
    DescentViolationError,
    FixedStep,
    Halpern,
    IterationRecord,
    LineSearch,
    SolveReport,
    SolveStatus,
    SolverConfig,
    rate_certificate,
    solve,
)
from .verify import constant_checks

__all__ = ["main", "entry", "CONFIG_SCHEMA", "TRACE_HEADER"]

TRACE_HEADER = ["n", "lambda", "residual", "phi_to_solution", "linesearch_trials", "alpha_n"]

_PIECE_SCHEMA = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["zero", "abs", "interval", "quadratic"]},
        "alpha": {"type": "number", "minimum": 0},
        "lo": {"type": "number"},
        "hi": {"type": "number"},
        "w": {"type": "number", "minimum": 0},
    },
    "additionalProperties": False,
}

_SOLVER_SCHEMA = {
    "type": "object",
    "required": ["variant", "epsilon", "maxIterations"],
    "properties": {
        "variant": {"enum": ["fixed", "linesearch", "halpern"]},
        "a": {"type": "number", "exclusiveMinimum": 0},
        "b": {"type": "number", "exclusiveMinimum": 0},
        "schedule": {"enum": ["constant", "ramp"]},
        "gamma": {"type": "number", "exclusiveMinimum": 0},
        "l": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "theta": {"type": "number", "exclusiveMinimum": 0},
        "epsilon": {"type": "number", "exclusiveMinimum": 0},
        "maxIterations": {"type": "integer", "minimum": 1},
        "traceEvery": {"type": "integer", "minimum": 1},
        "x1": {"type": "array", "items": {"type": "number"}},
    },
    "additionalProperties": False,
}

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["space", "problem", "solver", "output"],
    "properties": {
        "space": {
            "type": "object",
            "required": ["n", "p"],
            "properties": {
                "n": {"type": "integer", "minimum": 1},
                "p": {"type": "number", "exclusiveMinimum": 1, "maximum": 2},
            },
            "additionalProperties": False,
        },
        "problem": {
            "type": "object",
            "oneOf": [
                {
                    "required": ["generator", "seed"],
                    "properties": {
                        "generator": {"enum": ["skew_vi", "strongly_monotone", "lasso"]},
                        "seed": {"type": "integer"},
                        "params": {"type": "object"},
                    },
                    "additionalProperties": False,
                },
                {
                    "required": ["inline"],
                    "properties": {
                        "inline": {
                            "type": "object",
                            "required": ["A", "B"],
                            "properties": {
                                "A": {
                                    "type": "object",
                                    "required": ["kind"],
                                    "properties": {
                                        "kind": {"enum": ["affine", "leastSquaresGradient", "zero"]},
                                        "M": {"type": "array"},
                                        "c": {"type": "array", "items": {"type": "number"}},
                                        "b": {"type": "array", "items": {"type": "number"}},
                                    },
                                    "additionalProperties": False,
                                },
                                "B": {
                                    "anyOf": [
                                        _PIECE_SCHEMA,
                                        {"type": "array", "items": _PIECE_SCHEMA},
                                    ]
                                },
                                "knownSolution": {"type": "array", "items": {"type": "number"}},
                                "solutionUnique": {"type": "boolean"},
                            },
                            "additionalProperties": False,
                        }
                    },
                    "additionalProperties": False,
                },
            ],
        },
        "solver": {
            "anyOf": [
                _SOLVER_SCHEMA,
                {"type": "array", "items": _SOLVER_SCHEMA, "minItems": 1},
            ]
        },
        "output": {
            "type": "object",
            "required": ["path"],
            "properties": {"path": {"type": "string"}},
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}


class ConfigError(ValueError):
    pass


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            config = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(config), key=lambda e: len(list(e.absolute_path)))
    if errors:
        err = errors[-1]
        where = "/".join(str(part) for part in err.absolute_path) or "<root>"
        raise ConfigError(f"config field '{where}': {err.message}")
    return config


def _build_piece(spec: dict):
    kind = spec["kind"]
    if kind == "zero":
        return ZeroFn()
    if kind == "abs":
        return ScaledAbs(spec.get("alpha", 1.0))
    if kind == "interval":
        return IntervalIndicator(spec.get("lo", -math.inf), spec.get("hi", math.inf))
    return QuadraticPiece(spec.get("w", 1.0))


def _build_inline_problem(space: SpaceDescriptor, inline: dict) -> ProblemInstance:
    a_spec = inline["A"]
    kind = a_spec["kind"]
    if kind == "affine":
        if "M" not in a_spec:
            raise ConfigError("config field 'problem/inline/A/M': required for affine maps")
        A = affine_map(np.asarray(a_spec["M"], dtype=float), a_spec.get("c"))
    elif kind == "leastSquaresGradient":
        if "M" not in a_spec or "b" not in a_spec:
            raise ConfigError("config field 'problem/inline/A': needs M and b")
        A = least_squares_gradient(np.asarray(a_spec["M"], dtype=float), a_spec["b"])
    else:
        A = zero_map(space.n)
    if A.n != space.n:
        raise ConfigError(f"config field 'problem/inline/A': dimension {A.n} != space n {space.n}")

    b_spec = inline["B"]
    if isinstance(b_spec, dict):
        pieces = [_build_piece(b_spec)] * space.n
    else:
        if len(b_spec) != space.n:
            raise ConfigError(
                f"config field 'problem/inline/B': {len(b_spec)} pieces for dimension {space.n}"
            )
        pieces = [_build_piece(s) for s in b_spec]
    B = SeparableConvex(pieces)

    known = inline.get("knownSolution")
    known_vec = PrimalVector(np.asarray(known, dtype=float), space) if known is not None else None
    return ProblemInstance(
        space=space,
        A=A,
        B=B,
        known_solution=known_vec,
        solution_unique=bool(inline.get("solutionUnique", False)),
    )


def _build_problem(config: dict) -> ProblemInstance:
    space = SpaceDescriptor(config["space"]["n"], config["space"]["p"])
    spec = config["problem"]
    if "inline" in spec:
        return _build_inline_problem(space, spec["inline"])
    name = spec["generator"]
    seed = spec["seed"]
    params = spec.get("params", {})
    try:
        if name == "skew_vi":
            return gen_skew_vi(
                seed, space.n, space.p,
                skew_weight=params.get("skew_weight", 0.5),
                box=(params.get("box_lo", -5.0), params.get("box_hi", 5.0)),
            )
        if name == "strongly_monotone":
            return gen_strongly_monotone(seed, space.n, space.p, gamma=params.get("gamma", 1.0))
        cm = gen_lasso_like(
            seed, params.get("m", 2 * space.n), space.n, space.p,
            alpha=params.get("alpha", 1.0),
            noise=params.get("noise", 0.01),
            sparsity=params.get("sparsity", 0.2),
        )
        return composite_to_inclusion(cm, space)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config field 'problem/params': {exc}") from exc


def _build_solver_config(space: SpaceDescriptor, problem: ProblemInstance,
                         spec: dict) -> tuple[SolverConfig, np.ndarray | None]:
    L = problem.A.lipschitz_bound
    cap = step_size_cap(space, L) if L > 0.0 else math.inf
    name = spec["variant"]
    if name == "linesearch":
        theta_default = 0.9 * (space.p - 1.0)
        variant = LineSearch(
            gamma=spec.get("gamma", 1.0),
            l=spec.get("l", 0.5),
            theta=spec.get("theta", theta_default),
        )
    else:
        if math.isinf(cap):
            a = spec.get("a", 0.1)
            b = spec.get("b", 1.0)
        else:
            a = spec.get("a", 0.1 * cap)
            b = spec.get("b", 0.9 * cap)
        schedule = spec.get("schedule", "constant")
        if name == "fixed":
            variant = FixedStep(a, b, schedule)
        else:
            variant = Halpern(a, b, schedule)
    config = SolverConfig(
        variant=variant,
        epsilon=spec["epsilon"],
        max_iterations=spec["maxIterations"],
        trace_every=spec.get("traceEvery", 1),
    )
    x1 = np.asarray(spec["x1"], dtype=float) if "x1" in spec else None
    return config, x1


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def write_trace(path: str, rows: list[IterationRecord]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_HEADER)
        for rec in rows:
            writer.writerow([
                rec.n,
                _format_cell(rec.lam),
                _format_cell(rec.residual),
                _format_cell(rec.phi_to_solution),
                _format_cell(rec.linesearch_trials),
                _format_cell(rec.alpha),
            ])


def read_trace(path: str) -> list[IterationRecord]:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != TRACE_HEADER:
            raise ConfigError(f"unexpected trace header {reader.fieldnames}")
        for row in reader:
            rows.append(IterationRecord(
                n=int(row["n"]),
                lam=float(row["lambda"]),
                residual=float(row["residual"]),
                phi_to_solution=float(row["phi_to_solution"]) if row["phi_to_solution"] else None,
                linesearch_trials=int(row["linesearch_trials"]) if row["linesearch_trials"] else None,
                alpha=float(row["alpha_n"]) if row["alpha_n"] else None,
            ))
    return rows


def _summary_line(report: SolveReport, seconds: float) -> str:
    residual = report.trace[-1].residual if report.trace else math.nan
    return (
        f"status={report.status.value} iters={report.iterations} "
        f"residual={residual:.17g} seconds={seconds:.3f}"
    )


def _status_exit(status: SolveStatus) -> int:
    return 0 if status in (SolveStatus.CONVERGED, SolveStatus.EXACT_SOLUTION_HIT) else 2


def cmd_run(args) -> int:
    try:
        config = _load_config(args.config)
        if not isinstance(config["solver"], dict):
            raise ConfigError("config field 'solver': run expects a single solver object")
        problem = _build_problem(config)
        solver_config, x1 = _build_solver_config(problem.space, problem, config["solver"])
        start = time.perf_counter()
        report = solve(problem, solver_config, x1)
        seconds = time.perf_counter() - start
    except DescentViolationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    write_trace(config["output"]["path"], report.trace)
    print(_summary_line(report, seconds))
    return _status_exit(report.status)


def cmd_compare(args) -> int:
    try:
        config = _load_config(args.config)
        solver_specs = config["solver"]
        if isinstance(solver_specs, dict):
            solver_specs = [solver_specs]
        problem = _build_problem(config)
        base = Path(config["output"]["path"])

        results = []
        seen: dict[str, int] = {}
        for spec in solver_specs:
            name = spec["variant"]
            seen[name] = seen.get(name, 0) + 1
            label = name if seen[name] == 1 else f"{name}{seen[name]}"
            solver_config, x1 = _build_solver_config(problem.space, problem, spec)
            start = time.perf_counter()
            report = solve(problem, solver_config, x1)
            seconds = time.perf_counter() - start
            trace_path = base.with_name(f"{base.stem}.{label}{base.suffix}")
            write_trace(str(trace_path), report.trace)
            results.append((label, report, seconds, trace_path))
    except DescentViolationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    print(f"{'variant':<14} {'status':<16} {'iters':>8} {'resolvents':>10} {'residual':>13}")
    for label, report, seconds, _ in results:
        residual = report.trace[-1].residual if report.trace else math.nan
        print(
            f"{label:<14} {report.status.value:<16} {report.iterations:>8} "
            f"{report.resolvent_calls:>10} {residual:>13.6e}"
        )
    return max(_status_exit(report.status) for _, report, _, _ in results)


def cmd_verify_constants(args) -> int:
    p_values = args.p or [1.25, 1.5, 2.0]
    for p in p_values:
        if not (1.0 < p <= 2.0):
            print(f"error: p={p} outside the supported range (1, 2]", file=sys.stderr)
            return 1
    all_passed = True
    for p in p_values:
        for check in constant_checks(p, args.samples, args.seed):
            flag = "PASS" if check.passed else "FAIL"
            all_passed &= check.passed
            print(
                f"p={p:<5g} {check.name:<45} max violation {check.max_violation:10.3e} "
                f"(tol {check.tolerance:.0e})  {flag}"
            )
    return 0 if all_passed else 4


def cmd_rate_report(args) -> int:
    try:
        trace = read_trace(args.trace)
    except (OSError, ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if not trace:
        print("error: empty trace", file=sys.stderr)
        return 1
    phi1 = args.phi1
    if phi1 is None:
        phi1 = trace[0].phi_to_solution
        if phi1 is None:
            print("error: trace has no phi_to_solution column and --phi1 not given", file=sys.stderr)
            return 1
    try:
        space = SpaceDescriptor(args.n, args.p)
        cert = rate_certificate(space, args.L, args.b, phi1, trace)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"worstRatio={cert.worst_ratio:.17g} pass={cert.passed}")
    return 0 if cert.passed else 4


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="lpsplit",
        description="Splitting solvers for monotone inclusions in lp geometry (1 < p <= 2).",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one solver from a JSON config")
    run_p.add_argument("config")
    run_p.set_defaults(func=cmd_run)

    cmp_p = sub.add_parser("compare", help="run several variants side by side")
    cmp_p.add_argument("config")
    cmp_p.set_defaults(func=cmd_compare)

    ver_p = sub.add_parser("verify-constants", help="sampled checks of mu/kappa inequalities")
    ver_p.add_argument("--p", type=float, action="append",
                       help="exponent in (1, 2]; repeatable (default: 1.25 1.5 2)")
    ver_p.add_argument("--samples", type=int, default=10_000)
    ver_p.add_argument("--seed", type=int, default=0)
    ver_p.set_defaults(func=cmd_verify_constants)

    rate_p = sub.add_parser("rate-report", help="check the residual rate certificate on a trace")
    rate_p.add_argument("trace")
    rate_p.add_argument("--phi1", type=float, default=None,
                        help="phi(x*, x1); default: first phi_to_solution entry")
    rate_p.add_argument("--L", type=float, required=True, help="certified Lipschitz bound")
    rate_p.add_argument("--b", type=float, required=True, help="upper step size")
    rate_p.add_argument("--n", type=int, required=True, help="space dimension")
    rate_p.add_argument("--p", type=float, required=True, help="space exponent")
    rate_p.set_defaults(func=cmd_rate_report)

    args = parser.parse_args(argv)
    return args.func(args)


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
