"""Command-line front end.

Subcommands: ``solve`` (run one method on one problem, emit the iteration
trace as CSV), ``compare`` (run Newton plus all four quasi-Newton variants,
emit a summary table), ``generate`` (write a seeded random problem file with
a planted root), and ``verify`` (sample-check the homogeneous-identity
residual and the analytic Jacobian against finite differences).

Exit codes: 0 success, 1 usage or input error, 2 numerical non-convergence
(or a verify tolerance failure).  All randomness derives from --seed; CSV
floats use 17 significant digits so repeated runs are byte-identical.
"""

import argparse
import sys
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from polyqn.polysys import (ProblemFile, ProblemFormatError, euler_residual,
                            finite_difference_jacobian, jacobian,
                            parse_problem, plant_root, random_system,
                            serialize_problem)
from polyqn.backend import kernels
from polyqn.solver import (COMPARE_VARIANTS, SolverConfig, broyden_tridiagonal,
                           newton_solve, planted_random, quasi_newton_solve,
                           scalar_cubic)

TRACE_COLUMNS = "k,f_norm,step_norm,denominator,update_applied,secant_residual"
SUMMARY_COLUMNS = ("problem,method,form,status,iterations,f_norm,wall_time_ms,"
                   "f_evals,jacobian_evals,updates_skipped")
EULER_TOL = 1e-10
JAC_FD_TOL = 1e-5


class _Parser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit 1 instead of argparse's 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


@dataclass(frozen=True)
class RunSummary:
    problem: str
    method: str
    form: str
    status: str
    iterations: int
    f_norm: float
    wall_time_ms: float
    f_evals: int
    jacobian_evals: int
    updates_skipped: int


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def _bool(v: bool) -> str:
    return "true" if v else "false"


def trace_csv(result) -> str:
    lines = [TRACE_COLUMNS]
    for r in result.trace:
        lines.append(f"{r.k},{_fmt(r.f_norm)},{_fmt(r.step_norm)},"
                     f"{_fmt(r.denominator)},{_bool(r.update_applied)},"
                     f"{_fmt(r.secant_residual)}")
    return "\n".join(lines) + "\n"


def summary_csv(rows) -> str:
    lines = [SUMMARY_COLUMNS]
    for s in rows:
        lines.append(f"{s.problem},{s.method},{s.form},{s.status},{s.iterations},"
                     f"{_fmt(s.f_norm)},{s.wall_time_ms:.3f},{s.f_evals},"
                     f"{s.jacobian_evals},{s.updates_skipped}")
    return "\n".join(lines) + "\n"


def _write_output(text: str, out_path):
    if out_path is None:
        sys.stdout.write(text)
    else:
        Path(out_path).write_bytes(text.encode("utf-8"))


def resolve_builtin(spec: str) -> ProblemFile:
    """Builtins: scalar-cubic, broyden-tridiagonal:N, planted-random:N."""
    name, _, arg = spec.partition(":")
    if name == "scalar-cubic":
        if arg:
            raise ValueError("scalar-cubic takes no size argument")
        return scalar_cubic()
    if name in ("broyden-tridiagonal", "planted-random"):
        if not arg:
            raise ValueError(f"builtin {name} needs a size, e.g. {name}:10")
        try:
            n = int(arg)
        except ValueError:
            raise ValueError(f"invalid size {arg!r} for builtin {name}") from None
        return broyden_tridiagonal(n) if name == "broyden-tridiagonal" else planted_random(n)
    raise ValueError(f"unknown builtin {spec!r} (try scalar-cubic, "
                     f"broyden-tridiagonal:N, planted-random:N)")


def _load_problem_file(path: str) -> ProblemFile:
    try:
        data = Path(path).read_bytes()
    except OSError as err:
        raise ValueError(f"cannot read {path}: {err}") from err
    return parse_problem(data)


def _gather_problems(args) -> list:
    problems = []
    for path in args.problem or []:
        problems.append(_load_problem_file(path))
    for spec in args.builtin or []:
        problems.append(resolve_builtin(spec))
    return problems


def _config_from_args(args) -> SolverConfig:
    return SolverConfig(
        method=getattr(args, "method", "modified"),
        form=getattr(args, "form", "direct"),
        tol_f=args.tol_f,
        tol_x=args.tol_x,
        max_iter=args.max_iter,
        denom_eps=args.denom_eps,
        init=args.init,
        restart_on_skip=args.restart_on_skip,
    )


def _run(problem: ProblemFile, method: str, form: str, cfg: SolverConfig):
    if method == "newton":
        cfg = replace(cfg, method="newton", form="direct")
        return newton_solve(problem.system, problem.x0, cfg)
    cfg = replace(cfg, method=method, form=form)
    return quasi_newton_solve(problem.system, problem.x0, cfg)


def cmd_solve(args) -> int:
    try:
        problems = _gather_problems(args)
        if len(problems) != 1:
            raise ValueError("solve needs exactly one --problem or --builtin")
        cfg = _config_from_args(args)
    except ValueError as err:
        print(f"polyqn solve: {err}", file=sys.stderr)
        return 1
    result = _run(problems[0], cfg.method, cfg.form, cfg)
    _write_output(trace_csv(result), args.out)
    return 0 if result.status.startswith("converged") else 2


def cmd_compare(args) -> int:
    try:
        problems = _gather_problems(args)
        if not problems:
            raise ValueError("no problems given; use --problem and/or --builtin")
        cfg = _config_from_args(args)
    except ValueError as err:
        print(f"polyqn compare: {err}", file=sys.stderr)
        return 1
    rows = []
    all_converged = True
    for problem in problems:
        for method, form in COMPARE_VARIANTS:
            start = time.perf_counter()
            res = _run(problem, method, form, cfg)
            wall_ms = (time.perf_counter() - start) * 1e3
            skipped = sum(1 for r in res.trace[1:] if not r.update_applied)
            rows.append(RunSummary(problem.name, method, form, res.status,
                                   res.iterations, res.trace[-1].f_norm, wall_ms,
                                   res.f_evals, res.jacobian_evals, skipped))
            all_converged &= res.status.startswith("converged")
    _write_output(summary_csv(rows), args.out)
    return 0 if all_converged else 2


def cmd_generate(args) -> int:
    try:
        system = random_system(args.n, args.max_degree, args.terms_per_degree,
                               (args.coeff_lo, args.coeff_hi), args.seed)
        rng = np.random.default_rng(args.seed + 1)
        x_star = rng.uniform(-1.0, 1.0, size=args.n)
        system = plant_root(system, x_star)
        direction = rng.uniform(-1.0, 1.0, size=args.n)
        direction /= np.linalg.norm(direction)
        x0 = x_star + 0.05 * direction
        name = args.name or f"generated-n{args.n}-d{args.max_degree}-s{args.seed}"
        problem = ProblemFile(system, x0, x_star, name)
    except ValueError as err:
        print(f"polyqn generate: {err}", file=sys.stderr)
        return 1
    Path(args.out).write_bytes(serialize_problem(problem))
    return 0


def cmd_verify(args) -> int:
    try:
        problems = _gather_problems(args)
        if len(problems) != 1:
            raise ValueError("verify needs exactly one --problem or --builtin")
        if args.samples < 1:
            raise ValueError(f"--samples must be >= 1, got {args.samples}")
    except ValueError as err:
        print(f"polyqn verify: {err}", file=sys.stderr)
        return 1
    sys_ = problems[0].system
    rng = np.random.default_rng(args.seed)
    euler_max = 0.0
    fd_max = 0.0
    for _ in range(args.samples):
        x = rng.uniform(-2.0, 2.0, size=sys_.n)
        jac = jacobian(sys_, x)
        scale = 1.0 + float(np.max(np.abs(kernels.matvec(jac, x))))
        euler_max = max(euler_max, float(np.max(np.abs(euler_residual(sys_, x)))) / scale)
        fd_max = max(fd_max, float(np.max(np.abs(jac - finite_difference_jacobian(sys_, x)))))
    text = ("metric,value\n"
            f"euler_residual_max_rel,{_fmt(euler_max)}\n"
            f"jacobian_fd_max_abs,{_fmt(fd_max)}\n")
    _write_output(text, args.out)
    return 0 if euler_max <= EULER_TOL and fd_max <= JAC_FD_TOL else 2


def _add_problem_args(p):
    p.add_argument("--problem", action="append", metavar="FILE",
                   help="problem file (JSON); repeatable where that makes sense")
    p.add_argument("--builtin", action="append", metavar="NAME",
                   help="built-in problem: scalar-cubic, broyden-tridiagonal:N, "
                        "planted-random:N")


def _add_solver_args(p):
    p.add_argument("--tol-f", type=float, default=1e-10,
                   help="residual infinity-norm stop (default 1e-10)")
    p.add_argument("--tol-x", type=float, default=1e-12,
                   help="step infinity-norm stop (default 1e-12)")
    p.add_argument("--max-iter", type=int, default=200,
                   help="iteration cap (default 200)")
    p.add_argument("--denom-eps", type=float, default=1e-12,
                   help="update safeguard threshold (default 1e-12)")
    p.add_argument("--init", choices=["exact_jacobian", "identity"],
                   default="exact_jacobian", help="initial Jacobian approximation")
    p.add_argument("--restart-on-skip", action="store_true",
                   help="rebuild from the exact Jacobian after a rejected update")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="polyqn",
                     description="Quasi-Newton solvers for polynomial-only systems")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="run one method, emit the trace as CSV")
    _add_problem_args(p_solve)
    p_solve.add_argument("--method", choices=["newton", "broyden", "modified"],
                         default="modified")
    p_solve.add_argument("--form", choices=["direct", "inverse"], default="direct")
    _add_solver_args(p_solve)
    p_solve.add_argument("--out", metavar="PATH", help="write CSV here instead of stdout")
    p_solve.set_defaults(func=cmd_solve)

    p_cmp = sub.add_parser("compare", help="run all five variants, emit a summary table")
    _add_problem_args(p_cmp)
    _add_solver_args(p_cmp)
    p_cmp.add_argument("--out", metavar="PATH")
    p_cmp.set_defaults(func=cmd_compare)

    p_gen = sub.add_parser("generate", help="write a random problem with a planted root")
    p_gen.add_argument("--n", type=int, required=True)
    p_gen.add_argument("--max-degree", type=int, required=True)
    p_gen.add_argument("--terms-per-degree", type=int, default=4)
    p_gen.add_argument("--coeff-lo", type=float, default=-1.0)
    p_gen.add_argument("--coeff-hi", type=float, default=1.0)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--name", default="")
    p_gen.add_argument("--out", metavar="PATH", required=True)
    p_gen.set_defaults(func=cmd_generate)

    p_ver = sub.add_parser("verify", help="sample-check the Euler identity and Jacobian")
    _add_problem_args(p_ver)
    p_ver.add_argument("--samples", type=int, default=100)
    p_ver.add_argument("--seed", type=int, default=0)
    p_ver.add_argument("--out", metavar="PATH")
    p_ver.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ProblemFormatError as err:
        print(f"polyqn: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
