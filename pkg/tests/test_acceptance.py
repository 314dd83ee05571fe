"""Acceptance gate: one test per release criterion.

Each test prints a single pass/fail line (routed around pytest's capture so
it is visible in any run mode) and enforces the stated tolerance exactly; a
failing criterion fails the suite.
"""

import functools
import time

import numpy as np
import pytest

from polyqn import cli
from polyqn.polysys import (eval_f, eval_f_tilde, euler_residual,
                            finite_difference_jacobian, jacobian,
                            parse_problem, random_system, serialize_problem)
from polyqn.solver import (SolverConfig, broyden_tridiagonal, compare_methods,
                           newton_solve, planted_random, quasi_newton_solve,
                           scalar_cubic)
from polyqn.updates import (broyden_inverse_update, broyden_update,
                            modified_inverse_update, modified_update)

# Criterion 7 regression fixture: iteration counts on Broyden tridiagonal
# n=10 from x0=(-1,...,-1) with tol_f=1e-8, max_iter=100, captured from the
# first verified run and frozen.
TRIDIAGONAL_10_ITERATIONS = {
    ("newton", "-"): 4,
    ("broyden", "direct"): 10,
    ("broyden", "inverse"): 10,
    ("modified", "direct"): 18,
    ("modified", "inverse"): 18,
}


CRITERION_LABELS = {
    "test_criterion_1_euler_identity":
        "criterion 1 (Euler identity, 100-system sweep)",
    "test_criterion_2_jacobian_matches_finite_differences":
        "criterion 2 (analytic Jacobian vs central differences)",
    "test_criterion_3_exact_relation_preserved":
        "criterion 3 (exact relation and maintained identity)",
    "test_criterion_4_secant_and_no_change":
        "criterion 4 (secant condition and no-change directions)",
    "test_criterion_5_one_dimensional_degeneration":
        "criterion 5 (one-dimensional degeneration)",
    "test_criterion_6_inverse_form_consistency":
        "criterion 6 (direct and inverse forms agree)",
    "test_criterion_7_benchmark_convergence":
        "criterion 7 (tridiagonal benchmark, frozen iteration counts)",
    "test_criterion_8_update_cost_scaling":
        "criterion 8 (updates scale as n^2: 400 vs 200 wall time)",
    "test_criterion_9_determinism_and_format":
        "criterion 9 (byte-identical output, round-trip identity)",
}


@pytest.fixture(autouse=True)
def announce_criterion(request, capfd):
    """One visible pass/fail line per criterion, bypassing output capture."""
    yield
    label = CRITERION_LABELS.get(request.node.name)
    report = getattr(request.node, "report_call", None)
    if label is None or report is None:
        return
    verdict = "PASS" if report.passed else "FAIL"
    with capfd.disabled():
        print(f"[acceptance] {label}: {verdict}")


@functools.lru_cache(maxsize=1)
def property_sweep():
    """100 seeded systems spanning n in 1..20 and degree in 1..4, 10 points each."""
    cases = []
    for i in range(100):
        system = random_system((i % 20) + 1, (i % 4) + 1,
                               terms_per_degree=3 + (i % 5), seed=i)
        points = np.random.default_rng(1000 + i).uniform(-2.0, 2.0,
                                                         size=(10, system.n))
        cases.append((system, points))
    return cases


DESK_PROBLEMS = [
    ("scalar-cubic", scalar_cubic, {}),
    ("broyden-tridiagonal-10", lambda: broyden_tridiagonal(10), {"tol_f": 1e-8}),
    ("planted-random-6", lambda: planted_random(6), {}),
    ("planted-random-12", lambda: planted_random(12), {}),
]


def test_criterion_1_euler_identity():
    start = time.perf_counter()
    worst = 0.0
    for system, points in property_sweep():
        for x in points:
            jx = jacobian(system, x) @ x
            resid = np.max(np.abs(euler_residual(system, x)))
            worst = max(worst, resid / (1.0 + np.max(np.abs(jx))))
    elapsed = time.perf_counter() - start
    assert worst <= 1e-10, f"max relative residual {worst:.3e}"
    assert elapsed < 5.0, f"sweep took {elapsed:.2f}s"


def test_criterion_2_jacobian_matches_finite_differences():
    worst = 0.0
    for system, points in property_sweep():
        for x in points:
            diff = jacobian(system, x) - finite_difference_jacobian(system, x)
            worst = max(worst, np.max(np.abs(diff)))
    assert worst <= 1e-5, f"max |J - J_fd| entry {worst:.3e}"


def test_criterion_3_exact_relation_preserved():
    from polyqn.updates import linear_solve

    # (a) after every applied update: J_k x_k = J_prev x_prev + y to 1e-10
    for name, make, overrides in DESK_PROBLEMS:
        prob = make()
        system = prob.system
        x = np.asarray(prob.x0, dtype=float)
        jmat = jacobian(system, x)
        ft = eval_f_tilde(system, x)
        for _ in range(25):
            fx = eval_f(system, x)
            if np.max(np.abs(fx)) <= overrides.get("tol_f", 1e-10):
                break
            x_new = x - linear_solve(jmat, fx)
            p = x_new - x
            ft_new = eval_f_tilde(system, x_new)
            y = ft_new - ft
            out = modified_update(jmat, p, x_new, y)
            if out.applied:
                lhs = out.matrix @ x_new
                rhs = jmat @ x + y
                bound = 1e-10 * (1.0 + np.max(np.abs(y)))
                assert np.max(np.abs(lhs - rhs)) <= bound, name
            jmat, x, ft = out.matrix, x_new, ft_new

    # (b) with exact initialization, J_k x_k = f~(x_k) at every recorded
    # iteration of every converged desk-scale run (1e-8 relative)
    for name, make, overrides in DESK_PROBLEMS:
        prob = make()
        cfg = SolverConfig(method="modified", form="direct", **overrides)
        res = quasi_newton_solve(prob.system, prob.x0, cfg)
        assert res.status == "converged_f", (name, res.status)
        for record in res.trace:
            ft = eval_f_tilde(prob.system, record.x)
            bound = 1e-8 * (1.0 + np.max(np.abs(ft)))
            assert record.secant_residual <= bound, (name, record.k)


def test_criterion_4_secant_and_no_change():
    for seed in range(50):
        rng = np.random.default_rng(5000 + seed)
        n = int(rng.integers(2, 12))
        j = np.eye(n) + 0.3 * rng.standard_normal((n, n))
        p = rng.standard_normal(n)
        q = rng.standard_normal(n)
        x_k = rng.standard_normal(n)
        y = rng.standard_normal(n)
        r = rng.standard_normal(n)
        r -= (r @ p) / (p @ p) * p  # project: p^T r = 0

        out_b = broyden_update(j, p, q)
        assert out_b.applied
        secant = np.max(np.abs(out_b.matrix @ p - q))
        assert secant <= 1e-10 * (1.0 + np.max(np.abs(q)))

        out_m = modified_update(j, p, x_k, y)
        for out in (out_b, out_m):
            if not out.applied:
                continue
            before = j @ r
            after = out.matrix @ r
            assert np.max(np.abs(after - before)) <= 1e-12 * np.max(np.abs(before))


def test_criterion_5_one_dimensional_degeneration():
    from polyqn.polysys import PolySystem
    system = PolySystem(1, 2, [-4.0], [(2, 0, (0, 0), 1.0)])  # x^2 - 4

    newton = newton_solve(system, [1.0], SolverConfig(method="newton"))
    modified = quasi_newton_solve(system, [1.0],
                                  SolverConfig(method="modified", form="direct"))
    expected = [1.0, 2.5, 2.05, 2.000609756097561]
    for k, want in enumerate(expected):
        got = modified.trace[k].x[0]
        assert abs(got - want) <= 1e-10 * abs(want), (k, got)
    assert modified.iterations == newton.iterations
    for rn, rm in zip(newton.trace, modified.trace):
        assert abs(rm.x[0] - rn.x[0]) <= 1e-10 * (1.0 + abs(rn.x[0]))

    broyden = quasi_newton_solve(system, [1.0],
                                 SolverConfig(method="broyden", form="direct"))
    want = 2.5 - 2.25 / 3.5
    assert abs(broyden.trace[2].x[0] - want) <= 1e-10 * want


def test_criterion_6_inverse_form_consistency():
    # iterate-level agreement on well-conditioned desk runs
    for name, make, overrides in DESK_PROBLEMS:
        prob = make()
        for method in ("broyden", "modified"):
            runs = {}
            for form in ("direct", "inverse"):
                cfg = SolverConfig(method=method, form=form, **overrides)
                runs[form] = quasi_newton_solve(prob.system, prob.x0, cfg)
            assert runs["direct"].status == "converged_f", (name, method)
            assert runs["inverse"].status == "converged_f", (name, method)
            for rd, ri in zip(runs["direct"].trace, runs["inverse"].trace):
                scale = 1.0 + np.max(np.abs(rd.x))
                assert np.max(np.abs(rd.x - ri.x)) <= 1e-6 * scale, (name, method)

    # update-level: inverse output times direct output is the identity
    for seed in range(20):
        rng = np.random.default_rng(6000 + seed)
        n = 7
        j = np.eye(n) + 0.25 * rng.standard_normal((n, n))
        jinv = np.linalg.inv(j)
        p = rng.standard_normal(n)
        x_k = rng.standard_normal(n)
        y = rng.standard_normal(n)
        q = rng.standard_normal(n)
        pairs = [
            (modified_update(j, p, x_k, y), modified_inverse_update(jinv, p, x_k, y)),
            (broyden_update(j, p, q), broyden_inverse_update(jinv, p, q)),
        ]
        for direct, inverse in pairs:
            if not (direct.applied and inverse.applied):
                continue
            prod = inverse.matrix @ direct.matrix
            assert np.max(np.abs(prod - np.eye(n))) <= 1e-8


def test_criterion_7_benchmark_convergence():
    start = time.perf_counter()
    prob = broyden_tridiagonal(10)
    cfg = SolverConfig(tol_f=1e-8, max_iter=100)
    results = compare_methods(prob.system, prob.x0, cfg)
    elapsed = time.perf_counter() - start
    got = {}
    for method, form, res in results:
        assert res.status == "converged_f", (method, form, res.status)
        got[(method, form)] = res.iterations
    assert got == TRIDIAGONAL_10_ITERATIONS
    assert elapsed < 1.0, f"benchmark took {elapsed:.2f}s"


def test_criterion_8_update_cost_scaling():
    start = time.perf_counter()

    def median_update_time(n, update, reps=20):
        rng = np.random.default_rng(n)
        j = np.eye(n) + 0.01 * rng.standard_normal((n, n))
        p = rng.standard_normal(n)
        x_k = rng.standard_normal(n)
        y = rng.standard_normal(n)
        update(j, p, x_k, y)  # warm up
        samples = []
        for _ in range(reps):
            t0 = time.perf_counter()
            update(j, p, x_k, y)
            samples.append(time.perf_counter() - t0)
        return float(np.median(samples))

    for update in (modified_update, modified_inverse_update):
        t200 = median_update_time(200, update)
        t400 = median_update_time(400, update)
        ratio = t400 / t200
        assert 2.5 <= ratio <= 8.0, f"{update.__name__}: ratio {ratio:.2f}"
    assert time.perf_counter() - start < 30.0


def test_criterion_9_determinism_and_format(tmp_path):
    solve_outs = []
    for i in range(2):
        out = tmp_path / f"solve{i}.csv"
        rc = cli.main(["solve", "--builtin", "broyden-tridiagonal:10",
                       "--method", "modified", "--tol-f", "1e-8",
                       "--out", str(out)])
        assert rc == 0
        solve_outs.append(out.read_bytes())
    assert solve_outs[0] == solve_outs[1]

    gen_outs = []
    for i in range(2):
        out = tmp_path / f"gen{i}.json"
        rc = cli.main(["generate", "--n", "9", "--max-degree", "3",
                       "--seed", "2024", "--out", str(out)])
        assert rc == 0
        gen_outs.append(out.read_bytes())
    assert gen_outs[0] == gen_outs[1]

    shipped = [scalar_cubic(), broyden_tridiagonal(10), planted_random(6),
               parse_problem(gen_outs[0])]
    for prob in shipped:
        again = parse_problem(serialize_problem(prob))
        assert again == prob, prob.name
