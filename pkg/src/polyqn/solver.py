"""Root-finding drivers: Newton and the rank-one quasi-Newton variants.

All drivers iterate x_{k+1} = x_k - J_k^{-1} f(x_k) with full steps (no line
search), differing only in how J_k (or its inverse) is maintained:

* ``newton``   -- fresh analytic Jacobian every step.
* ``broyden``  -- classic rank-one secant update, direct or inverse form.
* ``modified`` -- rank-one update based on the exact polynomial relation
  J_k x_k = J_{k-1} x_{k-1} + (f~(x_k) - f~(x_{k-1})), direct or inverse form.

The first step always uses J_0 (per config: exact analytic Jacobian, or the
identity); updates begin once two iterates exist.  Every iterate is recorded
in an IterRecord trace, including update denominators and safeguard
rejections, so a solve can be replayed and audited offline.
"""

from dataclasses import dataclass, replace

import numpy as np

from polyqn.backend import kernels
from polyqn.polysys import (PolySystem, ProblemFile, eval_f, eval_f_tilde,
                            jacobian, plant_root, random_system)
from polyqn.updates import (SingularMatrixError, broyden_inverse_update,
                            broyden_update, linear_solve,
                            modified_inverse_update, modified_update)

METHODS = ("newton", "broyden", "modified")
FORMS = ("direct", "inverse")
INITS = ("exact_jacobian", "identity")

STATUS_CONVERGED_F = "converged_f"
STATUS_CONVERGED_X = "converged_x"
STATUS_MAX_ITER = "max_iter"
STATUS_SINGULAR = "singular"
STATUS_STALLED = "stalled"


@dataclass(frozen=True)
class SolverConfig:
    """Stopping rules, safeguard threshold, and method selectors.

    ``form`` is ignored for method="newton".  With ``restart_on_skip`` a
    rejected update triggers re-initialization from the exact analytic
    Jacobian at the current iterate.
    """

    method: str = "modified"
    form: str = "direct"
    tol_f: float = 1e-10
    tol_x: float = 1e-12
    max_iter: int = 200
    denom_eps: float = 1e-12
    init: str = "exact_jacobian"
    restart_on_skip: bool = False

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.form not in FORMS:
            raise ValueError(f"form must be one of {FORMS}, got {self.form!r}")
        if self.init not in INITS:
            raise ValueError(f"init must be one of {INITS}, got {self.init!r}")
        if not self.tol_f > 0:
            raise ValueError("tol_f must be > 0")
        if not self.tol_x > 0:
            raise ValueError("tol_x must be > 0")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not self.denom_eps > 0:
            raise ValueError("denom_eps must be > 0")


@dataclass(frozen=True)
class IterRecord:
    """One row of a solve trace.

    ``denominator`` is the update safeguard scalar (0.0 at k=0 and for
    Newton rows).  ``secant_residual`` holds the method's maintained-identity
    residual: |J_k x_k - f~(x_k)|_inf for the modified method and
    |J_k p_k - q_k|_inf for broyden; inverse forms store the analogous
    inverse-side residuals |Jinv_k f~(x_k) - x_k|_inf and
    |Jinv_k q_k - p_k|_inf, since J_k itself is never materialized there.
    """

    k: int
    x: np.ndarray
    f_norm: float
    step_norm: float
    denominator: float
    update_applied: bool
    secant_residual: float


@dataclass(frozen=True)
class SolveResult:
    """Outcome of one solve.

    ``status`` is one of converged_f, converged_x, max_iter, singular,
    stalled.  ``jacobian_evals`` counts analytic-Jacobian constructions only.
    """

    status: str
    trace: list
    x_final: np.ndarray
    iterations: int
    f_evals: int
    jacobian_evals: int


def _inf_norm(v) -> float:
    return float(np.max(np.abs(v))) if v.size else 0.0


def _frozen(x: np.ndarray) -> np.ndarray:
    out = x.copy()
    out.setflags(write=False)
    return out


def _check_x0(sys: PolySystem, x0) -> np.ndarray:
    x0 = np.ascontiguousarray(x0, dtype=float).reshape(-1)
    if x0.shape != (sys.n,):
        raise ValueError(f"x0 has length {x0.size}, expected n={sys.n}")
    return x0


def _inverse_step(jinv: np.ndarray, fx: np.ndarray) -> np.ndarray:
    dx = kernels.matvec(jinv, fx)
    if not np.all(np.isfinite(dx)):
        raise SingularMatrixError("inverse-form step is not finite")
    return dx


def newton_solve(sys: PolySystem, x0, cfg: SolverConfig) -> SolveResult:
    """Newton iteration with a fresh analytic Jacobian each step."""
    x = _check_x0(sys, x0)
    fx = eval_f(sys, x)
    fnorm = _inf_norm(fx)
    f_evals = 1
    jac_evals = 0
    trace = [IterRecord(0, _frozen(x), fnorm, 0.0, 0.0, True, 0.0)]
    if fnorm <= cfg.tol_f:
        return SolveResult(STATUS_CONVERGED_F, trace, _frozen(x), 0, f_evals, jac_evals)

    k = 0
    status = None
    while status is None:
        try:
            jac = jacobian(sys, x)
            jac_evals += 1
            dx = linear_solve(jac, fx)
        except SingularMatrixError:
            status = STATUS_SINGULAR
            break
        x_new = x - dx
        p = x_new - x
        k += 1
        fx = eval_f(sys, x_new)
        f_evals += 1
        fnorm = _inf_norm(fx)
        step_norm = _inf_norm(p)
        trace.append(IterRecord(k, _frozen(x_new), fnorm, step_norm, 0.0, True, 0.0))
        x = x_new
        if fnorm <= cfg.tol_f:
            status = STATUS_CONVERGED_F
        elif step_norm <= cfg.tol_x:
            status = STATUS_CONVERGED_X
        elif k >= cfg.max_iter:
            status = STATUS_MAX_ITER
    return SolveResult(status, trace, _frozen(x), k, f_evals, jac_evals)


def _init_matrix(sys, x0, cfg, inverse):
    """J_0 (direct form) or J_0^{-1} (inverse form) per cfg.init.

    Returns (matrix, jacobian_evals, failed); `failed` marks a singular
    exact Jacobian that could not be inverted for the inverse form.
    """
    if cfg.init == "identity":
        return np.eye(sys.n), 0, False
    j0 = jacobian(sys, x0)
    if not inverse:
        return j0, 1, False
    try:
        jinv0 = np.linalg.inv(j0)
    except np.linalg.LinAlgError:
        return np.eye(sys.n), 1, True
    if not np.all(np.isfinite(jinv0)):
        return np.eye(sys.n), 1, True
    return jinv0, 1, False


def quasi_newton_solve(sys: PolySystem, x0, cfg: SolverConfig) -> SolveResult:
    """Quasi-Newton iteration with rank-one matrix updates.

    Schedule: x_1 = x_0 - J_0^{-1} f(x_0); from k >= 1, J_k is produced from
    J_{k-1} by the configured update using p_k = x_k - x_{k-1} together with
    y_k = f~(x_k) - f~(x_{k-1}) (modified) or q_k = f(x_k) - f(x_{k-1})
    (broyden), and the next step uses J_k.  Stops on tol_f, then tol_x, then
    max_iter; `stalled` replaces converged_x when the preceding update was
    rejected, `singular` marks linear-solve breakdown.
    """
    if cfg.method not in ("broyden", "modified"):
        raise ValueError(f"quasi_newton_solve requires method broyden or modified, "
                         f"got {cfg.method!r}")
    x = _check_x0(sys, x0)
    modified = cfg.method == "modified"
    inverse = cfg.form == "inverse"

    fx = eval_f(sys, x)
    f_evals = 1
    fnorm = _inf_norm(fx)
    ft = eval_f_tilde(sys, x) if modified else None

    jmat, jac_evals, init_failed = _init_matrix(sys, x, cfg, inverse)

    def secant_residual(jm, xk, ftk, pk, dk):
        if modified:
            if inverse:
                return _inf_norm(kernels.matvec(jm, ftk) - xk)
            return _inf_norm(kernels.matvec(jm, xk) - ftk)
        if pk is None:
            return 0.0
        if inverse:
            return _inf_norm(kernels.matvec(jm, dk) - pk)
        return _inf_norm(kernels.matvec(jm, pk) - dk)

    trace = [IterRecord(0, _frozen(x), fnorm, 0.0, 0.0, True,
                        secant_residual(jmat, x, ft, None, None))]
    if fnorm <= cfg.tol_f:
        return SolveResult(STATUS_CONVERGED_F, trace, _frozen(x), 0, f_evals, jac_evals)
    if init_failed:
        return SolveResult(STATUS_SINGULAR, trace, _frozen(x), 0, f_evals, jac_evals)

    k = 0
    status = None
    prev_applied = True
    while status is None:
        try:
            dx = _inverse_step(jmat, fx) if inverse else linear_solve(jmat, fx)
        except SingularMatrixError:
            status = STATUS_SINGULAR
            break
        x_new = x - dx
        p = x_new - x
        k += 1
        f_new = eval_f(sys, x_new)
        f_evals += 1
        fnorm = _inf_norm(f_new)

        if modified:
            ft_new = eval_f_tilde(sys, x_new)
            y = ft_new - ft
            if inverse:
                out = modified_inverse_update(jmat, p, x_new, y, cfg.denom_eps)
            else:
                out = modified_update(jmat, p, x_new, y, cfg.denom_eps)
            ft = ft_new
            diff = y
        else:
            ft_new = None
            q = f_new - fx
            if inverse:
                out = broyden_inverse_update(jmat, p, q, cfg.denom_eps)
            else:
                out = broyden_update(jmat, p, q, cfg.denom_eps)
            diff = q
        jmat = out.matrix

        restart_failed = False
        if not out.applied and cfg.restart_on_skip:
            jac_evals += 1
            j_exact = jacobian(sys, x_new)
            if inverse:
                try:
                    jmat = np.linalg.inv(j_exact)
                    if not np.all(np.isfinite(jmat)):
                        raise np.linalg.LinAlgError("non-finite inverse")
                except np.linalg.LinAlgError:
                    restart_failed = True
            else:
                jmat = j_exact

        step_norm = _inf_norm(p)
        trace.append(IterRecord(k, _frozen(x_new), fnorm, step_norm,
                                out.denominator, out.applied,
                                secant_residual(jmat, x_new, ft_new, p, diff)))
        x, fx = x_new, f_new
        if fnorm <= cfg.tol_f:
            status = STATUS_CONVERGED_F
        elif step_norm <= cfg.tol_x:
            status = STATUS_STALLED if not prev_applied else STATUS_CONVERGED_X
        elif restart_failed:
            status = STATUS_SINGULAR
        elif k >= cfg.max_iter:
            status = STATUS_MAX_ITER
        prev_applied = out.applied
    return SolveResult(status, trace, _frozen(x), k, f_evals, jac_evals)


COMPARE_VARIANTS = (("newton", "-"), ("broyden", "direct"), ("broyden", "inverse"),
                    ("modified", "direct"), ("modified", "inverse"))


def compare_methods(sys: PolySystem, x0, base_cfg: SolverConfig):
    """Run Newton plus all four quasi-Newton variants with shared tolerances.

    Returns [(method, form, SolveResult)] in the fixed COMPARE_VARIANTS order;
    the Newton row carries form "-".
    """
    results = []
    for method, form in COMPARE_VARIANTS:
        if method == "newton":
            cfg = replace(base_cfg, method="newton", form="direct")
            res = newton_solve(sys, x0, cfg)
        else:
            cfg = replace(base_cfg, method=method, form=form)
            res = quasi_newton_solve(sys, x0, cfg)
        results.append((method, form, res))
    return results


def broyden_tridiagonal(n: int) -> ProblemFile:
    """Tridiagonal quadratic benchmark from the standard nonlinear test set.

    f_i(x) = (3 - 2 x_i) x_i - x_{i-1} - 2 x_{i+1} + 1 with out-of-range
    neighbors dropped; the customary start point is (-1, ..., -1).
    """
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    entries = []
    for i in range(n):
        entries.append((1, i, (i,), 3.0))
        entries.append((2, i, (i, i), -2.0))
        if i > 0:
            entries.append((1, i, (i - 1,), -1.0))
        if i < n - 1:
            entries.append((1, i, (i + 1,), -2.0))
    sys = PolySystem(n, 2, np.ones(n), entries)
    return ProblemFile(sys, -np.ones(n), None, f"broyden-tridiagonal-{n}")


def scalar_cubic() -> ProblemFile:
    """Scalar cubic x^3 - 2x - 4 with exact root 2, started from x=3."""
    sys = PolySystem(1, 3, [-4.0], [(3, 0, (0, 0, 0), 1.0), (1, 0, (0,), -2.0)])
    return ProblemFile(sys, np.array([3.0]), np.array([2.0]), "scalar-cubic")


def planted_random(n: int, seed: int = 2025) -> ProblemFile:
    """Seeded random cubic system with a planted root and a nearby start."""
    sys = random_system(n, 3, max(2 * n, 4), (-1.0, 1.0), seed)
    rng = np.random.default_rng(seed + 1)
    x_star = rng.uniform(-1.0, 1.0, size=n)
    sys = plant_root(sys, x_star)
    d = rng.uniform(-1.0, 1.0, size=n)
    d /= np.linalg.norm(d)
    x0 = x_star + 0.05 * d
    return ProblemFile(sys, x0, x_star, f"planted-random-{n}")
