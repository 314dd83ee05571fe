"""Polynomial-only systems in sparse coefficient form.

A square system is stored as f(x) = sum_{m=1..M} N_m(x) + b where each
N_m is homogeneous of degree m and is held as a list of monomial entries
(row, (j_1..j_m), coeff), each contributing coeff * x_{j_1} * ... * x_{j_m}
to component `row`.  The degree-1 entries collectively encode the linear
part.  Euler's identity for homogeneous functions gives J_m(x) x = m * N_m(x)
per degree, hence J(x) x = sum_m m * N_m(x) for the whole system;
`eval_f_tilde` evaluates that degree-weighted sum straight from the
coefficients and `euler_residual` measures how well the identity holds.

Evaluation is deterministic: entries accumulate in canonical entry order
within each degree, degrees are summed in ascending order, and the constant
term is added last.
"""

import json
from dataclasses import dataclass

import numpy as np

from polyqn.backend import kernels


class ProblemFormatError(ValueError):
    """Malformed problem text: bad JSON or a missing/mistyped field."""


def _fmt17(v: float) -> str:
    """Round-trip-safe decimal rendering (17 significant digits)."""
    return format(float(v), ".17g")


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


class PolySystem:
    """Square polynomial system f(x) = sum_{m=1..M} N_m(x) + b.

    Parameters
    ----------
    n : int
        Number of unknowns and equations.
    max_degree : int
        Highest homogeneous degree M present.
    b : array_like, shape (n,)
        Constant term.
    terms : iterable of (degree, row, vars, coeff)
        Monomial entries; `vars` is a sequence of `degree` variable indices.
        Entries are canonicalized on construction: multi-indices are sorted
        nondecreasing, duplicate (row, multi-index) entries of the same
        degree are merged by summing coefficients, and entries are ordered
        by (row, multi-index) within each degree.
    """

    __slots__ = ("n", "max_degree", "b", "_blocks")

    def __init__(self, n, max_degree, b, terms):
        n = int(n)
        max_degree = int(max_degree)
        if n < 1:
            raise ValueError(f"n must be >= 1, got {n}")
        if max_degree < 1:
            raise ValueError(f"max_degree must be >= 1, got {max_degree}")
        b = np.array(b, dtype=float).reshape(-1)
        if b.shape != (n,):
            raise ValueError(f"b has length {b.size}, expected n={n}")
        if not np.all(np.isfinite(b)):
            raise ValueError("b must be finite")

        merged = [dict() for _ in range(max_degree)]
        for entry in terms:
            try:
                degree, row, vars_, coeff = entry
            except (TypeError, ValueError):
                raise ValueError(f"term entry {entry!r} is not (degree, row, vars, coeff)")
            degree = int(degree)
            row = int(row)
            coeff = float(coeff)
            if not 1 <= degree <= max_degree:
                raise ValueError(f"term degree {degree} outside 1..{max_degree}")
            if not 0 <= row < n:
                raise ValueError(f"term row {row} outside 0..{n - 1}")
            key = tuple(sorted(int(v) for v in vars_))
            if len(key) != degree:
                raise ValueError(
                    f"term of degree {degree} has {len(key)} variable indices")
            for v in key:
                if not 0 <= v < n:
                    raise ValueError(f"variable index {v} outside 0..{n - 1}")
            if not np.isfinite(coeff):
                raise ValueError("term coefficient must be finite")
            bucket = merged[degree - 1]
            bucket[(row, key)] = bucket.get((row, key), 0.0) + coeff

        blocks = []
        for m in range(1, max_degree + 1):
            keys = sorted(merged[m - 1])
            rows = np.array([k[0] for k in keys], dtype=np.intp)
            varmat = np.array([k[1] for k in keys], dtype=np.intp).reshape(len(keys), m)
            coeffs = np.array([merged[m - 1][k] for k in keys], dtype=float)
            blocks.append((_readonly(rows), _readonly(varmat), _readonly(coeffs)))

        self.n = n
        self.max_degree = max_degree
        self.b = _readonly(b)
        self._blocks = tuple(blocks)

    def block(self, m):
        """(rows, varmat, coeffs) arrays of the degree-m entries."""
        if not 1 <= m <= self.max_degree:
            raise ValueError(f"degree {m} outside 1..{self.max_degree}")
        return self._blocks[m - 1]

    def iter_terms(self):
        """Yield (degree, row, vars, coeff) in canonical order."""
        for m in range(1, self.max_degree + 1):
            rows, varmat, coeffs = self._blocks[m - 1]
            for i in range(rows.shape[0]):
                yield m, int(rows[i]), tuple(int(v) for v in varmat[i]), float(coeffs[i])

    @property
    def num_terms(self):
        return sum(blk[0].shape[0] for blk in self._blocks)

    def _with_constant(self, b):
        """Copy sharing the (immutable) term blocks, with a new constant."""
        new = PolySystem.__new__(PolySystem)
        new.n = self.n
        new.max_degree = self.max_degree
        new.b = _readonly(np.array(b, dtype=float).reshape(self.n))
        new._blocks = self._blocks
        return new

    def __eq__(self, other):
        if not isinstance(other, PolySystem):
            return NotImplemented
        if self.n != other.n or self.max_degree != other.max_degree:
            return False
        if not np.array_equal(self.b, other.b):
            return False
        for (ra, va, ca), (rb, vb, cb) in zip(self._blocks, other._blocks):
            if not (np.array_equal(ra, rb) and np.array_equal(va, vb)
                    and np.array_equal(ca, cb)):
                return False
        return True

    def __repr__(self):
        return (f"PolySystem(n={self.n}, max_degree={self.max_degree}, "
                f"num_terms={self.num_terms})")


@dataclass(frozen=True, eq=False)
class ProblemFile:
    """A polynomial system bundled with a start point and optional known root."""

    system: PolySystem
    x0: np.ndarray
    x_star: np.ndarray | None = None
    name: str = ""

    def __post_init__(self):
        x0 = np.array(self.x0, dtype=float).reshape(-1)
        if x0.shape != (self.system.n,):
            raise ValueError(f"x0 has length {x0.size}, expected n={self.system.n}")
        object.__setattr__(self, "x0", _readonly(x0))
        if self.x_star is not None:
            xs = np.array(self.x_star, dtype=float).reshape(-1)
            if xs.shape != (self.system.n,):
                raise ValueError(
                    f"x_star has length {xs.size}, expected n={self.system.n}")
            resid = float(np.max(np.abs(eval_f(self.system, xs))))
            bound = 1e-10 * (1.0 + float(np.max(np.abs(self.system.b))))
            if resid > bound:
                raise ValueError(
                    f"x_star is not a root: |f(x_star)|_inf = {resid:.3e} > {bound:.3e}")
            object.__setattr__(self, "x_star", _readonly(xs))

    def __eq__(self, other):
        if not isinstance(other, ProblemFile):
            return NotImplemented
        if self.name != other.name or self.system != other.system:
            return False
        if not np.array_equal(self.x0, other.x0):
            return False
        if (self.x_star is None) != (other.x_star is None):
            return False
        return self.x_star is None or np.array_equal(self.x_star, other.x_star)


def _check_point(sys: PolySystem, x) -> np.ndarray:
    x = np.ascontiguousarray(x, dtype=float).reshape(-1)
    if x.shape != (sys.n,):
        raise ValueError(f"point has length {x.size}, expected n={sys.n}")
    return x


def eval_f(sys: PolySystem, x) -> np.ndarray:
    """Evaluate f(x) = sum_m N_m(x) + b."""
    x = _check_point(sys, x)
    total = np.zeros(sys.n)
    for m in range(1, sys.max_degree + 1):
        rows, varmat, coeffs = sys._blocks[m - 1]
        total += kernels.eval_terms(rows, varmat, coeffs, x)
    total += sys.b
    return total


def eval_homogeneous(sys: PolySystem, m: int, x) -> np.ndarray:
    """Evaluate the single homogeneous part N_m(x)."""
    m = int(m)
    if not 1 <= m <= sys.max_degree:
        raise ValueError(f"degree {m} outside 1..{sys.max_degree}")
    x = _check_point(sys, x)
    rows, varmat, coeffs = sys._blocks[m - 1]
    return kernels.eval_terms(rows, varmat, coeffs, x)


def jacobian(sys: PolySystem, x) -> np.ndarray:
    """Analytic Jacobian of f at x, assembled by the product rule."""
    x = _check_point(sys, x)
    jac = np.zeros((sys.n, sys.n))
    for m in range(1, sys.max_degree + 1):
        rows, varmat, coeffs = sys._blocks[m - 1]
        kernels.jac_terms(rows, varmat, coeffs, x, jac)
    return jac


def eval_f_tilde(sys: PolySystem, x) -> np.ndarray:
    """Degree-weighted sum f~(x) = sum_m m * N_m(x).

    By Euler's identity this equals J(x) x exactly for polynomial-only
    systems; the constant b is excluded.
    """
    x = _check_point(sys, x)
    total = np.zeros(sys.n)
    for m in range(1, sys.max_degree + 1):
        rows, varmat, coeffs = sys._blocks[m - 1]
        total += float(m) * kernels.eval_terms(rows, varmat, coeffs, x)
    return total


def euler_residual(sys: PolySystem, x) -> np.ndarray:
    """J(x) x - f~(x); zero up to rounding for every x."""
    x = _check_point(sys, x)
    return kernels.matvec(jacobian(sys, x), x) - eval_f_tilde(sys, x)


def finite_difference_jacobian(sys: PolySystem, x, rel_step: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian with per-column step rel_step * (1 + |x_j|).

    Independent of `jacobian`; used to cross-check the analytic assembly.
    """
    x = _check_point(sys, x)
    jac = np.empty((sys.n, sys.n))
    for j in range(sys.n):
        h = rel_step * (1.0 + abs(x[j]))
        xp = x.copy()
        xm = x.copy()
        xp[j] += h
        xm[j] -= h
        jac[:, j] = (eval_f(sys, xp) - eval_f(sys, xm)) / (2.0 * h)
    return jac


def plant_root(sys: PolySystem, x_star) -> PolySystem:
    """Copy of `sys` with b chosen so that x_star is an exact root."""
    x_star = _check_point(sys, x_star)
    total = np.zeros(sys.n)
    for m in range(1, sys.max_degree + 1):
        rows, varmat, coeffs = sys._blocks[m - 1]
        total += kernels.eval_terms(rows, varmat, coeffs, x_star)
    return sys._with_constant(-total)


def random_system(n: int, max_degree: int, terms_per_degree: int,
                  coeff_range=(-1.0, 1.0), seed: int = 0) -> PolySystem:
    """Seeded random system satisfying all PolySystem invariants.

    Every row gets one diagonal degree-1 entry with a coefficient bounded
    away from zero, which keeps Jacobians generically nonsingular; each
    degree then receives `terms_per_degree` uniform random entries.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if max_degree < 1:
        raise ValueError(f"max_degree must be >= 1, got {max_degree}")
    if terms_per_degree < 1:
        raise ValueError(f"terms_per_degree must be >= 1, got {terms_per_degree}")
    lo, hi = float(coeff_range[0]), float(coeff_range[1])
    if not lo < hi:
        raise ValueError(f"empty coefficient range [{lo}, {hi}]")
    rng = np.random.default_rng(seed)
    floor = 0.05 * (hi - lo)

    entries = []
    for i in range(n):
        c = float(rng.uniform(lo, hi))
        for _ in range(1000):
            if abs(c) >= floor:
                break
            c = float(rng.uniform(lo, hi))
        entries.append((1, i, (i,), c))
    for m in range(1, max_degree + 1):
        for _ in range(terms_per_degree):
            row = int(rng.integers(0, n))
            vars_ = tuple(sorted(int(v) for v in rng.integers(0, n, size=m)))
            entries.append((m, row, vars_, float(rng.uniform(lo, hi))))
    b = rng.uniform(lo, hi, size=n)
    return PolySystem(n, max_degree, b, entries)


def _vec17(vec) -> str:
    return "[" + ", ".join(_fmt17(v) for v in vec) + "]"


def serialize_problem(p: ProblemFile) -> bytes:
    """Render a ProblemFile as UTF-8 JSON with 17-significant-digit floats."""
    term_lines = []
    for degree, row, vars_, coeff in p.system.iter_terms():
        vs = ", ".join(str(v) for v in vars_)
        term_lines.append(
            f'    {{"degree": {degree}, "row": {row}, "vars": [{vs}], '
            f'"coeff": {_fmt17(coeff)}}}')
    terms = "[]" if not term_lines else "[\n" + ",\n".join(term_lines) + "\n  ]"

    fields = [
        ("name", json.dumps(p.name)),
        ("n", str(p.system.n)),
        ("max_degree", str(p.system.max_degree)),
        ("b", _vec17(p.system.b)),
        ("terms", terms),
        ("x0", _vec17(p.x0)),
    ]
    if p.x_star is not None:
        fields.append(("x_star", _vec17(p.x_star)))
    body = ",\n".join(f'  "{k}": {v}' for k, v in fields)
    return ("{\n" + body + "\n}\n").encode("utf-8")


def _field(doc: dict, key: str):
    if key not in doc:
        raise ProblemFormatError(f'missing field "{key}"')
    return doc[key]


def _int_field(doc: dict, key: str) -> int:
    v = _field(doc, key)
    if isinstance(v, bool) or not isinstance(v, int):
        raise ProblemFormatError(f'field "{key}" must be an integer')
    return v


def _vector_field(doc: dict, key: str) -> list:
    v = _field(doc, key)
    if not isinstance(v, list) or not all(
            isinstance(e, (int, float)) and not isinstance(e, bool) for e in v):
        raise ProblemFormatError(f'field "{key}" must be an array of numbers')
    return [float(e) for e in v]


def parse_problem(text) -> ProblemFile:
    """Parse problem-file bytes (or str) into a validated ProblemFile."""
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as err:
            raise ProblemFormatError(f"not valid UTF-8: {err}") from err
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise ProblemFormatError(
            f"invalid JSON at line {err.lineno}, column {err.colno}: {err.msg}") from err
    if not isinstance(doc, dict):
        raise ProblemFormatError("top-level value must be an object")

    name = _field(doc, "name")
    if not isinstance(name, str):
        raise ProblemFormatError('field "name" must be a string')
    n = _int_field(doc, "n")
    max_degree = _int_field(doc, "max_degree")
    b = _vector_field(doc, "b")

    raw_terms = _field(doc, "terms")
    if not isinstance(raw_terms, list):
        raise ProblemFormatError('field "terms" must be an array')
    entries = []
    for i, t in enumerate(raw_terms):
        if not isinstance(t, dict):
            raise ProblemFormatError(f'field "terms[{i}]" must be an object')
        degree = _int_field(t, "degree")
        row = _int_field(t, "row")
        vars_ = _field(t, "vars")
        if not isinstance(vars_, list) or not all(
                isinstance(v, int) and not isinstance(v, bool) for v in vars_):
            raise ProblemFormatError(f'field "terms[{i}].vars" must be an array of integers')
        coeff = _field(t, "coeff")
        if isinstance(coeff, bool) or not isinstance(coeff, (int, float)):
            raise ProblemFormatError(f'field "terms[{i}].coeff" must be a number')
        if len(vars_) != degree:
            raise ProblemFormatError(
                f'field "terms[{i}].vars" has {len(vars_)} indices, expected {degree}')
        entries.append((degree, row, vars_, float(coeff)))

    system = PolySystem(n, max_degree, b, entries)
    x0 = _vector_field(doc, "x0")
    x_star = _vector_field(doc, "x_star") if "x_star" in doc else None
    return ProblemFile(system, np.array(x0), None if x_star is None else np.array(x_star), name)
