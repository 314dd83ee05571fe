"""Rank-one Jacobian updates and their Sherman-Morrison inverse forms.

Two update families, as pure matrix operations independent of any solve loop:

* ``broyden_update`` / ``broyden_inverse_update`` -- the classic least-change
  secant updates enforcing J_k p = q, with p = x_k - x_{k-1} and
  q = f(x_k) - f(x_{k-1}).
* ``modified_update`` / ``modified_inverse_update`` -- rank-one updates for
  polynomial-only systems enforcing J_k x_k = J_{k-1} x_{k-1} + y, with
  y = f~(x_k) - f~(x_{k-1}).  Because f~ equals J(x) x for such systems
  (Euler's identity for homogeneous polynomials), this relation is exact
  rather than a secant approximation, and with an exactly initialized J_0 the
  identity J_k x_k = f~(x_k) is maintained throughout the iteration.

Every update costs O(n^2): a handful of matrix-vector products plus one
outer-product accumulation.  All are safeguarded: when the defining
denominator is within ``eps`` of zero (relative to the scale of its factors)
the update is rejected and the previous matrix is returned unchanged with
``applied=False``.  A rejected update is a recoverable state, not an error.
"""

from dataclasses import dataclass

import numpy as np

from polyqn.backend import kernels


class SingularMatrixError(RuntimeError):
    """The system matrix is singular to working precision."""


@dataclass(frozen=True)
class UpdateOutcome:
    """Result of a safeguarded rank-one update.

    ``matrix`` is the updated matrix, or the input unchanged when
    ``applied`` is False.  ``denominator`` records the safeguard-checked
    scalar for trace diagnostics.
    """

    matrix: np.ndarray
    applied: bool
    denominator: float


def _as_matrix(a, name="matrix") -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be square, got shape {a.shape}")
    return a


def _as_vector(v, n, name) -> np.ndarray:
    v = np.ascontiguousarray(v, dtype=float).reshape(-1)
    if v.shape != (n,):
        raise ValueError(f"{name} has length {v.size}, expected {n}")
    return v


def _norm2(v) -> float:
    return float(np.linalg.norm(v))


def modified_update(j_prev, p, x_k, y, eps: float = 1e-12) -> UpdateOutcome:
    """Rank-one update J_k = J_prev + (y - J_prev p) p^T / (p^T x_k).

    The caller supplies p = x_k - x_{k-1} and y = f~(x_k) - f~(x_{k-1}).
    When applied, J_k x_k = J_prev x_{k-1} + y up to rounding.  Rejected when
    |p^T x_k| <= eps * (1 + |p| |x_k|).
    """
    j_prev = _as_matrix(j_prev, "j_prev")
    n = j_prev.shape[0]
    p = _as_vector(p, n, "p")
    x_k = _as_vector(x_k, n, "x_k")
    y = _as_vector(y, n, "y")
    d = kernels.vdot(p, x_k)
    if abs(d) <= eps * (1.0 + _norm2(p) * _norm2(x_k)):
        return UpdateOutcome(j_prev, False, d)
    u = (y - kernels.matvec(j_prev, p)) / d
    return UpdateOutcome(kernels.add_scaled_outer(j_prev, 1.0, u, p), True, d)


def modified_inverse_update(jinv_prev, p, x_k, y, eps: float = 1e-12) -> UpdateOutcome:
    """Sherman-Morrison form of `modified_update`, acting on J_{k-1}^{-1}.

    Never materializes J_{k-1}: with s = (y - J_{k-1} p) / (p^T x_k) the
    quantity J_{k-1}^{-1} s is computed as (J_{k-1}^{-1} y - p) / (p^T x_k),
    using J_{k-1}^{-1} J_{k-1} p = p.  Both the primary denominator p^T x_k
    and the Sherman-Morrison denominator 1 + p^T J_{k-1}^{-1} s are
    safeguarded; `denominator` records the last one reached.
    """
    jinv_prev = _as_matrix(jinv_prev, "jinv_prev")
    n = jinv_prev.shape[0]
    p = _as_vector(p, n, "p")
    x_k = _as_vector(x_k, n, "x_k")
    y = _as_vector(y, n, "y")
    d = kernels.vdot(p, x_k)
    if abs(d) <= eps * (1.0 + _norm2(p) * _norm2(x_k)):
        return UpdateOutcome(jinv_prev, False, d)
    jinv_s = (kernels.matvec(jinv_prev, y) - p) / d
    denom = 1.0 + kernels.vdot(p, jinv_s)
    if abs(denom) <= eps * (1.0 + _norm2(p) * _norm2(jinv_s)):
        return UpdateOutcome(jinv_prev, False, denom)
    p_jinv = kernels.vecmat(p, jinv_prev)
    out = kernels.add_scaled_outer(jinv_prev, -1.0 / denom, jinv_s, p_jinv)
    return UpdateOutcome(out, True, denom)


def broyden_update(j_prev, p, q, eps: float = 1e-12) -> UpdateOutcome:
    """Classic rank-one secant update J_k = J_prev - (J_prev p - q) p^T / (p^T p).

    When applied, J_k p = q up to rounding.  Rejected when p^T p <= eps^2.
    """
    j_prev = _as_matrix(j_prev, "j_prev")
    n = j_prev.shape[0]
    p = _as_vector(p, n, "p")
    q = _as_vector(q, n, "q")
    d = kernels.vdot(p, p)
    if d <= eps * eps:
        return UpdateOutcome(j_prev, False, d)
    u = q - kernels.matvec(j_prev, p)
    return UpdateOutcome(kernels.add_scaled_outer(j_prev, 1.0 / d, u, p), True, d)


def broyden_inverse_update(jinv_prev, p, q, eps: float = 1e-12) -> UpdateOutcome:
    """Sherman-Morrison form of `broyden_update`, acting on J_{k-1}^{-1}.

    J_k^{-1} = Jinv - (Jinv q - p)(p^T Jinv) / (p^T Jinv q); when applied,
    J_k^{-1} q = p up to rounding.
    """
    jinv_prev = _as_matrix(jinv_prev, "jinv_prev")
    n = jinv_prev.shape[0]
    p = _as_vector(p, n, "p")
    q = _as_vector(q, n, "q")
    w = kernels.matvec(jinv_prev, q)
    d = kernels.vdot(p, w)
    if abs(d) <= eps * (1.0 + _norm2(p) * _norm2(w)):
        return UpdateOutcome(jinv_prev, False, d)
    p_jinv = kernels.vecmat(p, jinv_prev)
    out = kernels.add_scaled_outer(jinv_prev, -1.0 / d, w - p, p_jinv)
    return UpdateOutcome(out, True, d)


def sherman_morrison(a_inv, u, v, eps: float = 1e-12) -> UpdateOutcome:
    """Inverse of A + u v^T given A^{-1}.

    A^{-1} - (A^{-1} u)(v^T A^{-1}) / (1 + v^T A^{-1} u); rejected when the
    denominator is within eps (relative scale) of zero.
    """
    a_inv = _as_matrix(a_inv, "a_inv")
    n = a_inv.shape[0]
    u = _as_vector(u, n, "u")
    v = _as_vector(v, n, "v")
    w = kernels.matvec(a_inv, u)
    denom = 1.0 + kernels.vdot(v, w)
    if abs(denom) <= eps * (1.0 + _norm2(v) * _norm2(w)):
        return UpdateOutcome(a_inv, False, denom)
    v_ainv = kernels.vecmat(v, a_inv)
    out = kernels.add_scaled_outer(a_inv, -1.0 / denom, w, v_ainv)
    return UpdateOutcome(out, True, denom)


def linear_solve(j, rhs) -> np.ndarray:
    """Solve J z = rhs by LU factorization with partial pivoting.

    Raises SingularMatrixError when J is singular to working precision.
    """
    j = _as_matrix(j, "j")
    rhs = _as_vector(rhs, j.shape[0], "rhs")
    try:
        z = np.linalg.solve(j, rhs)
    except np.linalg.LinAlgError as err:
        raise SingularMatrixError(str(err)) from err
    if not np.all(np.isfinite(z)):
        raise SingularMatrixError("solution is not finite; matrix is singular "
                                  "to working precision")
    return z
