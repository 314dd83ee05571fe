"""NumPy implementations of the numerical kernels.

This is the fallback used when the compiled extension ``polyqn._kernels`` is
not available.  Both backends expose the same six functions.  Per-row
accumulation happens in entry order in both, so each backend is individually
deterministic; across backends results agree to rounding (the compiled dot
products sum sequentially while NumPy delegates to BLAS).
"""

import numpy as np


def eval_terms(rows, varmat, coeffs, x):
    """Sum ``coeff * prod(x[vars])`` over entries, accumulated by row.

    rows: (k,) intp, varmat: (k, m) intp, coeffs: (k,) float64.
    Returns a fresh length-``len(x)`` vector.
    """
    n = x.shape[0]
    if rows.shape[0] == 0:
        return np.zeros(n)
    vals = coeffs * np.prod(x[varmat], axis=1)
    return np.bincount(rows, weights=vals, minlength=n)


def jac_terms(rows, varmat, coeffs, x, jac):
    """Accumulate the product-rule derivative of each entry into ``jac``.

    Entry (i, (j_1..j_m), c) adds c * prod_{s != t} x[j_s] to jac[i, j_t]
    for every position t.
    """
    k, m = varmat.shape
    if k == 0:
        return
    xv = x[varmat]
    # prefix[:, t] = prod of xv[:, :t]; suffix[:, t] = prod of xv[:, t+1:]
    prefix = np.ones((k, m))
    suffix = np.ones((k, m))
    if m > 1:
        prefix[:, 1:] = np.cumprod(xv[:, :-1], axis=1)
        suffix[:, :-1] = np.cumprod(xv[:, :0:-1], axis=1)[:, ::-1]
    for t in range(m):
        np.add.at(jac, (rows, varmat[:, t]), coeffs * prefix[:, t] * suffix[:, t])


def matvec(a, v):
    return a @ v


def vecmat(v, a):
    return v @ a


def vdot(u, v):
    return float(u @ v)


def add_scaled_outer(a, alpha, u, v):
    """Return ``a + alpha * outer(u, v)`` as a fresh matrix."""
    return a + alpha * np.outer(u, v)
