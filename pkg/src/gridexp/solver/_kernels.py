"""Compiled triangular-solve kernels over CSC factors.

SuperLU factorizations expose L (unit lower) and U (upper) in CSC form;
simplex FTRAN/BTRAN needs four solve directions against them, thousands of
times per model, and the generic scipy entry points carry too much per-call
overhead for that. Kernels mutate their rhs argument in place.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def lower_unit_csc(indptr, indices, data, b):
    """Solve L x = b for unit-lower-triangular L in CSC order."""
    n = b.shape[0]
    for j in range(n):
        xj = b[j]
        if xj != 0.0:
            for p in range(indptr[j], indptr[j + 1]):
                i = indices[p]
                if i > j:
                    b[i] -= data[p] * xj


@njit(cache=True)
def upper_csc(indptr, indices, data, b):
    """Solve U x = b for upper-triangular U in CSC order (diag stored last)."""
    for j in range(b.shape[0] - 1, -1, -1):
        last = indptr[j + 1] - 1
        xj = b[j] / data[last]
        b[j] = xj
        if xj != 0.0:
            for p in range(indptr[j], last):
                b[indices[p]] -= data[p] * xj


@njit(cache=True)
def upper_transpose_csc(indptr, indices, data, b):
    """Solve U' x = b using U's CSC arrays (U' is lower triangular)."""
    n = b.shape[0]
    for j in range(n):
        acc = b[j]
        last = indptr[j + 1] - 1
        for p in range(indptr[j], last):
            acc -= data[p] * b[indices[p]]
        b[j] = acc / data[last]


@njit(cache=True)
def lower_unit_transpose_csc(indptr, indices, data, b):
    """Solve L' x = b using L's CSC arrays (L' is unit upper triangular)."""
    for j in range(b.shape[0] - 1, -1, -1):
        acc = b[j]
        for p in range(indptr[j], indptr[j + 1]):
            i = indices[p]
            if i > j:
                acc -= data[p] * b[i]
        b[j] = acc


@njit(cache=True)
def apply_etas_forward(w, eta_r, eta_piv, eta_ptr, eta_idx, eta_val):
    """Product-form update chain for FTRAN."""
    for k in range(eta_r.shape[0]):
        r = eta_r[k]
        t = w[r] / eta_piv[k]
        if t != 0.0:
            for p in range(eta_ptr[k], eta_ptr[k + 1]):
                w[eta_idx[p]] -= t * eta_val[p]
        w[r] = t


@njit(cache=True)
def apply_etas_transpose(w, eta_r, eta_piv, eta_ptr, eta_idx, eta_val):
    """Product-form update chain for BTRAN (newest eta first)."""
    for k in range(eta_r.shape[0] - 1, -1, -1):
        r = eta_r[k]
        acc = 0.0
        for p in range(eta_ptr[k], eta_ptr[k + 1]):
            acc += eta_val[p] * w[eta_idx[p]]
        w[r] -= (acc - w[r]) / eta_piv[k]
