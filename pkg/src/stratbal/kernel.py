"""Small dense linear algebra used by the flight phase and the variance formulas."""

import numpy as np
from numba import njit

DEFAULT_TOL = 1e-9


def _check_finite(M, name):
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} contains non-finite entries")


@njit(cache=True)
def _eliminate(M, tol):
    # Gauss-Jordan on M (equations x unknowns) with partial pivoting, in place.
    m, r = M.shape
    for i in range(m):
        s = 0.0
        for k in range(r):
            s = max(s, abs(M[i, k]))
        if s > 0:
            for k in range(r):
                M[i, k] /= s
    piv = np.empty(min(m, r), np.int64)
    is_piv = np.zeros(r, np.bool_)
    row = 0
    for j in range(r):
        if row == m:
            break
        p = -1
        best = tol
        for i in range(row, m):
            v = abs(M[i, j])
            if v > best:
                best = v
                p = i
        if p < 0:
            continue
        if p != row:
            for k in range(r):
                tmp = M[row, k]
                M[row, k] = M[p, k]
                M[p, k] = tmp
        inv = 1.0 / M[row, j]
        for k in range(r):
            M[row, k] *= inv
        M[row, j] = 1.0
        for i in range(m):
            if i == row:
                continue
            f = M[i, j]
            if f != 0.0:
                for k in range(r):
                    M[i, k] -= f * M[row, k]
                M[i, j] = 0.0
        piv[row] = j
        is_piv[j] = True
        row += 1
    return piv[:row], is_piv


@njit(cache=True)
def null_vector(M, tol):
    """Unit ``u`` with ``M @ u = 0`` for ``M`` = B.T (c x r); ``(u, found)``."""
    m, r = M.shape
    u = np.zeros(r)
    if r == 0:
        return u, False
    W = M.copy()
    piv, is_piv = _eliminate(W, tol)
    if piv.size == r:
        return u, False
    free = 0
    while is_piv[free]:
        free += 1
    u[free] = 1.0
    for i in range(piv.size):
        u[piv[i]] = -W[i, free]
    u /= np.sqrt(np.sum(u * u))

    if m:
        norm_b = 0.0
        for k in range(r):
            s = 0.0
            for i in range(m):
                s += abs(M[i, k])
            norm_b = max(norm_b, s)
        res = np.max(np.abs(M @ u))
        if res > tol * norm_b * np.max(np.abs(u)):
            # elimination lost too much accuracy; use the SVD instead
            _, _, vt = np.linalg.svd(M)
            u = vt[r - 1].copy()
            u /= np.sqrt(np.sum(u * u))
    return u, True


def kernel_vector(B, tol=DEFAULT_TOL):
    """Return a unit vector ``u`` with ``B.T @ u == 0``, or ``None``.

    ``B`` is ``r x c`` (one row per unit, one column per constraint).  The
    system ``B.T u = 0`` is reduced by Gauss-Jordan elimination with partial
    pivoting after scaling each equation to unit max-norm; the first free
    unknown is set to one and the pivot unknowns are read off the reduced
    rows.  ``None`` means every unknown got a pivot, i.e. ``B.T`` has
    numerically full column rank.  When ``r > rank(B)`` a vector is always
    returned.
    """
    B = np.asarray(B, dtype=float)
    if B.ndim != 2:
        raise ValueError("B must be a 2-d array")
    _check_finite(B, "B")
    u, found = null_vector(np.ascontiguousarray(B.T), tol)
    return u if found else None


def least_squares_pinv(G, b, tol=DEFAULT_TOL):
    """Minimum-norm solution of ``G @ x = b`` for a symmetric PSD ``G``.

    Eigen-directions whose eigenvalue falls below ``tol`` times the largest
    one are truncated.
    """
    G = np.asarray(G, dtype=float)
    b = np.asarray(b, dtype=float)
    _check_finite(G, "G")
    _check_finite(b, "b")
    if G.size == 0:
        return np.zeros(G.shape[0])
    G = (G + G.T) / 2
    w, V = np.linalg.eigh(G)
    top = np.abs(w).max()
    if top == 0:
        return np.zeros_like(b)
    keep = w > tol * top
    coef = (V[:, keep].T @ b) / w[keep]
    return V[:, keep] @ coef
