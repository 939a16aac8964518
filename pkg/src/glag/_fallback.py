"""Pure numpy versions of the hot kernels.

Signatures mirror ``glag._kernels`` exactly so either module can be bound by
``glag._backend``.
"""

import numpy as np


def ds_project(X0, dual, tol, max_iter):
    """Dykstra iteration for the Euclidean projection onto doubly stochastic matrices.

    The two sets are the affine plane {M : M1 = 1, M^T 1 = 1} and the
    nonnegative orthant.  Only the orthant increment ``dual`` (entries <= 0)
    has to be carried between sweeps: the affine increment is recomputed in
    closed form from it.  ``dual`` is updated in place, so passing the value
    left by a previous call warm-starts the iteration.

    Returns ``(M, iterations, residual)`` where residual is the largest
    row/column sum violation of ``M``.
    """
    p = X0.shape[0]
    row0 = X0.sum(axis=1)
    col0 = X0.sum(axis=0)
    M = np.empty_like(X0)
    residual = np.inf
    it = 0
    while it < max_iter:
        it += 1
        # row/col sums of z = X0 - dual
        r = 1.0 - (row0 - dual.sum(axis=1))
        s = 1.0 - (col0 - dual.sum(axis=0))
        shift = r.sum() / p
        z = X0 + (r[:, None] + s[None, :] - shift) / p
        np.maximum(z, 0.0, out=M)
        np.minimum(z, 0.0, out=dual)
        residual = max(np.abs(M.sum(axis=1) - 1.0).max(), np.abs(M.sum(axis=0) - 1.0).max())
        if residual <= tol:
            break
    return M, it, residual


def lap_min(C):
    """Shortest augmenting path Hungarian method on a square cost matrix.

    Returns ``(col_of_row, u, v)`` with reduced costs ``C - u[:, None] - v``
    nonnegative and zero along the assignment.
    """
    n = C.shape[0]
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    owner = np.zeros(n + 1, dtype=np.intp)
    way = np.zeros(n + 1, dtype=np.intp)
    a = np.zeros((n + 1, n + 1))
    a[1:, 1:] = C
    for i in range(1, n + 1):
        owner[0] = i
        j0 = 0
        minv = np.full(n + 1, np.inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = owner[j0]
            free = ~used
            free[0] = False
            cur = a[i0] - u[i0] - v
            better = free & (cur < minv)
            minv[better] = cur[better]
            way[better] = j0
            cand = np.where(free, minv, np.inf)
            j1 = int(np.argmin(cand))
            delta = cand[j1]
            u[owner[used]] += delta
            v[used] -= delta
            minv[free] -= delta
            j0 = j1
            if owner[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            owner[j0] = owner[j1]
            j0 = j1
    col_of_row = np.empty(n, dtype=np.intp)
    col_of_row[owner[1:] - 1] = np.arange(n)
    return col_of_row, u[1:].copy(), v[1:].copy()


def group_shrink(a, b, thr):
    """Vector soft-thresholding of the pairs ``(a[i, j], b[i, j])``."""
    norm = np.hypot(a, b)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(norm > thr, 1.0 - thr / norm, 0.0)
    return scale * a, scale * b
