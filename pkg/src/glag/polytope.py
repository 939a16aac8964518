"""Geometry of the Birkhoff polytope.

Euclidean projection onto doubly stochastic matrices, rounding to the nearest
permutation matrix, and spectral norm estimation.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import ConvergenceError, ParameterError

FEASIBILITY_TOL = 1e-9
PROJECTION_TOL = 1e-9
PROJECTION_MAX_ITER = 10000

# reduced costs below this (relative to the cost scale) count as ties
_TIE_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class Permutation:
    """A bijection on ``{0, ..., p-1}``.

    ``sigma[i]`` is the image of node ``i``.  The matrix view has
    ``P[i, sigma[i]] = 1``, so ``P @ B @ P.T`` relabels ``B`` into the node
    order of the graph it is matched against.  Files use 1-based indices; see
    :meth:`from_one_based` and :meth:`to_one_based`.
    """

    sigma: np.ndarray

    def __post_init__(self):
        sigma = np.array(self.sigma, dtype=np.intp).reshape(-1)
        p = sigma.size
        if p == 0 or not np.array_equal(np.sort(sigma), np.arange(p)):
            raise ParameterError("sigma is not a bijection on 0..p-1")
        sigma.setflags(write=False)
        object.__setattr__(self, "sigma", sigma)

    @classmethod
    def identity(cls, p):
        return cls(np.arange(p))

    @classmethod
    def random(cls, p, rng):
        return cls(rng.permutation(p))

    @classmethod
    def from_matrix(cls, P):
        P = np.asarray(P)
        if P.ndim != 2 or P.shape[0] != P.shape[1]:
            raise ParameterError("permutation matrix must be square")
        if not (np.all((P == 0) | (P == 1)) and np.all(P.sum(0) == 1) and np.all(P.sum(1) == 1)):
            raise ParameterError("not a permutation matrix")
        return cls(np.argmax(P, axis=1))

    @classmethod
    def from_one_based(cls, values):
        return cls(np.asarray(list(values), dtype=np.intp) - 1)

    def to_one_based(self):
        return [int(s) + 1 for s in self.sigma]

    @property
    def size(self):
        return self.sigma.size

    @property
    def matrix(self):
        P = np.zeros((self.size, self.size))
        P[np.arange(self.size), self.sigma] = 1.0
        return P

    def inverse(self):
        inv = np.empty_like(self.sigma)
        inv[self.sigma] = np.arange(self.size)
        return Permutation(inv)

    def compose(self, other):
        """Permutation whose matrix is ``self.matrix @ other.matrix``."""
        return Permutation(other.sigma[self.sigma])

    def __eq__(self, other):
        return isinstance(other, Permutation) and np.array_equal(self.sigma, other.sigma)

    def __hash__(self):
        return hash(self.sigma.tobytes())

    def __len__(self):
        return self.size

    def __repr__(self):
        return f"Permutation({self.to_one_based()})"


def doubly_stochastic_violation(M):
    """Largest violation of nonnegativity and unit row/column sums."""
    M = np.asarray(M, dtype=float)
    neg = max(0.0, -float(M.min()))
    rows = float(np.abs(M.sum(axis=1) - 1.0).max())
    cols = float(np.abs(M.sum(axis=0) - 1.0).max())
    return max(neg, rows, cols)


def is_doubly_stochastic(M, tol=1e-8):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        return False
    if M.min() < -FEASIBILITY_TOL:
        return False
    return (np.abs(M.sum(axis=1) - 1.0).max() <= tol
            and np.abs(M.sum(axis=0) - 1.0).max() <= tol)


def barycenter(p):
    return np.full((p, p), 1.0 / p)


def _check_square(X, name="X"):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != X.shape[1] or X.shape[0] == 0:
        raise ParameterError(f"{name} must be a non-empty square matrix, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ParameterError(f"{name} has non-finite entries")
    return X


def project_doubly_stochastic(X, tol=PROJECTION_TOL, max_iter=PROJECTION_MAX_ITER, dual=None):
    """Euclidean projection of a square matrix onto the Birkhoff polytope.

    Dykstra's alternating projections between the affine plane of unit row
    and column sums and the nonnegative orthant.  The result is exactly
    nonnegative and its row and column sums are within ``tol`` of one.

    Parameters
    ----------
    X : array_like, shape (p, p)
    tol : float
        Feasibility tolerance on row and column sums.
    max_iter : int
        Maximum number of Dykstra sweeps.
    dual : ndarray, shape (p, p), optional
        Orthant increment from an earlier call, updated in place.  Supplying
        it warm-starts the sweeps; the fixed point does not depend on it.

    Returns
    -------
    M : ndarray, shape (p, p)

    Raises
    ------
    ConvergenceError
        If the feasibility residual is still above ``tol`` after
        ``max_iter`` sweeps.
    """
    X = _check_square(X)
    if tol <= 0:
        raise ParameterError("tol must be positive")
    if dual is None:
        dual = np.zeros_like(X)
    M, iterations, residual = _backend.ds_project(
        np.ascontiguousarray(X), dual, float(tol), int(max_iter))
    if residual > tol:
        raise ConvergenceError(
            f"doubly stochastic projection stalled at residual {residual:.3e} "
            f"after {iterations} sweeps", residual=residual, iterations=iterations)
    return M


def _lexicographic_assignment(tight, col_of_row):
    """Smallest assignment (in lexicographic order of sigma) using only tight edges.

    ``col_of_row`` must already be a perfect matching inside ``tight``.
    """
    p = col_of_row.size
    match = col_of_row.copy()
    owner = np.empty(p, dtype=np.intp)
    owner[match] = np.arange(p)
    adj = [np.flatnonzero(tight[i]) for i in range(p)]
    for i in range(p):
        for j in adj[i]:
            if j >= match[i]:
                break
            r = owner[j]
            if r < i:
                continue
            freed = match[i]
            # alternating path from row r to the freed column over rows > i
            found_by = {}
            queue = deque([r])
            seen_rows = {r}
            end = None
            while queue and end is None:
                x = queue.popleft()
                for c in adj[x]:
                    if c in found_by or c == j:
                        continue
                    if c == freed:
                        found_by[c] = x
                        end = x
                        break
                    y = owner[c]
                    if y <= i or y in seen_rows:
                        continue
                    found_by[c] = x
                    seen_rows.add(y)
                    queue.append(y)
            if end is None:
                continue
            x, col = end, freed
            while True:
                old = match[x]
                match[x] = col
                owner[col] = x
                if x == r:
                    break
                col = old
                x = found_by[old]
            match[i] = j
            owner[j] = i
            break
    return match


def round_to_permutation(M):
    """Nearest permutation matrix to ``M`` in Frobenius norm.

    Solves the max-trace linear assignment on ``M`` exactly with the
    Hungarian method.  Among optimal assignments the lexicographically
    smallest ``sigma`` is returned, so ties (for example the barycenter) are
    resolved reproducibly.
    """
    M = _check_square(M, "M")
    cost = np.ascontiguousarray(-M)
    col_of_row, u, v = _backend.lap_min(cost)
    scale = max(1.0, float(np.abs(M).max()))
    reduced = cost - u[:, None] - v[None, :]
    tight = reduced <= _TIE_RTOL * scale * M.shape[0]
    tight[np.arange(M.shape[0]), col_of_row] = True
    return Permutation(_lexicographic_assignment(tight, col_of_row))


def spectral_norm(M, tol=1e-10, max_iter=10000):
    """Largest singular value of ``M`` by power iteration on ``M^T M``.

    The first run starts from the normalized all-ones vector.  A second run
    from a fixed pseudo-random vector guards against a start that is
    (numerically) orthogonal to the leading singular subspace; the larger
    estimate is kept.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise ParameterError("M must be a matrix")
    if not np.all(np.isfinite(M)):
        raise ParameterError("M has non-finite entries")
    n = M.shape[1]
    if n == 0 or not np.any(M):
        return 0.0
    starts = [np.ones(n), np.random.default_rng(0x5EED).standard_normal(n)]
    best = 0.0
    for v in starts:
        best = max(best, _power_iteration(M, v / np.linalg.norm(v), tol, max_iter))
    return best


def _power_iteration(M, v, tol, max_iter):
    sigma = np.linalg.norm(M @ v)
    for _ in range(max_iter):
        w = M.T @ (M @ v)
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        v = w / norm
        new = np.linalg.norm(M @ v)
        if abs(new - sigma) <= tol * new:
            return float(new)
        sigma = new
    return float(sigma)
