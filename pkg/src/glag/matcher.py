"""Group-lasso graph matching.

The cost of a doubly stochastic ``P`` is the sum over entries ``(i, j)`` of
the Euclidean norm of the pair ``((AP)_ij, (PB)_ij)``.  It is minimized over
the Birkhoff polytope with a linearized ADMM and the minimizer is rounded to
the nearest permutation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .errors import ParameterError
from .graphs import Graph
from .polytope import (
    PROJECTION_MAX_ITER,
    PROJECTION_TOL,
    Permutation,
    barycenter,
    project_doubly_stochastic,
    round_to_permutation,
    spectral_norm,
)


@dataclass
class GlagConfig:
    """Solver settings.

    ``c`` is the augmented Lagrangian penalty; the pair update thresholds at
    ``1 / c``.  The linearized step uses
    ``tau = tau_safety / max(rho(A^T A), rho(B^T B))``.
    """

    c: float = 1.0
    tau_safety: float = 0.9
    eps_abs: float = 1e-6
    eps_rel: float = 1e-6
    max_iter: int = 2000
    proj_tol: float = PROJECTION_TOL
    proj_max_iter: int = PROJECTION_MAX_ITER
    # residual balancing: rescale c by `penalty_factor` every `penalty_every`
    # iterations when primal and dual residuals differ by more than `penalty_mu`
    adapt_penalty: bool = True
    penalty_mu: float = 10.0
    penalty_factor: float = 2.0
    penalty_every: int = 10
    # re-check every iterate against the polytope (slow, for debugging)
    validate: bool = False

    def __post_init__(self):
        if not self.c > 0:
            raise ParameterError("c must be positive")
        if not 0 < self.tau_safety < 1:
            raise ParameterError("tau_safety must lie in (0, 1)")
        if not (self.eps_abs > 0 and self.eps_rel > 0):
            raise ParameterError("stopping tolerances must be positive")
        if self.max_iter < 1:
            raise ParameterError("max_iter must be at least 1")


@dataclass
class GlagState:
    P: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    U: np.ndarray
    V: np.ndarray
    iter: int = 0
    primal_residuals: list = field(default_factory=list)
    objective_trace: list = field(default_factory=list)


@dataclass
class MatchResult:
    P_relaxed: np.ndarray
    P_star: Permutation
    objective: float
    iterations: int
    converged: bool
    method: str = "glag"
    state: object = None


def as_matrix(G, name="graph"):
    if isinstance(G, Graph):
        return G.W
    W = np.asarray(G, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ParameterError(f"{name} must be a square matrix")
    return W


def _check_pair(A, B):
    A, B = as_matrix(A, "A"), as_matrix(B, "B")
    if A.shape != B.shape:
        raise ParameterError(f"dimension mismatch: A has p={A.shape[0]}, B has p={B.shape[0]}")
    return A, B


def group_objective(A, B, P):
    """Sum over entries of ``||((AP)_ij, (PB)_ij)||_2``."""
    A, B = _check_pair(A, B)
    P = np.asarray(P, dtype=float)
    if P.shape != A.shape:
        raise ParameterError(f"P has shape {P.shape}, graphs have p={A.shape[0]}")
    return float(np.hypot(A @ P, P @ B).sum())


def group_prox(a, threshold):
    """Vector soft-thresholding ``[1 - threshold/||a||]_+ a`` of a real pair."""
    if threshold < 0:
        raise ParameterError("threshold must be nonnegative")
    x, y = float(a[0]), float(a[1])
    norm = np.hypot(x, y)
    if norm <= threshold:
        return (0.0, 0.0)
    scale = 1.0 - threshold / norm
    return (scale * x, scale * y)


def matching_error(A0, B0, perm):
    """``||A0 - P B0 P^T||_F^2`` for the matrix view ``P`` of ``perm``."""
    A0, B0 = _check_pair(A0, B0)
    if perm.size != A0.shape[0]:
        raise ParameterError(f"permutation of size {perm.size} for graphs with p={A0.shape[0]}")
    s = perm.sigma
    return float(((A0 - B0[np.ix_(s, s)]) ** 2).sum())


def step_size(A, B, safety):
    rho = max(spectral_norm(A) ** 2, spectral_norm(B) ** 2)
    return safety / rho if rho > 0 else safety


def glag_match(A, B, cfg=None):
    """Match two graphs with the group-lasso relaxation.

    Parameters
    ----------
    A, B : Graph or ndarray, shape (p, p)
    cfg : GlagConfig, optional

    Returns
    -------
    MatchResult
        ``P_relaxed`` is the lowest-objective iterate, ``P_star`` its
        rounding.  ``converged`` is False when ``max_iter`` was reached; the
        rounding is performed in either case.
    """
    cfg = cfg or GlagConfig()
    A, B = _check_pair(A, B)
    p = A.shape[0]
    tau = step_size(A, B, cfg.tau_safety)
    c = cfg.c
    At, Bt = A.T, B.T

    P = barycenter(p)
    U = np.zeros((p, p))
    V = np.zeros((p, p))
    alpha = np.zeros((p, p))
    beta = np.zeros((p, p))
    dual = np.zeros((p, p))
    AP, PB = A @ P, P @ B
    state = GlagState(P=P, alpha=alpha, beta=beta, U=U, V=V)
    best_P, best_obj = P, float(np.hypot(AP, PB).sum())
    converged = False

    for t in range(1, cfg.max_iter + 1):
        alpha, beta = _backend.group_shrink(
            np.ascontiguousarray(AP - U), np.ascontiguousarray(PB - V), 1.0 / c)
        RA = alpha + U - AP
        RB = beta + V - PB
        C = P + tau * (At @ RA)
        D = P + tau * (RB @ Bt)
        P_new = project_doubly_stochastic(0.5 * (C + D), cfg.proj_tol, cfg.proj_max_iter, dual)
        AP_old, PB_old = AP, PB
        AP, PB = A @ P_new, P_new @ B
        ra = alpha - AP
        rb = beta - PB
        U += ra
        V += rb
        residual = max(np.linalg.norm(ra), np.linalg.norm(rb))
        change = np.linalg.norm(P_new - P)
        if cfg.adapt_penalty and t % cfg.penalty_every == 0:
            dual_res = c * np.linalg.norm(At @ (AP - AP_old) + (PB - PB_old) @ Bt)
            primal_res = np.hypot(*(np.linalg.norm(x) for x in (ra, rb)))
            if primal_res > cfg.penalty_mu * dual_res:
                c *= cfg.penalty_factor
                U /= cfg.penalty_factor
                V /= cfg.penalty_factor
            elif dual_res > cfg.penalty_mu * primal_res:
                c /= cfg.penalty_factor
                U *= cfg.penalty_factor
                V *= cfg.penalty_factor
        P = P_new
        obj = float(np.hypot(AP, PB).sum())
        state.primal_residuals.append(float(residual))
        state.objective_trace.append(obj)
        if cfg.validate:
            from .polytope import is_doubly_stochastic
            assert is_doubly_stochastic(P), f"iterate {t} left the polytope"
        if obj < best_obj:
            best_P, best_obj = P, obj
        scale = max(np.linalg.norm(AP), np.linalg.norm(PB))
        if (residual <= cfg.eps_abs * p + cfg.eps_rel * scale
                and change <= cfg.eps_abs * p):
            converged = True
            break

    state.P, state.alpha, state.beta, state.U, state.V, state.iter = P, alpha, beta, U, V, t
    return MatchResult(
        P_relaxed=best_P,
        P_star=round_to_permutation(best_P),
        objective=best_obj,
        iterations=t,
        converged=converged,
        method="glag",
        state=state,
    )
