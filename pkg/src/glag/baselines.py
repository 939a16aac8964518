"""Frobenius-norm reference matchers.

Both minimize ``h(P) = ||AP - PB||_F^2`` over doubly stochastic matrices and
round the result to a permutation.  QCP uses projected gradient descent with
a fixed step; FAQ uses Frank-Wolfe with linear assignment directions and an
exact line search.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .matcher import MatchResult, _check_pair
from .polytope import (
    barycenter,
    is_doubly_stochastic,
    project_doubly_stochastic,
    round_to_permutation,
    spectral_norm,
)


@dataclass
class BaselineConfig:
    max_iter: int = 2000
    # relative change of the objective that ends the run
    tol: float = 1e-9
    step_safety: float = 0.9
    validate: bool = False

    def __post_init__(self):
        if self.max_iter < 1:
            raise ParameterError("max_iter must be at least 1")
        if not self.tol > 0:
            raise ParameterError("tol must be positive")
        if not 0 < self.step_safety < 1:
            raise ParameterError("step_safety must lie in (0, 1)")


def frobenius_objective(A, B, P):
    A, B = _check_pair(A, B)
    R = A @ P - P @ B
    return float((R * R).sum())


def _gradient(A, B, R):
    return 2.0 * (A.T @ R - R @ B.T)


def _relative_change(old, new):
    return abs(old - new) / max(abs(old), np.finfo(float).tiny)


def qcp_match(A, B, cfg=None):
    """Projected gradient on ``||AP - PB||_F^2`` from the barycenter."""
    cfg = cfg or BaselineConfig()
    A, B = _check_pair(A, B)
    p = A.shape[0]
    L = 2.0 * (spectral_norm(A) ** 2 + spectral_norm(B) ** 2)
    step = cfg.step_safety / L if L > 0 else 1.0
    P = barycenter(p)
    dual = np.zeros((p, p))
    R = A @ P - P @ B
    h = float((R * R).sum())
    trace = [h]
    converged = False
    it = 0
    while it < cfg.max_iter:
        it += 1
        P = project_doubly_stochastic(P - step * _gradient(A, B, R), dual=dual)
        if cfg.validate:
            assert is_doubly_stochastic(P)
        R = A @ P - P @ B
        h_new = float((R * R).sum())
        trace.append(h_new)
        done = h_new == 0.0 or _relative_change(h, h_new) < cfg.tol
        h = h_new
        if done:
            converged = True
            break
    return MatchResult(P_relaxed=P, P_star=round_to_permutation(P), objective=h,
                       iterations=it, converged=converged, method="qcp", state=trace)


def line_search_step(R, DR):
    """Minimizer over ``[0, 1]`` of ``||R + eta * DR||_F^2``.

    The objective is ``a eta^2 + b eta + const`` with ``a = ||DR||^2`` and
    ``b = 2 <R, DR>``.
    """
    a = float((DR * DR).sum())
    b = 2.0 * float((R * DR).sum())
    if a <= 0.0:
        return 1.0 if b < 0 else 0.0
    return float(min(1.0, max(0.0, -b / (2.0 * a))))


def faq_match(A, B, cfg=None):
    """Frank-Wolfe on ``||AP - PB||_F^2`` from the barycenter."""
    cfg = cfg or BaselineConfig()
    A, B = _check_pair(A, B)
    p = A.shape[0]
    P = barycenter(p)
    R = A @ P - P @ B
    h = float((R * R).sum())
    steps = []
    converged = False
    it = 0
    while it < cfg.max_iter:
        it += 1
        G = _gradient(A, B, R)
        Q = round_to_permutation(-G).matrix
        delta = Q - P
        DR = A @ delta - delta @ B
        eta = line_search_step(R, DR)
        steps.append(eta)
        P = P + eta * delta
        if cfg.validate:
            assert is_doubly_stochastic(P)
        R = R + eta * DR
        h_new = float((R * R).sum())
        done = h_new == 0.0 or eta == 0.0 or _relative_change(h, h_new) < cfg.tol
        h = h_new
        if done:
            converged = True
            break
    return MatchResult(P_relaxed=P, P_star=round_to_permutation(P), objective=h,
                       iterations=it, converged=converged, method="faq", state=steps)
