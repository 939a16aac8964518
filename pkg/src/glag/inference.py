"""Sparse inverse covariance estimation.

Single-dataset graphical lasso, the two-dataset group graphical lasso with
a shared support penalty, and joint estimation of two precision matrices
whose variables are not aligned (the alignment is learned with the
group-lasso matcher).

Both estimators use the same ADMM splitting: the ``tr(S X) - log det X``
step is solved in closed form through an eigendecomposition and the
penalty step by (pairwise) soft-thresholding.  As written, the penalty sums
over all entries including the diagonal; ``penalize_diagonal=False``
exempts it.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, ParameterError
from .graphs import Graph
from .matcher import GlagConfig, glag_match
from .polytope import Permutation

log = logging.getLogger(__name__)


@dataclass
class Covariance:
    S: np.ndarray
    k: int


@dataclass
class PrecisionEstimate:
    Theta: np.ndarray
    lam: float
    iterations: int = 0
    kkt: float = 0.0


@dataclass
class PrecisionPair:
    theta_a: PrecisionEstimate
    theta_b: PrecisionEstimate
    perm: Permutation
    outer_rounds: int


def as_data(X):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ParameterError("data matrix must be 2-D (samples x variables)")
    if X.shape[0] < 2:
        raise ParameterError(f"need at least 2 samples, got {X.shape[0]}")
    if not np.all(np.isfinite(X)):
        raise ParameterError("data matrix has non-finite entries")
    return X


def empirical_covariance(X):
    """Biased sample covariance ``(1/k) (X - mean)^T (X - mean)``."""
    X = as_data(X)
    Xc = X - X.mean(axis=0)
    S = Xc.T @ Xc / X.shape[0]
    S = 0.5 * (S + S.T)
    return Covariance(S=S, k=X.shape[0])


def _as_cov(S):
    if isinstance(S, Covariance):
        S = S.S
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ParameterError("covariance must be square")
    if not np.allclose(S, S.T, atol=1e-12, rtol=0):
        raise ParameterError("covariance must be symmetric")
    return 0.5 * (S + S.T)


def is_positive_definite(M):
    try:
        np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        return False
    return True


def glasso_objective(S, Theta, lam, penalize_diagonal=True):
    """``tr(S Theta) - log det Theta + lam * sum |Theta_ij|``."""
    S = _as_cov(S)
    sign, logdet = np.linalg.slogdet(Theta)
    if sign <= 0:
        return np.inf
    pen = np.abs(Theta)
    if not penalize_diagonal:
        pen = pen - np.diag(np.diag(pen))
    return float(np.sum(S * Theta) - logdet + lam * pen.sum())


def _penalty_mask(p, penalize_diagonal):
    mask = np.ones((p, p))
    if not penalize_diagonal:
        np.fill_diagonal(mask, 0.0)
    return mask


def kkt_residual(S, Theta, lam, penalize_diagonal=True):
    """Sup-norm violation of ``0 in S - Theta^{-1} + lam * d|Theta|``."""
    S = _as_cov(S)
    G = S - np.linalg.inv(Theta)
    lam_m = lam * _penalty_mask(S.shape[0], penalize_diagonal)
    nz = Theta != 0
    res = np.where(nz, np.abs(G + lam_m * np.sign(Theta)), np.maximum(np.abs(G) - lam_m, 0.0))
    return float(res.max())


def joint_kkt_residual(Sa, Sb, Ta, Tb, lam, penalize_diagonal=True):
    """Sup-norm optimality violation for the shared-support (group) penalty."""
    Sa, Sb = _as_cov(Sa), _as_cov(Sb)
    Ga = Sa - np.linalg.inv(Ta)
    Gb = Sb - np.linalg.inv(Tb)
    lam_m = lam * _penalty_mask(Sa.shape[0], penalize_diagonal)
    norm = np.hypot(Ta, Tb)
    nz = norm > 0
    safe = np.where(nz, norm, 1.0)
    ra = np.abs(Ga + lam_m * Ta / safe)
    rb = np.abs(Gb + lam_m * Tb / safe)
    active = np.maximum(ra, rb)
    inactive = np.maximum(np.hypot(Ga, Gb) - lam_m, 0.0)
    return float(np.where(nz, active, inactive).max())


def _logdet_prox(S, M, rho):
    """argmin_X tr(S X) - log det X + rho/2 ||X - M||_F^2."""
    d, Q = np.linalg.eigh(rho * M - S)
    theta = (d + np.sqrt(d * d + 4.0 * rho)) / (2.0 * rho)
    X = (Q * theta) @ Q.T
    return 0.5 * (X + X.T)


def _admm(covs, lam, tol, max_iter, rho, penalize_diagonal):
    """Shared ADMM loop for one or two covariance matrices."""
    p = covs[0].shape[0]
    mask = _penalty_mask(p, penalize_diagonal)
    Z = [np.diag(1.0 / (np.diag(S) + lam)) if np.all(np.diag(S) + lam > 0) else np.eye(p)
         for S in covs]
    U = [np.zeros((p, p)) for _ in covs]
    kkt = np.inf
    for it in range(1, max_iter + 1):
        X = [_logdet_prox(S, z - u, rho) for S, z, u in zip(covs, Z, U)]
        Z_old = Z
        V = [x + u for x, u in zip(X, U)]
        thr = lam * mask / rho
        if len(covs) == 1:
            Z = [np.sign(V[0]) * np.maximum(np.abs(V[0]) - thr, 0.0)]
        else:
            norm = np.hypot(V[0], V[1])
            with np.errstate(divide="ignore", invalid="ignore"):
                scale = np.where(norm > thr, 1.0 - thr / norm, 0.0)
            Z = [scale * V[0], scale * V[1]]
        Z = [0.5 * (z + z.T) for z in Z]
        for u, x, z in zip(U, X, Z):
            u += x - z
        r = np.sqrt(sum(np.sum((x - z) ** 2) for x, z in zip(X, Z)))
        s = rho * np.sqrt(sum(np.sum((z - zo) ** 2) for z, zo in zip(Z, Z_old)))
        if (r <= tol and s <= tol) or it % 25 == 0:
            if all(is_positive_definite(z) for z in Z):
                if len(covs) == 1:
                    kkt = kkt_residual(covs[0], Z[0], lam, penalize_diagonal)
                else:
                    kkt = joint_kkt_residual(covs[0], covs[1], Z[0], Z[1], lam, penalize_diagonal)
                if kkt <= tol:
                    return Z, it, kkt
        # residual balancing on rho; U is the scaled dual
        if r > 10.0 * s:
            rho *= 2.0
            U = [u / 2.0 for u in U]
        elif s > 10.0 * r:
            rho /= 2.0
            U = [u * 2.0 for u in U]
    raise ConvergenceError(
        f"graphical lasso did not reach KKT residual {tol:g} in {max_iter} iterations "
        f"(last checked {kkt:.3e})", residual=kkt, iterations=max_iter)


def graphical_lasso(S, lam, tol=1e-6, max_iter=20000, rho=1.0, penalize_diagonal=True):
    """l1-penalized Gaussian maximum likelihood for the precision matrix.

    Iterates until the KKT residual of the returned (exactly sparse,
    positive definite) estimate is at most ``tol``.
    """
    if lam < 0:
        raise ParameterError("lambda must be nonnegative")
    S = _as_cov(S)
    (Theta,), it, kkt = _admm([S], float(lam), tol, max_iter, rho, penalize_diagonal)
    return PrecisionEstimate(Theta=Theta, lam=float(lam), iterations=it, kkt=kkt)


def joint_graphical_lasso(Sa, Sb, lam, pairing=None, tol=1e-6, max_iter=20000, rho=1.0,
                          penalize_diagonal=True):
    """Two precision matrices with a group penalty tying entry ``(i, j)`` of
    ``Theta_a`` to entry ``(sigma(i), sigma(j))`` of ``Theta_b``.

    ``pairing`` defaults to the identity.  Internally ``Sb`` is relabeled into
    the variable order of ``Sa``, solved, and the estimate is mapped back.
    """
    if lam < 0:
        raise ParameterError("lambda must be nonnegative")
    Sa, Sb = _as_cov(Sa), _as_cov(Sb)
    if Sa.shape != Sb.shape:
        raise ParameterError(f"covariances differ in size: {Sa.shape[0]} vs {Sb.shape[0]}")
    p = Sa.shape[0]
    if pairing is None:
        pairing = Permutation.identity(p)
    if pairing.size != p:
        raise ParameterError("pairing size does not match the covariances")
    s = pairing.sigma
    Sb_rel = Sb[np.ix_(s, s)]
    (Ta, Tb_rel), it, kkt = _admm([Sa, Sb_rel], float(lam), tol, max_iter, rho, penalize_diagonal)
    inv = pairing.inverse().sigma
    Tb = Tb_rel[np.ix_(inv, inv)]
    return (PrecisionEstimate(Ta, float(lam), it, kkt), PrecisionEstimate(Tb, float(lam), it, kkt))


def magnitude_graph(Theta):
    """Graph of absolute off-diagonal precision entries."""
    W = np.abs(np.asarray(Theta, dtype=float))
    W = 0.5 * (W + W.T)
    np.fill_diagonal(W, 0.0)
    return Graph(W)


def joint_infer_unaligned(Xa, Xb, lam, rounds=10, glag_cfg=None, tol=1e-6,
                          penalize_diagonal=True, group_weight=1.0):
    """Estimate two precision matrices and the variable correspondence.

    Block coordinate descent: start from separate graphical lassos, then
    alternate a matching step on the magnitude graphs with a joint
    graphical lasso under the current correspondence.  Stops early when the
    correspondence repeats.

    Parameters
    ----------
    Xa, Xb : array_like, shape (k, p)
        Samples of the two datasets; the columns of ``Xb`` may be in any
        order.
    lam : float
        Penalty of the separate graphical lassos used for initialization.
    rounds : int
        Maximum number of matching / estimation rounds.
    glag_cfg : GlagConfig, optional
    tol : float
        KKT tolerance of every graphical lasso solve.
    penalize_diagonal : bool
    group_weight : float
        The joint steps use the penalty ``lam * group_weight``.  With
        ``sqrt(2)`` two identical datasets give back the single-dataset
        estimate at ``lam``, which puts both estimators on the same scale.

    Returns
    -------
    PrecisionPair
    """
    if not group_weight > 0:
        raise ParameterError("group_weight must be positive")
    if rounds < 1:
        raise ParameterError("rounds must be at least 1")
    Ca, Cb = empirical_covariance(Xa), empirical_covariance(Xb)
    if Ca.S.shape != Cb.S.shape:
        raise ParameterError(f"datasets have different variable counts: "
                             f"{Ca.S.shape[0]} vs {Cb.S.shape[0]}")
    ta = graphical_lasso(Ca, lam, tol=tol, penalize_diagonal=penalize_diagonal)
    tb = graphical_lasso(Cb, lam, tol=tol, penalize_diagonal=penalize_diagonal)
    perm = None
    done = 0
    for done in range(1, rounds + 1):
        match = glag_match(magnitude_graph(ta.Theta), magnitude_graph(tb.Theta), glag_cfg)
        if perm is not None and match.P_star == perm:
            log.debug("correspondence repeated after %d rounds", done - 1)
            done -= 1
            break
        perm = match.P_star
        ta, tb = joint_graphical_lasso(Ca, Cb, lam * group_weight, perm, tol=tol,
                                       penalize_diagonal=penalize_diagonal)
    return PrecisionPair(theta_a=ta, theta_b=tb, perm=perm, outer_rounds=max(done, 1))


def random_sparse_precision(p, n_edges, seed, low=0.2, high=0.4, margin=0.5):
    """Sparse symmetric positive definite matrix on a random G(p, n_edges) support.

    Off-diagonal values have random signs and magnitudes in ``[low, high]``;
    each diagonal entry is the absolute row sum plus ``margin``.
    """
    from .graphs import gen_erdos_renyi

    rng = np.random.default_rng(seed)
    support = gen_erdos_renyi(p, n_edges, int(rng.integers(2**63)))
    iu, ju = np.nonzero(np.triu(support.W, 1))
    vals = rng.uniform(low, high, iu.size) * rng.choice([-1.0, 1.0], iu.size)
    T = np.zeros((p, p))
    T[iu, ju] = vals
    T[ju, iu] = vals
    np.fill_diagonal(T, np.abs(T).sum(axis=1) + margin)
    return PrecisionEstimate(Theta=T, lam=0.0)


def gen_gmrf_data(theta_gt, k, seed):
    """``k`` zero-mean Gaussian samples with covariance ``inv(Theta)``."""
    T = theta_gt.Theta if isinstance(theta_gt, PrecisionEstimate) else np.asarray(theta_gt, float)
    if k < 1:
        raise ParameterError("sample count must be positive")
    try:
        Sigma = np.linalg.inv(T)
        L = np.linalg.cholesky(0.5 * (Sigma + Sigma.T))
    except np.linalg.LinAlgError as exc:
        raise ParameterError(f"precision matrix is not positive definite: {exc}") from None
    rng = np.random.default_rng(seed)
    return rng.standard_normal((k, T.shape[0])) @ L.T


def support_f1(estimate, truth):
    """F1 score of the off-diagonal supports (upper triangle)."""
    est = np.asarray(estimate)
    tru = np.asarray(truth)
    iu = np.triu_indices(est.shape[0], 1)
    e = est[iu] != 0
    t = tru[iu] != 0
    tp = int(np.sum(e & t))
    if tp == 0:
        return 1.0 if not e.any() and not t.any() else 0.0
    precision = tp / e.sum()
    recall = tp / t.sum()
    return float(2 * precision * recall / (precision + recall))
