import math

import numpy as np
import pytest

from glag.errors import ParameterError
from glag.inference import (
    empirical_covariance,
    gen_gmrf_data,
    glasso_objective,
    graphical_lasso,
    is_positive_definite,
    joint_graphical_lasso,
    joint_infer_unaligned,
    joint_kkt_residual,
    kkt_residual,
    magnitude_graph,
    random_sparse_precision,
    support_f1,
)
from glag.matcher import matching_error
from glag.polytope import Permutation


def _problem(p, k, seed, n_edges=None):
    truth = random_sparse_precision(p, p if n_edges is None else n_edges, seed)
    X = gen_gmrf_data(truth, k, seed + 1)
    return truth, X, empirical_covariance(X)


def _support(T):
    G = (np.asarray(T) != 0).astype(float)
    np.fill_diagonal(G, 0)
    return G


def test_empirical_covariance_is_the_biased_estimator(rng):
    X = rng.standard_normal((30, 4)) + 5
    cov = empirical_covariance(X)
    assert cov.k == 30
    assert np.allclose(cov.S, np.cov(X, rowvar=False, bias=True))
    with pytest.raises(ParameterError):
        empirical_covariance(X[:1])
    with pytest.raises(ParameterError):
        empirical_covariance(np.full((3, 2), np.nan))


def test_gmrf_white_noise_and_determinism():
    p = 8
    X = gen_gmrf_data(np.eye(p), 100 * p, 3)
    S = empirical_covariance(X).S
    assert np.linalg.norm(S - np.eye(p)) / math.sqrt(p) < 0.1
    assert np.array_equal(X, gen_gmrf_data(np.eye(p), 100 * p, 3))
    with pytest.raises(ParameterError):
        gen_gmrf_data(-np.eye(2), 10, 0)


def test_random_sparse_precision_is_positive_definite_with_given_support():
    T = random_sparse_precision(20, 25, 4).Theta
    assert is_positive_definite(T)
    assert np.allclose(T, T.T)
    assert _support(T).sum() == 50


def test_support_f1():
    truth = np.array([[1, 1, 0], [1, 1, 1], [0, 1, 1]], dtype=float)
    assert support_f1(truth, truth) == 1.0
    est = np.array([[1, 0, 1], [0, 1, 1], [1, 1, 1]], dtype=float)
    # one true positive, one false positive, one false negative
    assert support_f1(est, truth) == pytest.approx(0.5)
    assert support_f1(np.eye(3), np.eye(3)) == 1.0


@pytest.mark.parametrize("seed", range(3))
def test_zero_penalty_gives_the_inverse(seed):
    _, _, cov = _problem(10, 200, seed)
    est = graphical_lasso(cov, 0.0, tol=1e-9)
    assert np.allclose(est.Theta, np.linalg.inv(cov.S), atol=1e-6)


def test_large_penalty_gives_the_diagonal_closed_form():
    _, _, cov = _problem(10, 200, 5)
    S = cov.S
    lam = 1.01 * np.abs(S - np.diag(np.diag(S))).max()
    est = graphical_lasso(cov, lam, tol=1e-10)
    assert np.allclose(est.Theta, np.diag(1 / (np.diag(S) + lam)), atol=1e-8)


def test_unpenalized_diagonal_variant():
    _, _, cov = _problem(6, 200, 2)
    S = cov.S
    est = graphical_lasso(cov, 10.0, tol=1e-10, penalize_diagonal=False)
    assert np.allclose(est.Theta, np.diag(1 / np.diag(S)), atol=1e-8)
    assert kkt_residual(S, est.Theta, 10.0, penalize_diagonal=False) <= 1e-10


def _grid_search_2x2(S, lam, levels=5, n=41):
    """Nested grid search over Theta = [[a, b], [b, c]]."""
    center = np.linalg.inv(S + lam * np.eye(2))
    c0 = np.array([center[0, 0], center[0, 1], center[1, 1]])
    width = np.abs(c0).max() * 2
    for _ in range(levels):
        axes = [np.linspace(x - width, x + width, n) for x in c0]
        a, b, c = np.meshgrid(*axes, indexing="ij")
        det = a * c - b * b
        ok = (a > 0) & (det > 0)
        obj = np.full(a.shape, np.inf)
        obj[ok] = (S[0, 0] * a[ok] + 2 * S[0, 1] * b[ok] + S[1, 1] * c[ok] - np.log(det[ok])
                   + lam * (np.abs(a[ok]) + 2 * np.abs(b[ok]) + np.abs(c[ok])))
        i = np.unravel_index(np.argmin(obj), obj.shape)
        c0 = np.array([a[i], b[i], c[i]])
        width *= 4.0 / n
    return np.array([[c0[0], c0[1]], [c0[1], c0[2]]])


@pytest.mark.parametrize("lam", [0.05, 0.2, 0.4])
def test_two_variable_problem_matches_grid_search(lam):
    S = np.array([[1.0, 0.6], [0.6, 2.0]])
    est = graphical_lasso(S, lam, tol=1e-10)
    assert np.allclose(est.Theta, _grid_search_2x2(S, lam), atol=1e-3)


@pytest.mark.parametrize("seed", range(4))
def test_solution_is_certified_and_beats_reference_points(seed):
    _, _, cov = _problem(15, 60, seed)
    lam = 0.1
    est = graphical_lasso(cov, lam)
    assert est.kkt <= 1e-6
    assert kkt_residual(cov, est.Theta, lam) <= 1e-6
    assert is_positive_definite(est.Theta)
    f = glasso_objective(cov, est.Theta, lam)
    assert f <= glasso_objective(cov, np.linalg.inv(cov.S), lam) + 1e-9
    assert f <= glasso_objective(cov, np.diag(1 / (np.diag(cov.S) + lam)), lam) + 1e-9


def test_negative_penalty_is_rejected():
    with pytest.raises(ParameterError):
        graphical_lasso(np.eye(2), -1)
    with pytest.raises(ParameterError):
        joint_graphical_lasso(np.eye(2), np.eye(2), -1)


def test_joint_identical_data_gives_identical_estimates():
    _, _, cov = _problem(8, 300, 1)
    ta, tb = joint_graphical_lasso(cov, cov, 0.1)
    assert np.allclose(ta.Theta, tb.Theta, atol=1e-10)
    assert joint_kkt_residual(cov, cov, ta.Theta, tb.Theta, 0.1) <= 1e-6


def test_joint_identical_data_with_sqrt2_weight_is_the_single_problem():
    _, _, cov = _problem(8, 300, 1)
    ta, _ = joint_graphical_lasso(cov, cov, 0.1 * math.sqrt(2), tol=1e-9)
    single = graphical_lasso(cov, 0.1, tol=1e-9)
    assert np.allclose(ta.Theta, single.Theta, atol=1e-6)


def test_joint_zero_penalty_gives_both_inverses():
    _, _, ca = _problem(6, 200, 1)
    _, _, cb = _problem(6, 200, 2)
    ta, tb = joint_graphical_lasso(ca, cb, 0.0, tol=1e-9)
    assert np.allclose(ta.Theta, np.linalg.inv(ca.S), atol=1e-6)
    assert np.allclose(tb.Theta, np.linalg.inv(cb.S), atol=1e-6)


def test_joint_large_penalty_gives_diagonal_estimates():
    _, _, ca = _problem(6, 200, 1)
    _, _, cb = _problem(6, 200, 2)
    ta, tb = joint_graphical_lasso(ca, cb, 5.0)
    for T in (ta.Theta, tb.Theta):
        assert np.count_nonzero(T - np.diag(np.diag(T))) == 0


def test_joint_estimates_share_support_when_data_do():
    truth = random_sparse_precision(12, 14, 3)
    other = truth.Theta.copy()
    off = other - np.diag(np.diag(other))
    other = 1.3 * off + np.diag(np.abs(1.3 * off).sum(1) + 0.5)
    ca = empirical_covariance(gen_gmrf_data(truth, 3000, 1))
    cb = empirical_covariance(gen_gmrf_data(other, 3000, 2))
    ta, tb = joint_graphical_lasso(ca, cb, 0.08)
    assert np.array_equal(_support(ta.Theta), _support(tb.Theta))


def test_joint_pairing_relabels_the_second_dataset():
    _, _, ca = _problem(7, 300, 1)
    _, _, cb = _problem(7, 300, 2)
    perm = Permutation.random(7, np.random.default_rng(4))
    s, inv = perm.sigma, perm.inverse().sigma
    # shuffled variables with the matching pairing give the shuffled estimate
    cb_shuffled = cb.S[np.ix_(inv, inv)]
    ta0, tb0 = joint_graphical_lasso(ca, cb, 0.1, tol=1e-9)
    ta1, tb1 = joint_graphical_lasso(ca, cb_shuffled, 0.1, pairing=perm, tol=1e-9)
    assert np.allclose(ta0.Theta, ta1.Theta, atol=1e-7)
    assert np.allclose(tb0.Theta[np.ix_(inv, inv)], tb1.Theta, atol=1e-7)
    assert np.allclose(tb1.Theta[np.ix_(s, s)], tb0.Theta, atol=1e-7)


def test_magnitude_graph_drops_signs_and_diagonal():
    g = magnitude_graph(np.array([[2.0, -0.5], [-0.5, 1.0]]))
    assert np.array_equal(g.W, [[0, 0.5], [0.5, 0]])


def test_unaligned_with_identical_data_is_the_aligned_joint_solution():
    _, X, cov = _problem(10, 500, 6)
    pair = joint_infer_unaligned(X, X, 0.1)
    G = _support(pair.theta_a.Theta)
    assert matching_error(G, G, pair.perm) == 0
    ta, tb = joint_graphical_lasso(cov, cov, 0.1, pair.perm)
    assert np.allclose(pair.theta_a.Theta, ta.Theta, atol=1e-8)
    assert np.allclose(pair.theta_b.Theta, tb.Theta, atol=1e-8)
    assert 1 <= pair.outer_rounds <= 10


def test_unaligned_recovers_the_shuffle_with_abundant_samples():
    p, k = 10, 10000
    truth = random_sparse_precision(p, 12, 2)
    Xa = gen_gmrf_data(truth, k, 1)
    shuffle = Permutation.random(p, np.random.default_rng(9))
    Xb = gen_gmrf_data(truth, k, 2)[:, shuffle.sigma]
    pair = joint_infer_unaligned(Xa, Xb, 0.02)
    Ga, Gb = _support(pair.theta_a.Theta), _support(pair.theta_b.Theta)
    assert matching_error(Ga, Gb, pair.perm) == 0
    # the recovered correspondence undoes the shuffle on the true support
    G = _support(truth.Theta)
    assert matching_error(G, G[np.ix_(shuffle.sigma, shuffle.sigma)], pair.perm) == 0


def test_unaligned_with_column_shuffled_copy():
    _, X, _ = _problem(12, 5000, 8)
    shuffle = Permutation.random(12, np.random.default_rng(1))
    pair = joint_infer_unaligned(X, X[:, shuffle.sigma], 0.05)
    Ga, Gb = _support(pair.theta_a.Theta), _support(pair.theta_b.Theta)
    assert matching_error(Ga, Gb, pair.perm) == 0


def test_unaligned_validates_arguments():
    X = np.random.default_rng(0).standard_normal((20, 3))
    with pytest.raises(ParameterError):
        joint_infer_unaligned(X, X, 0.1, rounds=0)
    with pytest.raises(ParameterError):
        joint_infer_unaligned(X, X[:, :2], 0.1)
    with pytest.raises(ParameterError):
        joint_infer_unaligned(X, X, 0.1, group_weight=0)
