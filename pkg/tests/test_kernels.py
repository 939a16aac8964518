"""Both kernel backends against independent oracles."""

import itertools

import numpy as np
import pytest
from scipy.optimize import linear_sum_assignment

from glag import _backend, _fallback


@pytest.fixture(params=_backend.available())
def kernels(request):
    return _backend.get(request.param)


def test_backend_selection_reports_a_known_name():
    assert _backend.BACKEND in ("cython", "python")
    assert "python" in _backend.available()
    with pytest.raises(ValueError):
        _backend.get("fortran")


@pytest.mark.parametrize("p", [1, 2, 5, 17])
def test_ds_project_output_is_feasible(kernels, rng, p):
    X = rng.standard_normal((p, p)) * 3
    M, it, res = kernels.ds_project(X, np.zeros((p, p)), 1e-10, 100000)
    assert res <= 1e-10
    assert M.min() >= 0
    assert np.allclose(M.sum(0), 1, atol=1e-9) and np.allclose(M.sum(1), 1, atol=1e-9)


def test_ds_project_matches_fallback(kernels, rng):
    X = rng.standard_normal((12, 12))
    M1, _, _ = kernels.ds_project(X, np.zeros((12, 12)), 1e-12, 100000)
    M2, _, _ = _fallback.ds_project(X, np.zeros((12, 12)), 1e-12, 100000)
    assert np.allclose(M1, M2, atol=1e-10)


def test_ds_project_warm_start_needs_no_sweeps_at_fixed_point(kernels, rng):
    X = rng.standard_normal((8, 8))
    dual = np.zeros((8, 8))
    M, it1, _ = kernels.ds_project(X, dual, 1e-12, 100000)
    M2, it2, _ = kernels.ds_project(X, dual, 1e-12, 100000)
    assert it2 <= 2 < it1
    assert np.allclose(M, M2, atol=1e-12)


def test_ds_project_reports_unmet_tolerance(kernels, rng):
    X = rng.standard_normal((10, 10)) * 10
    _, it, res = kernels.ds_project(X, np.zeros((10, 10)), 1e-14, 1)
    assert it == 1 and res > 1e-14


@pytest.mark.parametrize("p", [1, 2, 3, 6])
def test_lap_min_matches_exhaustive_search(kernels, rng, p):
    C = rng.integers(0, 5, size=(p, p)).astype(float)
    col, u, v = kernels.lap_min(C)
    best = min(sum(C[i, s[i]] for i in range(p)) for s in itertools.permutations(range(p)))
    assert C[np.arange(p), col].sum() == pytest.approx(best)
    reduced = C - u[:, None] - v[None, :]
    assert reduced.min() >= -1e-12
    assert np.allclose(reduced[np.arange(p), col], 0, atol=1e-12)


def test_lap_min_matches_scipy_on_large_instances(kernels, rng):
    for _ in range(5):
        C = rng.standard_normal((40, 40))
        col, _, _ = kernels.lap_min(C)
        r, c = linear_sum_assignment(C)
        assert C[np.arange(40), col].sum() == pytest.approx(C[r, c].sum(), abs=1e-10)
        assert sorted(col) == list(range(40))


def test_group_shrink_matches_pairwise_formula(kernels, rng):
    a, b = rng.standard_normal((2, 9, 9))
    thr = 0.8
    x, y = kernels.group_shrink(a, b, thr)
    for i in range(9):
        for j in range(9):
            n = np.hypot(a[i, j], b[i, j])
            s = max(0.0, 1 - thr / n)
            assert x[i, j] == pytest.approx(s * a[i, j], abs=1e-15)
            assert y[i, j] == pytest.approx(s * b[i, j], abs=1e-15)


def test_group_shrink_zero_pairs_and_zero_threshold(kernels):
    a = np.zeros((2, 2))
    x, y = kernels.group_shrink(a, a, 0.0)
    assert np.all(x == 0) and np.all(y == 0)
    a = np.array([[3.0, 0.0], [1.0, -2.0]])
    x, y = kernels.group_shrink(a, -a, 0.0)
    assert np.array_equal(x, a) and np.array_equal(y, -a)
