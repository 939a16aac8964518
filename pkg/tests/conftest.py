import itertools

import numpy as np
import pytest

from glag import _backend
from glag.polytope import Permutation

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


@pytest.fixture(params=_backend.available())
def backend(request, monkeypatch):
    """Run the test once per importable kernel backend."""
    mod = _backend.get(request.param)
    for name in ("ds_project", "lap_min", "group_shrink"):
        monkeypatch.setattr(_backend, name, getattr(mod, name))
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def all_permutations(p):
    return [Permutation(np.array(s)) for s in itertools.permutations(range(p))]


def random_doubly_stochastic(p, rng, terms=6):
    """Random convex combination of permutation matrices."""
    w = rng.dirichlet(np.ones(terms))
    return sum(wi * Permutation.random(p, rng).matrix for wi in w)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} ({detail})")
