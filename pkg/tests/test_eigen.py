import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linear_sum_assignment

from sbdg.eigen import EPS, EigenConvergenceError, eigvals, hessenberg, hqr


def paired_gap(a, b):
    cost = np.abs(a[:, None] - b[None, :])
    i, j = linear_sum_assignment(cost)
    return cost[i, j].max()


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 40), seed=st.integers(0, 2 ** 32 - 1))
def test_random_matrices_match_lapack(n, seed):
    a = np.random.default_rng(seed).standard_normal((n, n))
    ours = eigvals(a)
    assert paired_gap(ours, np.linalg.eigvals(a)) <= 1e-10 * max(1.0, np.abs(a).sum(axis=1).max())


def test_output_is_sorted_and_conjugate_closed():
    a = np.random.default_rng(3).standard_normal((12, 12))
    lam = eigvals(a)
    keys = list(zip(lam.real, lam.imag))
    assert keys == sorted(keys)
    np.testing.assert_allclose(np.sort_complex(lam), np.sort_complex(lam.conj()), atol=1e-12)


def test_known_spectra():
    np.testing.assert_allclose(eigvals(np.diag([3.0, -1.0, 2.0])), [-1, 2, 3])
    rot = np.array([[0.0, -2.0], [2.0, 0.0]])
    np.testing.assert_allclose(eigvals(rot), [-2j, 2j], atol=1e-15)
    assert eigvals(np.array([[5.0]]))[0] == 5.0
    assert eigvals(np.zeros((0, 0))).size == 0


def test_badly_scaled_matrix():
    # balancing keeps relative accuracy
    d = np.diag([1e-6, 1.0, 1e6])
    a = d @ np.random.default_rng(1).standard_normal((3, 3)) @ np.linalg.inv(d)
    assert paired_gap(eigvals(a), np.linalg.eigvals(a)) < 1e-9


def test_companion_matrix_roots():
    roots = np.array([-3.0, -1.0, 0.5, 2.0, 4.0])
    c = np.poly(roots)
    comp = np.zeros((5, 5))
    comp[0] = -c[1:]
    comp[1:, :-1] = np.eye(4)
    np.testing.assert_allclose(eigvals(comp).real, roots, atol=1e-10)


def test_rejects_bad_input():
    with pytest.raises(ValueError):
        eigvals(np.ones((2, 3)))
    with pytest.raises(ValueError):
        eigvals(np.array([[np.nan]]))


def test_exhausted_budget_is_flagged():
    a = np.random.default_rng(0).standard_normal((8, 8))
    hessenberg(a)
    assert hqr(a.copy(), EPS, 0)[2] == -1
    assert hqr(a.copy(), EPS, 800)[2] > 0


def test_exhausted_budget_raises(monkeypatch):
    import sbdg.eigen

    monkeypatch.setattr(sbdg.eigen, "hqr", lambda a, tol, budget: (None, None, -1))
    with pytest.raises(EigenConvergenceError):
        eigvals(np.eye(3))
