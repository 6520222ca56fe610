import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st
from numpy.polynomial import polynomial as P
from scipy.optimize import linear_sum_assignment

from sbdg.basis import eval_basis
from sbdg.eigen import eigvals
from sbdg.operators import (
    ManufacturedCase,
    SbBoundarySpec,
    assemble_periodic,
    assemble_shifted,
    l2_project,
    project_source,
    sb_correction_matrix,
)
from sbdg.solver import SimState, l2_error

d_values = st.floats(-1.0, 1.0, allow_nan=False)


def monomial_operator(p, ne, d, periodic=False):
    """M^-1 K assembled in the monomial basis xi^k, dx = 1, via numpy polynomials."""
    n = p + 1
    basis = [np.eye(n)[k] for k in range(n)]
    ev = lambda c, x: P.polyval(x, c)

    def integ(c):
        c = P.polyint(c)
        return P.polyval(1.0, c) - P.polyval(-1.0, c)

    mass = np.array([[0.5 * integ(P.polymul(bi, bj)) for bj in basis] for bi in basis])
    vol = np.array([[integ(P.polymul(P.polyder(bi), bj)) for bj in basis] for bi in basis])
    right = np.array([[ev(bi, 1.0) * ev(bj, 1.0) for bj in basis] for bi in basis])
    left = np.array([[ev(bi, -1.0) * ev(bj, 1.0) for bj in basis] for bi in basis])
    xb = -1.0 + 2.0 * d
    sbm = np.array([[-ev(bi, -1.0) * (ev(bj, xb) - ev(bj, -1.0)) for bj in basis] for bi in basis])
    K = np.zeros((n * ne, n * ne))
    M = np.zeros_like(K)
    for e in range(ne):
        r = slice(e * n, (e + 1) * n)
        M[r, r] = mass
        K[r, r] = vol - right
        if e > 0 or periodic:
            c = (e - 1) % ne
            K[r, c * n:(c + 1) * n] = left
    if not periodic:
        K[:n, :n] += sbm
    return np.linalg.solve(M, K)


def match_spectra(a, b):
    cost = np.abs(a[:, None] - b[None, :])
    i, j = linear_sum_assignment(cost)
    return cost[i, j].max()


# at d = 0 the boundary-cell eigenvalues coincide with the interior ones
# and form a Jordan pair, where any eigensolver is only sqrt(eps) accurate
@settings(max_examples=25, deadline=None)
@given(p=st.integers(1, 3), d=d_values.filter(lambda d: abs(d) >= 0.01))
def test_spectrum_is_basis_independent(p, d):
    legendre = eigvals(assemble_shifted(p, 2, 1.0, SbBoundarySpec(d=d)).operator)
    monomial = np.linalg.eigvals(monomial_operator(p, 2, d))
    assert match_spectra(legendre, monomial) <= 1e-9 * max(1.0, np.abs(monomial).max())


@pytest.mark.parametrize("p", [1, 2, 3])
def test_operator_is_basis_independent_at_coincidence(p):
    legendre = assemble_shifted(p, 2, 1.0, SbBoundarySpec(d=0.0)).operator
    np.testing.assert_allclose(np.poly(legendre), np.poly(monomial_operator(p, 2, 0.0)),
                               rtol=1e-9, atol=1e-9)


@pytest.mark.parametrize("p", [1, 2, 3])
def test_periodic_spectrum_is_basis_independent(p):
    legendre = eigvals(assemble_periodic(p, 5, 1.0).operator)
    monomial = np.linalg.eigvals(monomial_operator(p, 5, 0.0, periodic=True))
    assert match_spectra(legendre, monomial) <= 1e-9 * np.abs(monomial).max()


@settings(max_examples=25)
@given(p=st.integers(1, 3), ne=st.integers(2, 6), d1=d_values, d2=d_values)
def test_d_only_touches_first_block(p, ne, d1, d2):
    k1 = assemble_shifted(p, ne, 1.0, SbBoundarySpec(d=d1)).stiffness_global
    k2 = assemble_shifted(p, ne, 1.0, SbBoundarySpec(d=d2)).stiffness_global
    diff = k1 - k2
    n = p + 1
    outside = diff.copy()
    outside[:n, :n] = 0.0
    assert np.count_nonzero(outside) == 0


def test_d_zero_gives_fitted_operator():
    sb = assemble_shifted(2, 4, 0.5, SbBoundarySpec(d=0.0))
    per = assemble_periodic(2, 4, 0.5)
    k = per.stiffness_global.copy()
    k[:3, -3:] = 0.0
    np.testing.assert_array_equal(sb.stiffness_global, k)


@settings(max_examples=50)
@given(p=st.integers(1, 4), d=d_values,
       coeffs=st.lists(st.floats(-10, 10), min_size=5, max_size=5))
def test_sb_correction_is_polynomial_shift(p, d, coeffs):
    c = np.array(coeffs[:p + 1])
    q = lambda xi: eval_basis(p, xi) @ c
    expected = -eval_basis(p, -1.0) * (q(-1.0 + 2.0 * d) - q(-1.0))
    np.testing.assert_allclose(sb_correction_matrix(p, d) @ c, expected, atol=1e-13 * (1 + np.abs(c).sum()))


@pytest.mark.parametrize("p", [1, 2, 3])
def test_sb_correction_equals_truncated_taylor(p):
    x, d, xt = sp.symbols("x d x_t")
    a = sp.symbols(f"a0:{p + 1}")
    q = sum(ai * x ** i for i, ai in enumerate(a))
    taylor = sum(d ** k / sp.factorial(k) * sp.diff(q, x, k).subs(x, xt) for k in range(1, p + 1))
    assert sp.expand(taylor - (q.subs(x, xt + d) - q.subs(x, xt))) == 0


def test_sb_correction_rejects_far_boundary():
    with pytest.raises(ValueError):
        sb_correction_matrix(2, 1.5)
    with pytest.raises(ValueError):
        assemble_shifted(1, 4, 0.5, SbBoundarySpec(d=0.6))


def test_assembly_rejects_single_element():
    with pytest.raises(ValueError):
        assemble_periodic(1, 1, 1.0)


def test_boundary_load():
    sb = SbBoundarySpec(d=0.1, u_dirichlet=0.7)
    s = assemble_shifted(2, 3, 0.5, sb)
    np.testing.assert_allclose(s.boundary_load[:3], 0.7 * np.array([1.0, -1.0, 1.0]))
    assert np.count_nonzero(s.boundary_load[3:]) == 0
    assert sb.x_true == pytest.approx(0.1)
    assert SbBoundarySpec(d=0.0, u_dirichlet=lambda t: 2 * t).dirichlet_value(1.5) == 3.0


def test_system_arrays_are_frozen():
    s = assemble_periodic(1, 3, 1.0)
    with pytest.raises(ValueError):
        s.diag_blocks[0, 0, 0] = 1.0
    with pytest.raises(ValueError):
        s.operator[0, 0] = 1.0


def test_projection_reproduces_polynomials():
    s = assemble_periodic(3, 4, 0.5)
    f = lambda x: 1 - 2 * x + x ** 3
    u = l2_project(f, s)
    xi = np.linspace(-1, 1, 7)
    for e in range(4):
        x = s.edges[e] + 0.5 * s.dx * (xi + 1)
        np.testing.assert_allclose(u[4 * e:4 * e + 4] @ eval_basis(3, xi), f(x), atol=1e-13)


def test_source_projection_matches_closed_form():
    case = ManufacturedCase()
    s = assemble_shifted(0 + 1, 10, 0.2, SbBoundarySpec(d=0.0))
    load = project_source(case, s).reshape(10, 2)
    a, b = s.edges[:-1], s.edges[1:]
    # int s(x) dx over each cell = u(b) - u(a)
    np.testing.assert_allclose(load[:, 0], case.u_exact(b) - case.u_exact(a), atol=1e-15)


def test_projection_error_floor_p3():
    case = ManufacturedCase()
    s = assemble_shifted(3, 320, 2.0 / 320, SbBoundarySpec(d=0.0))
    err = l2_error(SimState(l2_project(case.u_exact, s)), s, case, n_quad=8)
    assert err <= 5e-12


def test_l2_norm_of_zero_state():
    case = ManufacturedCase()
    s = assemble_shifted(2, 20, 0.1, SbBoundarySpec(d=0.0))
    assert l2_error(SimState(np.zeros(s.n_dofs)), s, case, n_quad=8) == pytest.approx(0.1, rel=1e-12)
