"""Legendre modal basis on [-1, 1], Gauss-Legendre rules and element matrices."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

REFERENCE_INTERVAL = (-1.0, 1.0)

# fixed rule for non-polynomial integrands (source projection, error norms)
FIXED_QUAD_POINTS = 8


@dataclass(frozen=True)
class BasisSpec:
    """Standard Legendre polynomials P_0..P_p with P_j(1) = 1."""

    degree: int

    def __post_init__(self):
        if self.degree < 0:
            raise ValueError(f"degree must be >= 0, got {self.degree}")

    @property
    def size(self) -> int:
        return self.degree + 1

    @property
    def reference_interval(self) -> tuple[float, float]:
        return REFERENCE_INTERVAL

    def eval(self, xi):
        return eval_basis(self.degree, xi)

    def eval_derivative(self, xi):
        return eval_basis_derivative(self.degree, xi)

    @property
    def norms(self) -> np.ndarray:
        """Squared L2 norms 2/(2j+1) on the reference element."""
        return 2.0 / (2.0 * np.arange(self.size) + 1.0)


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray
    exactness: int

    @property
    def size(self) -> int:
        return len(self.nodes)

    def integrate(self, f, a: float = -1.0, b: float = 1.0) -> float:
        """Integrate ``f`` (vectorised callable) over [a, b]."""
        half = 0.5 * (b - a)
        x = a + (self.nodes + 1.0) * half
        return half * float(np.dot(self.weights, f(x)))


@dataclass(frozen=True)
class ElementOperators:
    mass: np.ndarray
    stiffness: np.ndarray
    trace_right: np.ndarray
    trace_left: np.ndarray
    dx: float

    @property
    def degree(self) -> int:
        return self.mass.shape[0] - 1


def eval_basis(p: int, xi):
    """Values [P_0(xi), ..., P_p(xi)] from the three-term recurrence.

    ``xi`` may lie outside [-1, 1]; the shifted-boundary correction needs
    the polynomials extrapolated up to xi = -3. Array input gives an
    output of shape ``(p + 1,) + xi.shape``.
    """
    if p < 0:
        raise ValueError(f"degree must be >= 0, got {p}")
    xi = np.asarray(xi, dtype=float)
    out = np.empty((p + 1,) + xi.shape)
    out[0] = 1.0
    if p >= 1:
        out[1] = xi
    for j in range(1, p):
        out[j + 1] = ((2 * j + 1) * xi * out[j] - j * out[j - 1]) / (j + 1)
    return out


def eval_basis_derivative(p: int, xi):
    """Derivatives [P'_0(xi), ..., P'_p(xi)] with respect to xi.

    Uses P'_{j+1} = P'_{j-1} + (2j + 1) P_j, which has no singularity at
    the end points.
    """
    vals = eval_basis(p, xi)
    out = np.zeros_like(vals)
    if p >= 1:
        out[1] = 1.0
    for j in range(1, p):
        out[j + 1] = out[j - 1] + (2 * j + 1) * vals[j]
    return out


@lru_cache(maxsize=None)
def _gauss_nodes_weights(n: int):
    k = np.arange(n)
    x = np.cos(np.pi * (2 * k + 1) / (2 * n))  # Chebyshev points
    for _ in range(100):
        vals = eval_basis(n, x)
        pn, pn1 = vals[n], vals[n - 1]
        dpn = n * (x * pn - pn1) / (x * x - 1.0)
        dx = pn / dpn
        x = x - dx
        if np.max(np.abs(dx)) <= 1e-15:
            break
    else:
        raise RuntimeError(f"Newton iteration for {n}-point Gauss rule did not converge")
    vals = eval_basis(n, x)
    dpn = n * (x * vals[n] - vals[n - 1]) / (x * x - 1.0)
    w = 2.0 / ((1.0 - x * x) * dpn * dpn)
    order = np.argsort(x)
    x, w = x[order], w[order]
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def gauss_rule(n: int) -> QuadratureRule:
    """n-point Gauss-Legendre rule on [-1, 1], exact to degree 2n - 1."""
    if not 1 <= n <= 32:
        raise ValueError(f"point count must be in [1, 32], got {n}")
    if n == 1:
        x, w = np.zeros(1), np.full(1, 2.0)
    else:
        x, w = _gauss_nodes_weights(n)
    return QuadratureRule(nodes=x, weights=w, exactness=2 * n - 1)


def element_operators(p: int, dx: float) -> ElementOperators:
    """Mass, volume stiffness and upwind trace matrices of one element.

    Indices follow the weak form: row i is the test function, column j the
    trial function. ``stiffness[i, j] = int phi_i' phi_j dx`` does not
    depend on dx. ``trace_left[i, j] = phi_i(-1) * phi_j(+1)`` couples to
    the upwind neighbour.
    """
    if not dx > 0:
        raise ValueError(f"element size must be positive, got {dx}")
    rule = gauss_rule(p + 1)
    phi = eval_basis(p, rule.nodes)
    dphi = eval_basis_derivative(p, rule.nodes)
    jac = 0.5 * dx
    # orthogonality makes the mass matrix exactly diagonal
    mass = np.diag(jac * BasisSpec(p).norms)
    # d/dx = (2/dx) d/dxi cancels the Jacobian
    stiffness = (dphi * rule.weights) @ phi.T
    right = eval_basis(p, 1.0)
    left = eval_basis(p, -1.0)
    trace_right = np.outer(right, right)
    trace_left = np.outer(left, right)
    for a in (mass, stiffness, trace_right, trace_left):
        a.flags.writeable = False
    return ElementOperators(mass, stiffness, trace_right, trace_left, float(dx))
