"""Exact characteristic polynomials of M^-1 K in rational arithmetic.

Everything here is built from integer Legendre coefficients and
``fractions.Fraction``; no floating point enters until ``evaluate``.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

Rational = Union[int, Fraction, str]


@dataclass(frozen=True)
class CharPoly:
    """Monic polynomial, ``coefficients[k]`` multiplies lambda**(degree - k)."""

    coefficients: tuple[Fraction, ...]
    d: Fraction
    p: int
    n_elements: int

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def evaluate(self, lam):
        acc = 0
        for c in self.coefficients:
            acc = acc * lam + float(c)
        return acc

    def ascending(self) -> list[Fraction]:
        return list(reversed(self.coefficients))


def legendre_coefficients(p: int) -> list[list[Fraction]]:
    """Monomial coefficients (ascending powers) of P_0..P_p."""
    polys = [[Fraction(1)], [Fraction(0), Fraction(1)]]
    for j in range(1, p):
        nxt = [Fraction(0)] * (j + 2)
        for k, c in enumerate(polys[j]):
            nxt[k + 1] += Fraction(2 * j + 1, j + 1) * c
        for k, c in enumerate(polys[j - 1]):
            nxt[k] -= Fraction(j, j + 1) * c
        polys.append(nxt)
    return polys[:p + 1]


def _peval(coeffs: Sequence[Fraction], x: Fraction) -> Fraction:
    acc = Fraction(0)
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def _pderiv(coeffs: Sequence[Fraction]) -> list[Fraction]:
    return [k * c for k, c in enumerate(coeffs)][1:] or [Fraction(0)]


def _pmul(a: Sequence[Fraction], b: Sequence[Fraction]) -> list[Fraction]:
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] += x * y
    return out


def _pint(coeffs: Sequence[Fraction]) -> Fraction:
    """Integral over [-1, 1]."""
    return sum((2 * c / (k + 1) for k, c in enumerate(coeffs) if k % 2 == 0), Fraction(0))


def exact_operator(p: int, n_elements: int, d: Rational, periodic: bool = False):
    """M^-1 K as nested lists of Fractions for dx = 1."""
    d = Fraction(d)
    if abs(d) > 1:
        raise ValueError(f"|d| must be <= 1, got {d}")
    if n_elements < 2:
        raise ValueError(f"need at least 2 elements, got {n_elements}")
    leg = legendre_coefficients(p)
    n = p + 1
    # reference element with dx = 1: mass = 1/(2i+1), stiffness = int P_i' P_j dxi
    minv = [Fraction(2 * i + 1) for i in range(n)]
    stiff = [[_pint(_pmul(_pderiv(leg[i]), leg[j])) for j in range(n)] for i in range(n)]
    at_left = [_peval(c, Fraction(-1)) for c in leg]
    at_right = [_peval(c, Fraction(1)) for c in leg]
    at_bnd = [_peval(c, Fraction(-1) + 2 * d) for c in leg]
    interior = [[stiff[i][j] - at_right[i] * at_right[j] for j in range(n)] for i in range(n)]
    coupling = [[at_left[i] * at_right[j] for j in range(n)] for i in range(n)]
    first = [[interior[i][j] - at_left[i] * (at_bnd[j] - at_left[j]) for j in range(n)]
             for i in range(n)]

    size = n * n_elements
    a = [[Fraction(0)] * size for _ in range(size)]
    for e in range(n_elements):
        block = interior if (periodic or e > 0) else first
        for i in range(n):
            row = e * n + i
            for j in range(n):
                a[row][e * n + j] = minv[i] * block[i][j]
            if e > 0 or periodic:
                c = (e - 1) % n_elements
                for j in range(n):
                    a[row][c * n + j] += minv[i] * coupling[i][j]
    return a


def faddeev_leverrier(a: Sequence[Sequence[Fraction]]) -> list[Fraction]:
    """Monic characteristic polynomial det(lambda I - A), highest power first."""
    n = len(a)
    coeffs = [Fraction(1)]
    mk = [[Fraction(0)] * n for _ in range(n)]
    c_prev = Fraction(1)
    for k in range(1, n + 1):
        # M_k = A M_{k-1} + c_{n-k+1} I
        prod = [[sum((a[i][l] * mk[l][j] for l in range(n) if mk[l][j]), Fraction(0))
                 for j in range(n)] for i in range(n)]
        for i in range(n):
            prod[i][i] += c_prev
        mk = prod
        trace = sum((sum((a[i][l] * mk[l][i] for l in range(n)), Fraction(0)) for i in range(n)),
                    Fraction(0))
        c_prev = -trace / k
        coeffs.append(c_prev)
    return coeffs


def char_poly_exact(p: int, n_elements: int, d: Rational) -> CharPoly:
    """Characteristic polynomial of the shifted-boundary system at dx = 1.

    ``d`` is an exact rational (``Fraction``, int, or a string "a/b").
    """
    d = Fraction(d)
    coeffs = faddeev_leverrier(exact_operator(p, n_elements, d))
    return CharPoly(tuple(coeffs), d, p, n_elements)
