"""Spectra of M^-1 K, amplification factors and stability scans."""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .eigen import eigvals
from .operators import GlobalSystem, SbBoundarySpec, assemble_periodic, assemble_shifted

EXPLICIT = "explicit"
IMPLICIT = "implicit"
INTEGRATORS = (EXPLICIT, IMPLICIT)

# single classification tolerance for rho <= 1
STABILITY_TOL = 1e-9

# periodic mesh used for the reference CFL; two cells only sample the
# wavenumbers 0 and pi, which overestimates the P2 limit
PERIODIC_REFERENCE_CELLS = 16


class SingularAmplificationError(ArithmeticError):
    pass


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    system_id: tuple

    def __len__(self):
        return len(self.eigenvalues)

    @property
    def max_real(self) -> float:
        return float(self.eigenvalues.real.max())


@dataclass(frozen=True)
class AmplificationQuery:
    integrator: str
    cfl_normalized: float
    cfl_ref: float
    dx: float = 1.0

    def __post_init__(self):
        if self.integrator not in INTEGRATORS:
            raise ValueError(f"unknown integrator {self.integrator!r}")
        if self.cfl_normalized < 0 or not self.cfl_ref > 0:
            raise ValueError("need cfl_normalized >= 0 and cfl_ref > 0")

    @property
    def dt(self) -> float:
        return self.cfl_normalized * self.cfl_ref * self.dx


@dataclass(frozen=True)
class StabilityMap:
    """``rho[i, j]`` belongs to (d_grid[i], cfl_grid[j])."""

    p: int
    integrator: str
    d_grid: np.ndarray
    cfl_grid: np.ndarray
    rho: np.ndarray
    n_elements: int = 2

    @property
    def stable(self) -> np.ndarray:
        return self.rho <= 1.0 + STABILITY_TOL

    @property
    def marginal(self) -> np.ndarray:
        return (self.rho > 1.0) & self.stable

    def records(self):
        for i, d in enumerate(self.d_grid):
            for j, c in enumerate(self.cfl_grid):
                r = self.rho[i, j]
                yield float(d), float(c), float(r), bool(r <= 1.0 + STABILITY_TOL)


def _system_id(system: GlobalSystem) -> tuple:
    d = system.sb.d / system.dx if system.sb is not None else None
    return (system.p, system.n_elements, system.bc, d)


def eigenvalues(system: GlobalSystem) -> Spectrum:
    """Eigenvalues of M^-1 K, ordered by (real, imag)."""
    return Spectrum(eigvals(system.operator), _system_id(system))


def p1_analytic_eigenvalues(d: float) -> np.ndarray:
    """Closed-form spectrum of the two-cell P1 shifted system (dx = 1).

    Interior pair -2 +- i sqrt(2); boundary pair 3d - 2 -+ sqrt(9d^2 - 12d - 2).
    """
    root = np.sqrt(complex(9 * d * d - 12 * d - 2))
    return np.array([-2 - math.sqrt(2) * 1j, -2 + math.sqrt(2) * 1j,
                     3 * d - 2 - root, 3 * d - 2 + root])


def rk_polynomial(mu, order: int):
    """Truncated exponential sum_{k<=order} mu^k / k! (Horner)."""
    mu = np.asarray(mu, dtype=complex)
    acc = np.ones_like(mu)
    for k in range(order, 0, -1):
        acc = 1.0 + acc * mu / k
    return acc


def rk_stability_value(mu, order: int):
    """|z(mu)| of an s-stage, order-s Runge-Kutta method."""
    if order < 1:
        raise ValueError(f"order must be >= 1, got {order}")
    out = np.abs(rk_polynomial(mu, order))
    return float(out) if out.ndim == 0 else out


def _eigs(spectrum) -> np.ndarray:
    return np.asarray(spectrum.eigenvalues if isinstance(spectrum, Spectrum) else spectrum,
                      dtype=complex)


def explicit_spectral_radius(spectrum, dt: float, order: int) -> float:
    if dt < 0:
        raise ValueError(f"dt must be >= 0, got {dt}")
    return float(np.max(np.abs(rk_polynomial(_eigs(spectrum) * dt, order))))


def implicit_spectral_radius(spectrum, dt: float) -> float:
    """max |1 / (1 - dt lambda)|, the spectral radius of (I - dt M^-1 K)^-1."""
    if dt < 0:
        raise ValueError(f"dt must be >= 0, got {dt}")
    denom = 1.0 - dt * _eigs(spectrum)
    if np.any(np.abs(denom) <= 1e-14):
        raise SingularAmplificationError(f"I - dt M^-1 K is singular at dt = {dt}")
    return float(np.max(1.0 / np.abs(denom)))


def spectral_radius(spectrum, dt: float, integrator: str, order: int) -> float:
    if integrator == EXPLICIT:
        return explicit_spectral_radius(spectrum, dt, order)
    if integrator == IMPLICIT:
        return implicit_spectral_radius(spectrum, dt)
    raise ValueError(f"unknown integrator {integrator!r}")


def is_stable(rho: float) -> bool:
    return rho <= 1.0 + STABILITY_TOL


@lru_cache(maxsize=None)
def periodic_cfl_max(p: int, n_elements: int = PERIODIC_REFERENCE_CELLS, tol: float = 1e-5) -> float:
    """Largest stable dt/dx for RK(p+1, p+1) on a periodic mesh, by bisection.

    Returns the stable end of the final bracket.
    """
    lam = eigenvalues(assemble_periodic(p, n_elements, 1.0)).eigenvalues
    order = p + 1
    lo, hi = 0.0, 1.0
    while not is_stable(explicit_spectral_radius(lam, hi, order)):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if is_stable(explicit_spectral_radius(lam, mid, order)):
            lo = mid
        else:
            hi = mid
    return lo


def shifted_spectrum(p: int, d_over_dx: float, n_elements: int = 2) -> np.ndarray:
    """Spectrum of the homogeneous shifted-boundary system with dx = 1."""
    system = assemble_shifted(p, n_elements, 1.0, SbBoundarySpec(d=d_over_dx))
    return eigenvalues(system).eigenvalues


def _rho_row(lam, dts, integrator, order):
    if integrator == EXPLICIT:
        mu = np.outer(dts, lam)
        return np.abs(rk_polynomial(mu, order)).max(axis=1)
    denom = 1.0 - np.outer(dts, lam)
    if np.any(np.abs(denom) <= 1e-14):
        raise SingularAmplificationError("I - dt M^-1 K is singular on the grid")
    return (1.0 / np.abs(denom)).max(axis=1)


def _threads() -> int:
    env = os.environ.get("SBDG_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _as_pair(resolution) -> tuple[int, int]:
    if isinstance(resolution, int):
        nd = nc = resolution
    else:
        nd, nc = resolution
    if nd < 2 or nc < 2:
        raise ValueError("resolution must be >= 2 per axis")
    return nd, nc


def stability_map(p: int, integrator: str, d_range=(-1.0, 1.0), cfl_range=(0.0, 1.0),
                  resolution=201, n_elements: int = 2, raw_dt: bool = False) -> StabilityMap:
    """Max amplification over the (d/dx, CFL) grid.

    CFL is normalised by ``periodic_cfl_max(p)`` unless ``raw_dt`` is set,
    in which case it is dt/dx itself. The spectrum does not depend on dt,
    so each d row is eigensolved once and then amplified over all CFLs.
    """
    if integrator not in INTEGRATORS:
        raise ValueError(f"unknown integrator {integrator!r}")
    nd, nc = _as_pair(resolution)
    d_grid = np.linspace(d_range[0], d_range[1], nd)
    cfl_grid = np.linspace(cfl_range[0], cfl_range[1], nc)
    scale = 1.0 if raw_dt else periodic_cfl_max(p)
    dts = cfl_grid * scale
    order = p + 1

    def row(d):
        try:
            lam = shifted_spectrum(p, float(d), n_elements)
            return _rho_row(lam, dts, integrator, order)
        except Exception as exc:
            raise type(exc)(f"{exc} (d/dx = {d})") from exc

    workers = min(_threads(), nd)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(row, d_grid))
    else:
        rows = [row(d) for d in d_grid]
    return StabilityMap(p, integrator, d_grid, cfl_grid, np.vstack(rows), n_elements)


def amplification_curve(p: int, integrator: str, d: float, cfl_samples: Iterable[float],
                        n_elements: int = 2, raw_dt: bool = False) -> list[tuple[float, float]]:
    """(CFL, rho) pairs at fixed d/dx."""
    cfl = np.asarray(list(cfl_samples), dtype=float)
    scale = 1.0 if raw_dt else periodic_cfl_max(p)
    lam = shifted_spectrum(p, d, n_elements)
    rho = _rho_row(lam, cfl * scale, integrator, p + 1)
    return [(float(c), float(r)) for c, r in zip(cfl, rho)]


def largest_stable(values: Sequence[float], stable: Sequence[bool]) -> float:
    """Largest value whose whole prefix (from values[0]) is stable, or nan."""
    best = math.nan
    for v, s in zip(values, stable):
        if not s:
            break
        best = v
    return best
