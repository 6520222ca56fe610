"""Time integration, steady-state driver and convergence studies."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .basis import eval_basis, gauss_rule
from .operators import (
    GlobalSystem,
    ManufacturedCase,
    SbBoundarySpec,
    assemble_shifted,
    l2_project,
    project_source,
)
from .spectral import EXPLICIT, IMPLICIT, INTEGRATORS, periodic_cfl_max

BLOW_UP_LIMIT = 1e12
STEADY = "steady"
MAX_TIME = "max_time"
BLOW_UP = "blow_up"

# steps between residual checks
CHUNK = 256


class BlowUpError(RuntimeError):
    def __init__(self, message, n_elements=None):
        super().__init__(message)
        self.n_elements = n_elements


class SingularBlockError(np.linalg.LinAlgError):
    def __init__(self, block):
        super().__init__(f"M - dt K is singular in block {block}")
        self.block = block


@dataclass
class SimState:
    modes: np.ndarray
    time: float = 0.0
    step_count: int = 0

    def copy(self) -> "SimState":
        return SimState(self.modes.copy(), self.time, self.step_count)

    @property
    def finite(self) -> bool:
        return bool(np.all(np.isfinite(self.modes)))


@dataclass(frozen=True)
class RunConfig:
    p: int
    n_elements: int
    d_over_dx: float = 0.0
    cfl_normalized: float = 1.0
    integrator: str = EXPLICIT
    max_time: float = 200.0
    residual_tol: float = 1e-12
    case: ManufacturedCase = field(default_factory=ManufacturedCase)
    raw_dt: bool = False

    def __post_init__(self):
        if self.p not in (1, 2, 3):
            raise ValueError(f"p must be 1, 2 or 3, got {self.p}")
        if self.integrator not in INTEGRATORS:
            raise ValueError(f"unknown integrator {self.integrator!r}")
        if not self.cfl_normalized > 0:
            raise ValueError("cfl_normalized must be > 0")
        if not self.residual_tol > 0:
            raise ValueError("residual_tol must be > 0")
        if abs(self.d_over_dx) > 1:
            raise ValueError(f"|d/dx| must be <= 1, got {self.d_over_dx}")

    @property
    def dx(self) -> float:
        return self.case.length / self.n_elements

    @property
    def dt(self) -> float:
        scale = 1.0 if self.raw_dt else periodic_cfl_max(self.p)
        return self.cfl_normalized * scale * self.dx


@dataclass(frozen=True)
class RunResult:
    state: SimState
    l2_error: float
    verdict: str
    residual: float

    def __iter__(self):
        # allows ``state, err, verdict = run_to_steady(cfg)``
        return iter((self.state, self.l2_error, self.verdict))


@dataclass(frozen=True)
class ConvergenceRow:
    n_elements: int
    l2_error: float
    eoa: Optional[float]


@dataclass(frozen=True)
class ConvergenceTable:
    rows: tuple[ConvergenceRow, ...]

    @classmethod
    def from_errors(cls, meshes: Sequence[int], errors: Sequence[float]) -> "ConvergenceTable":
        rows = []
        for i, (ne, err) in enumerate(zip(meshes, errors)):
            eoa = None if i == 0 else math.log2(errors[i - 1] / err)
            rows.append(ConvergenceRow(int(ne), float(err), eoa))
        return cls(tuple(rows))

    @property
    def errors(self) -> list[float]:
        return [r.l2_error for r in self.rows]

    @property
    def eoa(self) -> list[Optional[float]]:
        return [r.eoa for r in self.rows]

    def __len__(self):
        return len(self.rows)


def build_system(config: RunConfig) -> GlobalSystem:
    """Shifted-boundary system for the manufactured case.

    The mesh covers ``case.domain``; the true boundary sits at
    x_left + d and carries the exact solution there as Dirichlet datum.
    """
    case = config.case
    dx = config.dx
    x0 = case.domain[0]
    x_true = x0 + config.d_over_dx * dx
    u_d = float(case.u_exact(x_true))
    sb = SbBoundarySpec(d=config.d_over_dx * dx, x_surrogate=x0, u_dirichlet=u_d)
    system = assemble_shifted(config.p, config.n_elements, dx, sb)
    return system.with_source(project_source(case, system))


def _blocks_of(system: GlobalSystem, state: SimState):
    return np.ascontiguousarray(state.modes.reshape(system.n_elements, system.n_local))


def _forcing_blocks(system: GlobalSystem):
    return np.ascontiguousarray(system.forcing.reshape(system.n_elements, system.n_local))


def residual(system: GlobalSystem, modes: np.ndarray) -> np.ndarray:
    """M^-1 (K U + S + b)."""
    u = np.ascontiguousarray(np.reshape(modes, (system.n_elements, system.n_local)))
    r = _kernels.rhs(u, 1.0 / system.mass_blocks, system.diag_blocks, system.sub_blocks,
                     _forcing_blocks(system))
    return r.ravel()


def _explicit(state, system, dt, order, nsteps, limit):
    if order not in (1, 2, 3, 4):
        raise ValueError(f"RK order must be 1..4, got {order}")
    u = _blocks_of(system, state).copy()
    done = _kernels.explicit_advance(u, 1.0 / system.mass_blocks, system.diag_blocks,
                                     system.sub_blocks, _forcing_blocks(system), float(dt),
                                     int(order), int(nsteps), float(limit))
    return SimState(u.ravel(), state.time + done * dt, state.step_count + done), done


def step_explicit(state: SimState, system: GlobalSystem, dt: float, order: Optional[int] = None,
                  limit: float = BLOW_UP_LIMIT) -> SimState:
    """One s-stage, order-s RK step (Heun, SSPRK3 or RK4; s = p + 1 by default).

    Raises BlowUpError if any mode leaves [-limit, limit].
    """
    order = system.p + 1 if order is None else order
    new, _ = _explicit(state, system, dt, order, 1, limit)
    if not np.all(np.abs(new.modes) <= limit):
        raise BlowUpError(f"blow-up at t = {new.time}")
    return new


def _block_inverses(system: GlobalSystem, dt: float) -> np.ndarray:
    out = np.empty_like(system.diag_blocks)
    for e in range(system.n_elements):
        a = np.diag(system.mass_blocks[e]) - dt * system.diag_blocks[e]
        # Hadamard bound on |det a|
        scale = np.prod(np.linalg.norm(a, axis=1))
        if not abs(np.linalg.det(a)) > 1e-14 * scale:
            raise SingularBlockError(e)
        out[e] = np.linalg.inv(a)
    return out


def _implicit(state, system, dt, nsteps, limit):
    if system.periodic:
        a = system.mass - dt * system.stiffness_global
        u = state.modes.copy()
        mf = dt * system.forcing
        done = 0
        for _ in range(nsteps):
            u = np.linalg.solve(a, system.mass_blocks.ravel() * u + mf)
            done += 1
            if not np.all(np.abs(u) <= limit):
                break
        return SimState(u, state.time + done * dt, state.step_count + done), done
    binv = _block_inverses(system, dt)
    u = _blocks_of(system, state).copy()
    done = _kernels.implicit_advance(u, np.ascontiguousarray(system.mass_blocks), binv,
                                     system.sub_blocks, _forcing_blocks(system), float(dt),
                                     int(nsteps), float(limit))
    return SimState(u.ravel(), state.time + done * dt, state.step_count + done), done


def step_implicit_euler(state: SimState, system: GlobalSystem, dt: float,
                        limit: float = BLOW_UP_LIMIT) -> SimState:
    """Solve (M - dt K) U' = M U + dt (S + b).

    Shifted systems are block lower bidiagonal and use forward
    substitution; periodic ones fall back to a dense solve.
    """
    if dt < 0:
        raise ValueError(f"dt must be >= 0, got {dt}")
    if dt == 0:
        return SimState(state.modes.copy(), state.time, state.step_count + 1)
    new, _ = _implicit(state, system, dt, 1, limit)
    if not np.all(np.abs(new.modes) <= limit):
        raise BlowUpError(f"blow-up at t = {new.time}")
    return new


def l2_error(state: SimState, system: GlobalSystem, case: Optional[ManufacturedCase] = None,
             n_quad: Optional[int] = None) -> float:
    """sqrt(sum_e int (u_h - u_exact)^2) with an n_quad-point Gauss rule per element.

    The default rule has p + 1 points, which reproduces the reference
    convergence data; pass n_quad=8 for a near-exact norm.
    """
    case = case or ManufacturedCase()
    n_quad = system.p + 1 if n_quad is None else n_quad
    rule = gauss_rule(n_quad)
    x = system.edges[:-1, None] + 0.5 * system.dx * (rule.nodes[None, :] + 1.0)
    phi = eval_basis(system.p, rule.nodes)
    uh = state.modes.reshape(system.n_elements, system.n_local) @ phi
    diff = uh - case.u_exact(x)
    return float(math.sqrt(0.5 * system.dx * np.sum(diff * diff * rule.weights)))


def initial_state(system: GlobalSystem, case: ManufacturedCase) -> SimState:
    return SimState(l2_project(case.u_exact, system))


def run_to_steady(config: RunConfig, system: Optional[GlobalSystem] = None) -> RunResult:
    """March the manufactured problem until it is stationary.

    Stops when ||M^-1 (K U + S + b)||_inf drops below
    ``residual_tol * ||M^-1 (S + b)||_inf``, when t exceeds ``max_time``,
    or when a mode exceeds the blow-up limit.
    """
    system = system or build_system(config)
    state = initial_state(system, config.case)
    dt = config.dt
    ref = float(np.max(np.abs(system.forcing / system.mass_blocks.ravel())))
    tol = config.residual_tol * (ref if ref > 0 else 1.0)
    order = config.p + 1
    res = float(np.max(np.abs(residual(system, state.modes))))
    binv = None
    if config.integrator == IMPLICIT and not system.periodic:
        binv = _block_inverses(system, dt)
    while res >= tol:
        if state.time > config.max_time:
            return RunResult(state, l2_error(state, system, config.case), MAX_TIME, res)
        n = min(CHUNK, max(1, int(math.ceil((config.max_time - state.time) / dt)) + 1))
        if config.integrator == EXPLICIT:
            state, done = _explicit(state, system, dt, order, n, BLOW_UP_LIMIT)
        elif binv is not None:
            u = _blocks_of(system, state).copy()
            done = _kernels.implicit_advance(u, np.ascontiguousarray(system.mass_blocks), binv,
                                             system.sub_blocks, _forcing_blocks(system), dt, n,
                                             BLOW_UP_LIMIT)
            state = SimState(u.ravel(), state.time + done * dt, state.step_count + done)
        else:
            state, done = _implicit(state, system, dt, n, BLOW_UP_LIMIT)
        if not np.all(np.abs(state.modes) <= BLOW_UP_LIMIT):
            return RunResult(state, math.inf, BLOW_UP, math.inf)
        res = float(np.max(np.abs(residual(system, state.modes))))
    return RunResult(state, l2_error(state, system, config.case), STEADY, res)


def convergence_study(template: RunConfig, meshes: Sequence[int]) -> ConvergenceTable:
    """Run ``template`` on each mesh; meshes must double each time."""
    meshes = [int(m) for m in meshes]
    if not meshes:
        raise ValueError("empty mesh list")
    for a, b in zip(meshes, meshes[1:]):
        if b != 2 * a:
            raise ValueError(f"meshes must double, got {a} then {b}")
    errors = []
    for ne in meshes:
        result = run_to_steady(replace(template, n_elements=ne))
        if result.verdict == BLOW_UP:
            raise BlowUpError(f"blow-up on the {ne}-element mesh", n_elements=ne)
        errors.append(result.l2_error)
    return ConvergenceTable.from_errors(meshes, errors)
