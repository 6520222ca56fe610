"""Time-stepping kernels on the block representation of GlobalSystem.

Each kernel has a numba version (``*_nb``, loops) and a numpy version
(``*_np``, vectorised where the data dependence allows). The public
names point at one or the other according to ``SBDG_NO_NUMBA``.

Shapes: ``u``, ``minv``, ``f`` are (Ne, n); ``diag``, ``sub`` are
(Ne, n, n). Element e couples to element (e - 1) mod Ne through
``sub[e]``.
"""
import numpy as np

from ._accel import USE_NUMBA, njit


# --------------------------------------------------------------------- numba

@njit
def _rhs_nb(u, minv, diag, sub, f, out):
    ne, n = u.shape
    for e in range(ne):
        ep = e - 1 if e > 0 else ne - 1
        for i in range(n):
            acc = f[e, i]
            for j in range(n):
                acc += diag[e, i, j] * u[e, j] + sub[e, i, j] * u[ep, j]
            out[e, i] = acc * minv[e, i]


@njit
def _blown_up(u, limit):
    ne, n = u.shape
    for e in range(ne):
        for i in range(n):
            v = u[e, i]
            if not (abs(v) <= limit):
                return True
    return False


@njit
def explicit_advance_nb(u, minv, diag, sub, f, dt, order, nsteps, limit):
    """Advance ``u`` in place by up to ``nsteps`` RK steps.

    Returns the number of completed steps; stops early (after the
    offending step) when a mode leaves [-limit, limit] or turns non-finite.
    """
    ne, n = u.shape
    k1 = np.empty((ne, n))
    k2 = np.empty((ne, n))
    k3 = np.empty((ne, n))
    k4 = np.empty((ne, n))
    w = np.empty((ne, n))
    for step in range(nsteps):
        if order == 1:
            _rhs_nb(u, minv, diag, sub, f, k1)
            for e in range(ne):
                for i in range(n):
                    u[e, i] += dt * k1[e, i]
        elif order == 2:
            # Heun
            _rhs_nb(u, minv, diag, sub, f, k1)
            for e in range(ne):
                for i in range(n):
                    w[e, i] = u[e, i] + dt * k1[e, i]
            _rhs_nb(w, minv, diag, sub, f, k2)
            for e in range(ne):
                for i in range(n):
                    u[e, i] += 0.5 * dt * (k1[e, i] + k2[e, i])
        elif order == 3:
            # SSPRK(3,3), Shu-Osher form
            _rhs_nb(u, minv, diag, sub, f, k1)
            for e in range(ne):
                for i in range(n):
                    w[e, i] = u[e, i] + dt * k1[e, i]
            _rhs_nb(w, minv, diag, sub, f, k2)
            for e in range(ne):
                for i in range(n):
                    w[e, i] = 0.75 * u[e, i] + 0.25 * (w[e, i] + dt * k2[e, i])
            _rhs_nb(w, minv, diag, sub, f, k3)
            for e in range(ne):
                for i in range(n):
                    u[e, i] = u[e, i] / 3.0 + 2.0 / 3.0 * (w[e, i] + dt * k3[e, i])
        else:
            # classical RK4
            _rhs_nb(u, minv, diag, sub, f, k1)
            for e in range(ne):
                for i in range(n):
                    w[e, i] = u[e, i] + 0.5 * dt * k1[e, i]
            _rhs_nb(w, minv, diag, sub, f, k2)
            for e in range(ne):
                for i in range(n):
                    w[e, i] = u[e, i] + 0.5 * dt * k2[e, i]
            _rhs_nb(w, minv, diag, sub, f, k3)
            for e in range(ne):
                for i in range(n):
                    w[e, i] = u[e, i] + dt * k3[e, i]
            _rhs_nb(w, minv, diag, sub, f, k4)
            for e in range(ne):
                for i in range(n):
                    u[e, i] += dt / 6.0 * (k1[e, i] + 2.0 * k2[e, i] + 2.0 * k3[e, i] + k4[e, i])
        if _blown_up(u, limit):
            return step + 1
    return nsteps


@njit
def implicit_advance_nb(u, mass, binv, sub, f, dt, nsteps, limit):
    """Implicit Euler by block forward substitution, in place.

    ``binv[e]`` is the inverse of (M_e - dt K_ee). Requires sub[0] == 0.
    """
    ne, n = u.shape
    rhs = np.empty(n)
    for step in range(nsteps):
        for e in range(ne):
            for i in range(n):
                acc = mass[e, i] * u[e, i] + dt * f[e, i]
                if e > 0:
                    for j in range(n):
                        acc += dt * sub[e, i, j] * u[e - 1, j]
                rhs[i] = acc
            for i in range(n):
                acc = 0.0
                for j in range(n):
                    acc += binv[e, i, j] * rhs[j]
                u[e, i] = acc
        if _blown_up(u, limit):
            return step + 1
    return nsteps


# --------------------------------------------------------------------- numpy

def rhs_np(u, minv, diag, sub, f):
    ku = np.einsum("eij,ej->ei", diag, u) + np.einsum("eij,ej->ei", sub, np.roll(u, 1, axis=0))
    return minv * (ku + f)


def _blown_up_np(u, limit):
    return not np.all(np.abs(u) <= limit)


def explicit_advance_np(u, minv, diag, sub, f, dt, order, nsteps, limit):
    def g(v):
        return rhs_np(v, minv, diag, sub, f)

    for step in range(nsteps):
        if order == 1:
            u += dt * g(u)
        elif order == 2:
            k1 = g(u)
            k2 = g(u + dt * k1)
            u += 0.5 * dt * (k1 + k2)
        elif order == 3:
            w = u + dt * g(u)
            w = 0.75 * u + 0.25 * (w + dt * g(w))
            u[:] = u / 3.0 + 2.0 / 3.0 * (w + dt * g(w))
        else:
            k1 = g(u)
            k2 = g(u + 0.5 * dt * k1)
            k3 = g(u + 0.5 * dt * k2)
            k4 = g(u + dt * k3)
            u += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if _blown_up_np(u, limit):
            return step + 1
    return nsteps


def implicit_advance_np(u, mass, binv, sub, f, dt, nsteps, limit):
    ne = u.shape[0]
    for step in range(nsteps):
        rhs = mass * u + dt * f
        u[0] = binv[0] @ rhs[0]
        for e in range(1, ne):
            u[e] = binv[e] @ (rhs[e] + dt * (sub[e] @ u[e - 1]))
        if _blown_up_np(u, limit):
            return step + 1
    return nsteps


if USE_NUMBA:
    explicit_advance = explicit_advance_nb
    implicit_advance = implicit_advance_nb

    def rhs(u, minv, diag, sub, f):
        out = np.empty_like(u)
        _rhs_nb(u, minv, diag, sub, f, out)
        return out
else:
    explicit_advance = explicit_advance_np
    implicit_advance = implicit_advance_np
    rhs = rhs_np
