"""Dense real eigenvalue solver: balancing, Householder Hessenberg
reduction and Francis double-shift QR.

The three kernels are jitted when numba is enabled and run as plain
Python otherwise (matrices here are at most 64 x 64).
"""
import math

import numpy as np

from ._accel import njit

RADIX = 2.0
EPS = np.finfo(float).eps


class EigenConvergenceError(RuntimeError):
    pass


@njit
def balance(a):
    """Parlett-Reinsch balancing in place; returns the row/column scales."""
    n = a.shape[0]
    scale = np.ones(n)
    sqrdx = RADIX * RADIX
    done = False
    while not done:
        done = True
        for i in range(n):
            r = 0.0
            c = 0.0
            for j in range(n):
                if j != i:
                    c += abs(a[j, i])
                    r += abs(a[i, j])
            if c != 0.0 and r != 0.0:
                g = r / RADIX
                f = 1.0
                s = c + r
                while c < g:
                    f *= RADIX
                    c *= sqrdx
                g = r * RADIX
                while c > g:
                    f /= RADIX
                    c /= sqrdx
                if (c + r) / f < 0.95 * s:
                    done = False
                    g = 1.0 / f
                    scale[i] *= f
                    for j in range(n):
                        a[i, j] *= g
                    for j in range(n):
                        a[j, i] *= f
    return scale


@njit
def hessenberg(a):
    """Householder reduction to upper Hessenberg form, in place."""
    n = a.shape[0]
    v = np.empty(n)
    for k in range(n - 2):
        alpha = 0.0
        for i in range(k + 1, n):
            alpha += a[i, k] * a[i, k]
        alpha = math.sqrt(alpha)
        if alpha == 0.0:
            continue
        if a[k + 1, k] > 0.0:
            alpha = -alpha
        vnorm = 0.0
        for i in range(k + 1, n):
            v[i] = a[i, k]
        v[k + 1] -= alpha
        for i in range(k + 1, n):
            vnorm += v[i] * v[i]
        if vnorm == 0.0:
            continue
        vnorm = math.sqrt(vnorm)
        for i in range(k + 1, n):
            v[i] /= vnorm
        # H A from the left
        for j in range(k, n):
            s = 0.0
            for i in range(k + 1, n):
                s += v[i] * a[i, j]
            s *= 2.0
            for i in range(k + 1, n):
                a[i, j] -= s * v[i]
        # A H from the right
        for i in range(n):
            s = 0.0
            for j in range(k + 1, n):
                s += a[i, j] * v[j]
            s *= 2.0
            for j in range(k + 1, n):
                a[i, j] -= s * v[j]
        for i in range(k + 2, n):
            a[i, k] = 0.0


@njit
def hqr(a, tol, max_total):
    """Eigenvalues of an upper Hessenberg matrix (destroyed).

    Returns ``(wr, wi, iterations)``; ``iterations < 0`` flags that the
    budget ``max_total`` was exhausted.
    """
    n = a.shape[0]
    wr = np.zeros(n)
    wi = np.zeros(n)
    anorm = 0.0
    for i in range(n):
        for j in range(max(i - 1, 0), n):
            anorm += abs(a[i, j])
    nn = n - 1
    t = 0.0
    total = 0
    p = q = r = s = w = x = y = z = 0.0
    while nn >= 0:
        its = 0
        while True:
            l = nn
            while l >= 1:
                s = abs(a[l - 1, l - 1]) + abs(a[l, l])
                if s == 0.0:
                    s = anorm
                if abs(a[l, l - 1]) <= tol * s:
                    a[l, l - 1] = 0.0
                    break
                l -= 1
            x = a[nn, nn]
            if l == nn:
                wr[nn] = x + t
                wi[nn] = 0.0
                nn -= 1
            else:
                y = a[nn - 1, nn - 1]
                w = a[nn, nn - 1] * a[nn - 1, nn]
                if l == nn - 1:
                    p = 0.5 * (y - x)
                    q = p * p + w
                    z = math.sqrt(abs(q))
                    x += t
                    if q >= 0.0:
                        z = p + math.copysign(z, p)
                        wr[nn - 1] = x + z
                        wr[nn] = x + z
                        if z != 0.0:
                            wr[nn] = x - w / z
                        wi[nn - 1] = 0.0
                        wi[nn] = 0.0
                    else:
                        wr[nn - 1] = x + p
                        wr[nn] = x + p
                        wi[nn - 1] = -z
                        wi[nn] = z
                    nn -= 2
                else:
                    if total >= max_total:
                        return wr, wi, -1
                    if its == 10 or its == 20:
                        # exceptional shift
                        t += x
                        for i in range(nn + 1):
                            a[i, i] -= x
                        s = abs(a[nn, nn - 1]) + abs(a[nn - 1, nn - 2])
                        x = 0.75 * s
                        y = x
                        w = -0.4375 * s * s
                    its += 1
                    total += 1
                    m = nn - 2
                    while m >= l:
                        z = a[m, m]
                        r = x - z
                        s = y - z
                        p = (r * s - w) / a[m + 1, m] + a[m, m + 1]
                        q = a[m + 1, m + 1] - z - r - s
                        r = a[m + 2, m + 1]
                        s = abs(p) + abs(q) + abs(r)
                        p /= s
                        q /= s
                        r /= s
                        if m == l:
                            break
                        u = abs(a[m, m - 1]) * (abs(q) + abs(r))
                        v = abs(p) * (abs(a[m - 1, m - 1]) + abs(z) + abs(a[m + 1, m + 1]))
                        if u <= tol * v:
                            break
                        m -= 1
                    for i in range(m, nn - 1):
                        a[i + 2, i] = 0.0
                        if i != m:
                            a[i + 2, i - 1] = 0.0
                    for k in range(m, nn):
                        if k != m:
                            p = a[k, k - 1]
                            q = a[k + 1, k - 1]
                            r = 0.0
                            if k + 1 != nn:
                                r = a[k + 2, k - 1]
                            x = abs(p) + abs(q) + abs(r)
                            if x != 0.0:
                                p /= x
                                q /= x
                                r /= x
                        s = math.copysign(math.sqrt(p * p + q * q + r * r), p)
                        if s != 0.0:
                            if k == m:
                                if l != m:
                                    a[k, k - 1] = -a[k, k - 1]
                            else:
                                a[k, k - 1] = -s * x
                            p += s
                            x = p / s
                            y = q / s
                            z = r / s
                            q /= p
                            r /= p
                            for j in range(k, nn + 1):
                                p = a[k, j] + q * a[k + 1, j]
                                if k + 1 != nn:
                                    p += r * a[k + 2, j]
                                    a[k + 2, j] -= p * z
                                a[k + 1, j] -= p * y
                                a[k, j] -= p * x
                            mmin = nn if nn < k + 3 else k + 3
                            for i in range(l, mmin + 1):
                                p = x * a[i, k] + y * a[i, k + 1]
                                if k + 1 != nn:
                                    p += z * a[i, k + 2]
                                    a[i, k + 2] -= p * r
                                a[i, k + 1] -= p * q
                                a[i, k] -= p
            if not l + 1 < nn:
                break
    return wr, wi, total


def eigvals(a, tol: float = EPS) -> np.ndarray:
    """Eigenvalues of a real square matrix, sorted by (real, imag).

    Raises EigenConvergenceError after 100 * n QR sweeps.
    """
    a = np.array(a, dtype=float, order="C")
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    n = a.shape[0]
    if n == 0:
        return np.zeros(0, dtype=complex)
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    balance(a)
    hessenberg(a)
    wr, wi, its = hqr(a, tol, 100 * n)
    if its < 0:
        raise EigenConvergenceError(f"QR iteration did not converge in {100 * n} sweeps")
    lam = wr + 1j * wi
    return lam[np.lexsort((lam.imag, lam.real))]
