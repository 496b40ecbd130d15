"""Numba kernels for Aberth-Ehrlich iteration and polynomial evaluation."""

import numpy as np
from numba import njit

_EPS = np.finfo(np.float64).eps


@njit(cache=True, nogil=True)
def horner_with_derivative(c, z):
    """Return ``p(z), p'(z), sum |c_k| |z|^k`` for ascending coefficients ``c``."""
    n = c.shape[0] - 1
    p = c[n]
    dp = 0.0 + 0.0j
    az = abs(z)
    s = abs(c[n])
    for k in range(n - 1, -1, -1):
        dp = dp * z + p
        p = p * z + c[k]
        s = s * az + abs(c[k])
    return p, dp, s


@njit(cache=True, nogil=True)
def newton_ratio(c, z):
    """``(p/p', backward_error)`` at ``z``; uses the reversed polynomial when ``|z| > 1``.

    The backward error is ``|p(z)| / sum_k |c_k| |z|^k``, which is identical
    for the polynomial and its reversal.
    """
    n = c.shape[0] - 1
    if abs(z) <= 1.0:
        p, dp, s = horner_with_derivative(c, z)
        if s == 0.0:
            return 0.0 + 0.0j, 0.0
        err = abs(p) / s
        if dp == 0.0:
            return 0.0 + 0.0j, err
        return p / dp, err
    w = 1.0 / z
    # q(w) = sum_k c_{n-k} w^k
    q = c[0]
    dq = 0.0 + 0.0j
    aw = abs(w)
    s = abs(c[0])
    for k in range(1, n + 1):
        dq = dq * w + q
        q = q * w + c[k]
        s = s * aw + abs(c[k])
    if s == 0.0:
        return 0.0 + 0.0j, 0.0
    err = abs(q) / s
    # p'/p = w (n - w q'/q)
    if q == 0.0:
        return 0.0 + 0.0j, err
    denom = w * (n - w * dq / q)
    if denom == 0.0:
        return 0.0 + 0.0j, err
    return 1.0 / denom, err


@njit(cache=True, nogil=True)
def aberth(c, z, tol, max_iters):
    """In-place Aberth-Ehrlich iteration (Gauss-Seidel ordering).

    Returns ``(iterations, converged_mask, residuals)``.  A root is frozen
    once its backward error drops below ``tol``; the sweep order is fixed,
    so the result is deterministic.
    """
    n = z.shape[0]
    conv = np.zeros(n, dtype=np.bool_)
    frozen = np.zeros(n, dtype=np.bool_)
    res = np.full(n, np.inf)
    it = 0
    for it in range(1, max_iters + 1):
        n_active = 0
        for i in range(n):
            if frozen[i]:
                continue
            ratio, err = newton_ratio(c, z[i])
            res[i] = err
            if err <= tol:
                frozen[i] = True
                continue
            n_active += 1
            s = 0.0 + 0.0j
            for j in range(n):
                if j != i:
                    d = z[i] - z[j]
                    if d != 0.0:
                        s += 1.0 / d
            corr = ratio / (1.0 - ratio * s)
            z[i] -= corr
            if abs(corr) <= 2.0 * _EPS * abs(z[i]):
                # stalled at the precision floor; the final residual decides
                frozen[i] = True
        if n_active == 0:
            break
    # final residuals for every root
    for i in range(n):
        ratio, err = newton_ratio(c, z[i])
        res[i] = err
        conv[i] = err <= tol
    return it, conv, res


@njit(cache=True, nogil=True)
def newton_polish(c, z, steps):
    """Plain Newton steps on every root (no deflation)."""
    for i in range(z.shape[0]):
        for _ in range(steps):
            ratio, err = newton_ratio(c, z[i])
            if ratio == 0.0:
                break
            z[i] -= ratio
    return z


@njit(cache=True, nogil=True)
def residuals(c, z):
    out = np.empty(z.shape[0])
    for i in range(z.shape[0]):
        _, out[i] = newton_ratio(c, z[i])
    return out
