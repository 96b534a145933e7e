"""Order-0 and order-1 Bessel functions of the first kind, and zeros of J0.

Three regimes, each accurate to about 1e-15 absolute:

* x < 8: power series,
* 8 <= x <= 25: Miller backward recurrence normalised by
  J0 + 2 (J2 + J4 + ...) = 1,
* x > 25: Hankel asymptotic expansion.
"""
from __future__ import annotations

import numpy as np

from .errors import ConvergenceFailure

_SERIES_MAX = 8.0
_ASYMP_MIN = 25.0
_MILLER_START = 72          # even; J_72(x)/J_0(x) < 1e-17 for x <= 25
_ASYMP_TERMS = 16


def _series(x, order):
    q = -0.25 * x * x
    term = np.ones_like(x) if order == 0 else 0.5 * x
    total = term.copy()
    for k in range(1, 40):
        term = term * q / (k * (k + order))
        total += term
    return total


def _miller(x):
    # returns (J0, J1)
    j_next = np.zeros_like(x)
    j_cur = np.full_like(x, 1e-30)
    norm = np.zeros_like(x)
    j0 = j1 = None
    for n in range(_MILLER_START, 0, -1):
        j_prev = 2.0 * n / x * j_cur - j_next
        j_next, j_cur = j_cur, j_prev
        # j_cur now holds J_{n-1}
        if (n - 1) % 2 == 0 and n - 1 > 0:
            norm += 2.0 * j_cur
        if n - 1 == 1:
            j1 = j_cur.copy()
    j0 = j_cur
    norm += j0
    return j0 / norm, j1 / norm


def _hankel(x, order):
    mu = 4.0 * order * order
    z = 8.0 * x
    p = np.ones_like(x)
    q = np.zeros_like(x)
    term = np.ones_like(x)
    for k in range(1, 2 * _ASYMP_TERMS):
        term = term * (mu - (2 * k - 1) ** 2) / (k * z)
        if k % 2 == 1:
            q += (-1) ** ((k - 1) // 2) * term
        else:
            p += (-1) ** (k // 2) * term
    chi = x - (0.5 * order + 0.25) * np.pi
    return np.sqrt(2.0 / (np.pi * x)) * (p * np.cos(chi) - q * np.sin(chi))


def bessel_eval(order, x):
    """J_order(x) for order in {0, 1} and x >= 0 (scalar or array)."""
    if order not in (0, 1):
        raise ValueError("only orders 0 and 1 are implemented")
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(xa < 0):
        raise ValueError("x must be non-negative")
    out = np.empty_like(xa)
    small = xa < _SERIES_MAX
    large = xa > _ASYMP_MIN
    mid = ~(small | large)
    if np.any(small):
        out[small] = _series(xa[small], order)
    if np.any(mid):
        j0, j1 = _miller(xa[mid])
        out[mid] = j0 if order == 0 else j1
    if np.any(large):
        out[large] = _hankel(xa[large], order)
    return float(out[0]) if np.ndim(x) == 0 else out.reshape(np.shape(x))


def j0(x):
    return bessel_eval(0, x)


def j1(x):
    return bessel_eval(1, x)


def _mcmahon(n, order):
    b = (np.arange(1, n + 1) + (0.5 * order - 0.25)) * np.pi
    mu = 4.0 * order * order
    return (b - (mu - 1) / (8 * b)
            - 4 * (mu - 1) * (7 * mu - 31) / (3 * (8 * b) ** 3))


def bessel_zeros(n, order=0, tol=1e-15, maxiter=50):
    """First n positive zeros of J0 (or J1): McMahon seed, Newton refinement."""
    if n < 1:
        raise ValueError("n must be >= 1")
    x = _mcmahon(n, order)
    for _ in range(maxiter):
        if order == 0:
            step = j0(x) / -j1(x)
        else:
            step = j1(x) / (j0(x) - j1(x) / x)
        x = x - step
        if np.all(np.abs(step) <= tol * x):
            return x
    if np.all(np.abs(step) <= 1e-12 * x):
        return x
    raise ConvergenceFailure("Newton iteration for Bessel zeros stalled")
