"""The piecewise exponential nonlinearity and its derived maps.

    f(s) = exp(s**2) / |s|**3   for |s| >  beta
    f(s) = alpha * s**2         for |s| <= beta

with alpha = e^{5/2} / (5/2)^{5/2} and beta = sqrt(5/2), the unique pair
making f continuously differentiable.  Derived maps:

    F(s)    = integral_s^inf ds' / f(s')           (s > 0), closed form
    F_inv   = inverse of F on (0, inf)
    g(t)    = f(F_inv(t))

All maps accept scalars or arrays and return the same kind.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, RangeOverflow

ALPHA = np.exp(2.5) / 2.5**2.5
BETA = np.sqrt(2.5)
#: |s| beyond this makes exp(s**2) overflow a double.
S_MAX = np.sqrt(700.0)


def _scalar_or_array(x, out):
    return float(out) if np.ndim(x) == 0 else out


def _check_range(s):
    if np.any(np.abs(s) > S_MAX):
        raise RangeOverflow(f"exp(s^2) not representable for |s| > {S_MAX:.4f}")


@dataclass(frozen=True)
class Nonlinearity:
    """Immutable bundle of f, f', F, F^{-1}, g for the critical nonlinearity."""

    alpha: float = ALPHA
    beta: float = BETA
    F_beta: float = field(init=False)

    def __post_init__(self):
        b2 = self.beta**2
        object.__setattr__(self, "F_beta", (b2 + 1.0) / (2.0 * np.exp(b2)))

    # -- f and f' -------------------------------------------------------

    def f(self, s):
        s_arr = np.asarray(s, dtype=float)
        _check_range(s_arr)
        a = np.abs(s_arr)
        hi = a > self.beta
        ah = np.where(hi, a, 2.0)
        out = np.where(hi, np.exp(ah**2) / ah**3, self.alpha * a**2)
        return _scalar_or_array(s, out)

    def f_prime(self, s):
        s_arr = np.asarray(s, dtype=float)
        _check_range(s_arr)
        hi = np.abs(s_arr) > self.beta
        sh = np.where(hi, s_arr, 2.0)
        upper = np.exp(sh**2) * (2.0 - 3.0 / sh**2) / sh**2 * np.sign(sh)
        out = np.where(hi, upper, 2.0 * self.alpha * s_arr)
        return _scalar_or_array(s, out)

    def log_f(self, s):
        """log f(s) without overflow; -inf at s = 0."""
        a = np.abs(np.asarray(s, dtype=float))
        with np.errstate(divide="ignore"):
            out = np.where(a > self.beta, a**2 - 3.0 * np.log(np.maximum(a, 1e-300)),
                           np.log(self.alpha) + 2.0 * np.log(a))
        return _scalar_or_array(s, out)

    def log_f_of_log(self, log_s):
        """log f(s) given log|s|.  Usable far beyond the overflow range."""
        ls = np.asarray(log_s, dtype=float)
        with np.errstate(over="ignore", invalid="ignore"):
            s2 = np.exp(2.0 * ls)
            out = np.where(ls > np.log(self.beta), s2 - 3.0 * ls,
                           np.log(self.alpha) + 2.0 * ls)
        return _scalar_or_array(log_s, out)

    # -- F, F^{-1}, g ---------------------------------------------------

    def F(self, s):
        s_arr = np.asarray(s, dtype=float)
        if np.any(~(s_arr > 0)):
            raise DomainError("F is defined for s > 0 only")
        with np.errstate(under="ignore", over="ignore"):
            upper = (s_arr**2 + 1.0) / (2.0 * np.exp(s_arr**2))
        lower = self.F_beta + (1.0 / s_arr - 1.0 / self.beta) / self.alpha
        out = np.where(s_arr >= self.beta, upper, lower)
        return _scalar_or_array(s, out)

    def log_F(self, s):
        s_arr = np.asarray(s, dtype=float)
        if np.any(~(s_arr > 0)):
            raise DomainError("F is defined for s > 0 only")
        upper = np.log1p(s_arr**2) - np.log(2.0) - s_arr**2
        with np.errstate(invalid="ignore"):
            lower = np.log(self.F_beta + (1.0 / s_arr - 1.0 / self.beta) / self.alpha)
        out = np.where(s_arr >= self.beta, upper, lower)
        return _scalar_or_array(s, out)

    def F_inv(self, t, rtol=1e-13, maxiter=100):
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        if np.any(~(t_arr > 0)):
            raise DomainError("F^{-1} is defined for t > 0 only")
        out = np.empty_like(t_arr)
        low = t_arr >= self.F_beta
        # algebraic branch: 1/s = 1/beta + alpha (t - F(beta))
        out[low] = 1.0 / (1.0 / self.beta + self.alpha * (t_arr[low] - self.F_beta))
        hi_mask = ~low
        if np.any(hi_mask):
            out[hi_mask] = self._F_inv_upper(t_arr[hi_mask], rtol, maxiter)
        return float(out[0]) if np.ndim(t) == 0 else out

    def _F_inv_upper(self, t, rtol, maxiter):
        # Solve log((s^2+1)/2) - s^2 = log t for s >= beta, Newton kept inside
        # a bisection bracket.  h is strictly decreasing there.
        log_t = np.log(t)

        def h(s):
            return np.log1p(s * s) - np.log(2.0) - s * s - log_t

        lo = np.full_like(t, self.beta)
        hi = np.sqrt(-log_t) + 1.0
        while True:
            bad = h(hi) > 0
            if not np.any(bad):
                break
            hi[bad] *= 2.0
        s = np.clip(np.sqrt(np.maximum(0.0, -np.log(2.0 * t))), lo, hi)
        for _ in range(maxiter):
            hs = h(s)
            pos = hs > 0
            lo = np.where(pos, s, lo)
            hi = np.where(pos, hi, s)
            dh = -2.0 * s**3 / (1.0 + s * s)
            step = hs / dh
            s_new = s - step
            outside = (s_new < lo) | (s_new > hi)
            if not np.any(outside) and np.all(np.abs(step) <= rtol * s):
                return s_new
            s = np.where(outside, 0.5 * (lo + hi), s_new)
        return s

    def g(self, t):
        return self.f(self.F_inv(t))

    # -- structural checks ----------------------------------------------

    def fprime_F(self, s):
        """f'(s) F(s), computed without overflow for s >= beta."""
        s_arr = np.asarray(s, dtype=float)
        out = np.where(s_arr >= self.beta,
                       (2.0 - 3.0 / s_arr**2) / s_arr**2 * (s_arr**2 + 1.0) / 2.0,
                       np.nan)
        lo = s_arr < self.beta
        if np.any(lo):
            out = np.where(lo, 2.0 * self.alpha * s_arr * self.F(np.where(lo, s_arr, 1.0)), out)
        return _scalar_or_array(s, out)


DEFAULT = Nonlinearity()


def eval_f(s):
    return DEFAULT.f(s)


def eval_f_prime(s):
    return DEFAULT.f_prime(s)


def eval_F(s):
    return DEFAULT.F(s)


def eval_F_inv(t):
    return DEFAULT.F_inv(t)


def eval_g(t):
    return DEFAULT.g(t)
