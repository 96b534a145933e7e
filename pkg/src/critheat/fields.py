"""Radial grids and radial fields on a disk B_rho.

A :class:`RadialField` holds samples of a radial function on a
:class:`RadialGrid`, an optional exact evaluator ``func`` for radii covered
by the grid, and an optional :class:`InnerForm`: a closed-form description
valid on (0, r0] that is used for singular data.

Inner forms are expressed in the log variable t = -2 log r (so t -> inf as
r -> 0), and store log|u| as a function of t.  Integrals over the inner disk
are taken in s = t^{-1/2}, which turns the log-type singularities met here
into bounded integrands on (0, s0].
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate

GAUSS_ORDER = 6
_GL = {}


def gauss_legendre(m):
    if m not in _GL:
        _GL[m] = np.polynomial.legendre.leggauss(m)
    return _GL[m]


def gauss_on_cells(edges, m=GAUSS_ORDER):
    """Nodes and weights of m-point Gauss-Legendre on each cell of ``edges``."""
    x, w = gauss_legendre(m)
    a = np.asarray(edges[:-1])[:, None]
    b = np.asarray(edges[1:])[:, None]
    pts = 0.5 * (a + b) + 0.5 * (b - a) * x[None, :]
    wts = 0.5 * (b - a) * w[None, :]
    return pts.ravel(), wts.ravel()


@dataclass(frozen=True)
class RadialGrid:
    nodes: np.ndarray
    rho: float
    graded: bool = False

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        object.__setattr__(self, "nodes", nodes)
        if nodes.ndim != 1 or nodes.size < 2:
            raise ValueError("a grid needs at least two nodes")
        if not np.all(np.diff(nodes) > 0):
            raise ValueError("grid nodes must be strictly increasing")
        if nodes[0] <= 0:
            raise ValueError("first node must be positive")
        if abs(nodes[-1] - self.rho) > 1e-14 * max(1.0, self.rho):
            raise ValueError("last node must equal rho")

    @classmethod
    def uniform(cls, rho, n, r_min=None):
        r_min = rho / n if r_min is None else r_min
        return cls(np.linspace(r_min, rho, n), rho, graded=False)

    @classmethod
    def graded_grid(cls, rho, n_uniform=800, r_min=1e-8, r_split=None):
        """Geometric nodes (ratio about 1.1) from r_min to r_split, uniform after."""
        r_split = rho / 20 if r_split is None else r_split
        n_geom = max(2, int(np.ceil(np.log(r_split / r_min) / np.log(1.1))))
        geo = np.geomspace(r_min, r_split, n_geom, endpoint=False)
        uni = np.linspace(r_split, rho, n_uniform)
        return cls(np.concatenate([geo, uni]), rho, graded=True)

    @property
    def size(self):
        return self.nodes.size

    def dr_quadrature(self, m=GAUSS_ORDER):
        """Gauss points and weights for integrals in dr over [nodes[0], rho]."""
        return gauss_on_cells(self.nodes, m)


@dataclass(frozen=True)
class InnerForm:
    """Closed-form log|u| as a function of t = -2 log r, valid for r <= r0."""

    r0: float
    log_abs: Callable[[np.ndarray], np.ndarray]
    sign: float = 1.0
    label: str = ""

    @property
    def t0(self):
        return -2.0 * np.log(self.r0)

    def value(self, r):
        r = np.asarray(r, dtype=float)
        with np.errstate(over="ignore", divide="ignore"):
            return self.sign * np.exp(self.log_abs(-2.0 * np.log(r)))

    def transform(self, g_log, sign=1.0, label=""):
        """Inner form of g(u), with g_log mapping log|u| to log|g(u)|."""
        src = self.log_abs
        return InnerForm(self.r0, lambda t: g_log(src(t)), sign, label)

    def scaled(self, c):
        if c == 0:
            raise ValueError("use a zero field instead of scaling by 0")
        src = self.log_abs
        lc = np.log(abs(c))
        return InnerForm(self.r0, lambda t: src(t) + lc, self.sign * np.sign(c),
                         self.label)

    def is_unbounded(self):
        with np.errstate(over="ignore"):
            la = self.log_abs(np.array([1e299, 1e300]))
        return bool(la[1] > 50.0 and la[1] > la[0])

    def is_monotone(self, n=400):
        t = self.t0 + np.geomspace(1e-6, 1e6, n)
        la = self.log_abs(t)
        return bool(np.all(np.diff(la) >= -1e-12 * np.maximum(1.0, np.abs(la[1:]))))

    def min_value(self):
        """Infimum of |u| on (0, r0] (at r0 for monotone forms)."""
        t = self.t0 + np.concatenate([[0.0], np.geomspace(1e-6, 1e6, 300)])
        return float(np.exp(np.min(self.log_abs(t))))


def inner_disk_integral(inner, h_log, s_min=1e-2, r_hi=None, sign=1.0):
    """Integral over r in (0, r_hi] of h(r, u(r)) dr, u given by ``inner``.

    ``h_log(t, log_u)`` returns log h at r = exp(-t/2); ``r_hi`` defaults to
    the hand-over radius r0, and the result is multiplied by ``sign`` (for
    integrands odd in u).  Returns +inf when the integrand is not integrable
    at r = 0 (local power of the s-integrand at or below -1) or when it
    exceeds double range.
    """
    r_hi = inner.r0 if r_hi is None else min(r_hi, inner.r0)
    s0 = (-2.0 * np.log(r_hi)) ** -0.5

    def log_k(s):
        s = np.asarray(s, dtype=float)
        t = s ** -2.0
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            val = h_log(t, inner.log_abs(t)) - 0.5 * t - 3.0 * np.log(s)
        return np.where(np.isnan(val), -np.inf, val)

    # Below s_min the integrand is treated as a power law whose exponent is
    # read off a one-decade chord; exponent <= -1 means divergence.  The tail
    # value uses only that chord (log K carries rounding noise of order eps*t
    # deeper down), but a coarse deep scan still screens for late growth.
    s_min = min(s_min, 0.5 * s0)
    probe = np.array([s_min / 10.0, s_min])
    lk = log_k(probe)
    if np.all(np.isneginf(lk)):
        tail = 0.0
    else:
        slope = (lk[1] - lk[0]) / np.log(10.0)
        if not np.isfinite(slope) or slope <= -1.0 + 1e-9:
            return sign * np.inf
        tail = 0.0 if slope > 60 else float(np.exp(lk[1])) * s_min / (1.0 + slope)
        deep_s = np.geomspace(1e-7, s_min, 25)
        deep = log_k(deep_s)
        if np.any(np.isfinite(deep)):
            lo_slope = (deep[1] - deep[0]) / np.log(deep_s[1] / deep_s[0])
            if np.max(deep) > min(700.0, lk[1] + 50.0) or lo_slope <= -1.0 + 1e-9:
                return sign * np.inf

    sample = log_k(np.geomspace(s_min, s0, 200))
    peak = float(np.max(sample))
    if peak > 700.0:
        return sign * np.inf
    if np.isneginf(peak):
        return sign * tail

    def integrand(s):
        return np.exp(log_k(s) - peak)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, _ = integrate.quad(integrand, s_min, s0, epsabs=0.0, epsrel=1e-11,
                                limit=200)
    return float(sign * (val * np.exp(peak) + tail))


class RadialField:
    """Samples of a radial function on B_rho, optionally with exact pieces.

    Parameters
    ----------
    grid : RadialGrid
    values : array of samples at ``grid.nodes``.
    inner : InnerForm, optional
        Exact description on (0, inner.r0]; ``inner.r0`` must equal the first
        grid node.
    func : callable, optional
        Exact evaluator on [grid.nodes[0], rho].  Without it, the field is the
        piecewise-linear interpolant of the samples, extended by the constant
        first value below the first node.
    quad : (points, weights), optional
        Quadrature for integrals in dr replacing the grid-cell Gauss rule;
        must cover [points range] = [0 or grid.nodes[0], rho].
    """

    def __init__(self, grid, values, inner=None, func=None, quad=None, label="",
                 spectral=None):
        self.grid = grid
        self.values = np.asarray(values, dtype=float)
        if self.values.shape != grid.nodes.shape:
            raise ValueError("values must align with grid nodes")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field values must be finite at every node")
        if inner is not None and abs(inner.r0 - grid.nodes[0]) > 1e-12 * grid.rho:
            raise ValueError("inner form must hand over at the first grid node")
        self.inner = inner
        self.func = func
        self.quad = quad
        self.label = label
        self.spectral = spectral       # (DiskSemigroup, coefficients) or None
        self._qv = None

    # -- evaluation -------------------------------------------------------

    @property
    def rho(self):
        return self.grid.rho

    @property
    def r_lo(self):
        return self.grid.nodes[0]

    def __call__(self, r):
        r_arr = np.atleast_1d(np.asarray(r, dtype=float))
        out = np.empty_like(r_arr)
        below = r_arr < self.r_lo
        above = ~below
        if np.any(below):
            if self.inner is not None:
                out[below] = self.inner.value(r_arr[below])
            elif self.func is not None and self.quad is not None and self.quad[0][0] < self.r_lo:
                out[below] = self.func(r_arr[below])
            else:
                out[below] = self.values[0]
        if np.any(above):
            if self.func is not None:
                out[above] = self.func(r_arr[above])
            else:
                out[above] = np.interp(r_arr[above], self.grid.nodes, self.values)
        return float(out[0]) if np.ndim(r) == 0 else out

    def with_values(self, values, label=""):
        return RadialField(self.grid, values, label=label)

    # -- algebra ----------------------------------------------------------

    def map(self, g, g_log=None, sign=1.0, label=""):
        """Pointwise g(u).  Fields with an inner form need ``g_log``."""
        inner = None
        if self.inner is not None:
            if g_log is None:
                raise ValueError("g_log is required to map an inner form")
            inner = self.inner.transform(g_log, sign=sign)
        func = None
        if self.func is not None:
            src = self.func
            func = lambda r: g(src(r))
        out = RadialField(self.grid, g(self.values), inner=inner, func=func,
                          quad=self.quad, label=label)
        if self.quad is not None:
            out._qv = g(self.quad_values())
        return out

    def scaled(self, c, label=""):
        c = float(c)
        if c == 0.0:
            return RadialField(self.grid, np.zeros_like(self.values), label=label)
        inner = None if self.inner is None else self.inner.scaled(c)
        func = None
        if self.func is not None:
            src = self.func
            func = lambda r: c * src(r)
        spectral = None
        if self.spectral is not None:
            spectral = (self.spectral[0], c * self.spectral[1])
        out = RadialField(self.grid, c * self.values, inner=inner, func=func,
                          quad=self.quad, label=label or self.label,
                          spectral=spectral)
        if getattr(self, "_qv", None) is not None:
            out._qv = c * self._qv
        return out

    def __mul__(self, c):
        return self.scaled(c)

    __rmul__ = __mul__

    def sup(self):
        if self.inner is not None and self.inner.is_unbounded():
            return np.inf
        vals = np.abs(self.values)
        top = float(np.max(vals))
        if self.func is not None and self.quad is not None:
            top = max(top, float(np.max(np.abs(self.quad_values()))))
        if self.inner is not None:
            t = self.inner.t0 + np.geomspace(1e-6, 1e8, 200)
            top = max(top, float(np.exp(np.max(self.inner.log_abs(t)))))
        return top

    # -- integration ------------------------------------------------------

    def dr_quadrature(self):
        if self.quad is not None:
            return self.quad
        return self.grid.dr_quadrature()

    def quad_values(self):
        """Field values at the dr-quadrature points (cached)."""
        if getattr(self, "_qv", None) is None:
            if self.spectral is not None and self.quad is not None:
                sg, coeffs = self.spectral
                self._qv = sg.synthesize(coeffs)
            else:
                self._qv = self(self.dr_quadrature()[0])
        return self._qv

    def radial_integral(self, h, h_log=None):
        """Integral over (0, rho) of h(r, u(r)) dr.

        ``h_log(t, log|u|)`` is needed when the field has an inner form.
        """
        pts, wts = self.dr_quadrature()
        outer = float(np.sum(wts * h(pts, self.quad_values())))
        if self.inner is not None:
            return outer + inner_disk_integral(self.inner, h_log)
        if self.quad is not None and self.quad[0][0] < self.r_lo:
            return outer
        # constant extension on (0, r_lo)
        x, w = gauss_legendre(GAUSS_ORDER)
        rr = 0.5 * self.r_lo * (x + 1.0)
        ww = 0.5 * self.r_lo * w
        return outer + float(np.sum(ww * h(rr, np.full_like(rr, self.values[0]))))

    def integrate(self, G, G_log=None):
        """Integral over B_rho of G(u(x)) dx for a pointwise map G."""
        two_pi = 2.0 * np.pi

        def h(r, u):
            return two_pi * r * G(u)

        h_log = None
        if G_log is not None:
            log_two_pi = np.log(two_pi)
            h_log = lambda t, lu: log_two_pi - 0.5 * t + G_log(lu)
        return self.radial_integral(h, h_log)


def log_abs_power(p):
    """G_log for G(u) = |u|^p."""
    return lambda lu: p * lu


def constant_field(grid, c, label=""):
    return RadialField(grid, np.full(grid.size, float(c)), label=label)
