"""Norms and rearrangements of radial fields.

The Luxemburg gauge with threshold gamma is

    ||u||_{f,gamma} = inf{lam > 0 : int_B f(|u|/lam) dx <= gamma}.

Rearrangement works on the piecewise-linear interpolant of the samples: on
each cell the super-level set {u > lam} is an interval whose end is linear in
lam, so the distribution function is piecewise quadratic in lam between
consecutive sample levels, and the inverse is solved exactly there.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np
from scipy.special import logsumexp

from .errors import NotInSpace
from .fields import InnerForm, RadialField, RadialGrid
from .nonlinearity import DEFAULT

_LOG_PI = np.log(np.pi)


def _f_of_scaled(nl, lam):
    """G(u) = f(|u|/lam) evaluated without overflow (inf past double range)."""
    log_lam = np.log(lam)

    def G(u):
        with np.errstate(over="ignore", divide="ignore"):
            return np.exp(nl.log_f(np.abs(u) / lam))

    def G_log(lu):
        return nl.log_f_of_log(lu - log_lam)

    return G, G_log


def modular(field, lam, nl=DEFAULT):
    """int_B f(|u|/lam) dx (may be +inf)."""
    G, G_log = _f_of_scaled(nl, lam)
    return field.integrate(G, G_log)


def luxemburg_norm(field, gamma, nl=DEFAULT, rtol=1e-12):
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    if field.inner is None and not np.any(field.values):
        if field.func is None:
            return 0.0
    if field.inner is None:
        l2 = field.integrate(lambda u: u * u)
        if l2 == 0.0:
            return 0.0
        lo = np.sqrt(nl.alpha * l2 / gamma)
        top = field.sup()
        hi = max(lo, top / nl.beta)
        if hi <= lo * (1 + rtol):
            return float(lo)
    else:
        # exp L^2 needs |u| to grow at most like t^{1/2}, t = -2 log r
        with np.errstate(over="ignore"):
            la = field.inner.log_abs(np.array([1e290, 1e300]))
        if np.all(np.isfinite(la)) and (la[1] - la[0]) / np.log(1e10) > 0.5 + 1e-6:
            raise NotInSpace("inner form grows faster than sqrt(-log r)")
        hi = 1.0
        for _ in range(2000):
            if modular(field, hi, nl) <= gamma:
                break
            hi *= 2.0
            if hi > 1e300:
                raise NotInSpace("modular integral infinite for every scaling")
        lo = hi / 2.0
        while modular(field, lo, nl) <= gamma:
            lo /= 2.0
            if lo < 1e-300:
                return 0.0
    # bisection in log(lam); modular is decreasing in lam
    while hi - lo > rtol * hi:
        mid = np.sqrt(lo * hi)
        if modular(field, mid, nl) <= gamma:
            hi = mid
        else:
            lo = mid
    return float(hi)


def luxemburg_from_samples(values, weights, gamma, nl=DEFAULT, iters=64):
    """Vectorised Luxemburg norm of sampled states.

    ``values`` has shape (..., K) and ``weights`` shape (K,) are quadrature
    weights for dx.  Uses f(s) >= alpha s^2 (equality for s <= beta), which
    brackets the answer between the scaled L^2 norm and max(that, sup/beta).
    """
    u = np.abs(np.asarray(values, dtype=float))
    w = np.asarray(weights, dtype=float)
    l2 = np.sum(w * u * u, axis=-1)
    lo = np.sqrt(nl.alpha * l2 / gamma)
    hi = np.maximum(lo, np.max(u, axis=-1) / nl.beta)
    zero = l2 == 0
    lo = np.where(zero, 1.0, lo)
    hi = np.where(zero, 1.0, hi)
    log_w = np.log(w)
    log_gamma = np.log(gamma)
    lo_l, hi_l = np.log(lo), np.log(hi)
    for _ in range(iters):
        mid = 0.5 * (lo_l + hi_l)
        with np.errstate(divide="ignore"):
            lm = logsumexp(log_w + nl.log_f(u / np.exp(mid)[..., None]), axis=-1)
        ok = lm <= log_gamma
        hi_l = np.where(ok, mid, hi_l)
        lo_l = np.where(ok, lo_l, mid)
    return np.where(zero, 0.0, np.exp(hi_l))


def lebesgue_norm(field, p):
    if p == np.inf:
        return field.sup()
    if p < 1:
        raise ValueError("p must be >= 1")
    with np.errstate(divide="ignore"):
        val = field.integrate(lambda u: np.abs(u) ** p, lambda lu: p * lu)
    return float(val ** (1.0 / p))


def lebesgue_from_samples(values, weights, p):
    u = np.abs(np.asarray(values, dtype=float))
    if p == np.inf:
        return np.max(u, axis=-1)
    return np.sum(weights * u ** p, axis=-1) ** (1.0 / p)


# -- rearrangement ----------------------------------------------------------

def _cells(r, y, with_center):
    a = r[:-1]
    b = r[1:]
    ya = y[:-1]
    yb = y[1:]
    if with_center:
        a = np.concatenate([[0.0], a])
        b = np.concatenate([[r[0]], b])
        ya = np.concatenate([[y[0]], ya])
        yb = np.concatenate([[y[0]], yb])
    return a, b, ya, yb


def _distribution(cells, lams, chunk=256):
    """Area of {u > lam} for the piecewise-linear field, for each lam."""
    a, b, ya, yb = cells
    lams = np.asarray(lams, dtype=float)
    out = np.empty(lams.size)
    full_area = np.pi * (b * b - a * a)
    span = b - a
    for i in range(0, lams.size, chunk):
        lam = lams[i:i + chunk, None]
        above_a = ya > lam
        above_b = yb > lam
        with np.errstate(divide="ignore", invalid="ignore"):
            dec = above_a & ~above_b
            inc = above_b & ~above_a
            c_dec = a + (ya - lam) / (ya - yb) * span
            c_inc = a + (lam - ya) / (yb - ya) * span
        area = np.where(above_a & above_b, full_area, 0.0)
        area = area + np.where(dec, np.pi * (c_dec * c_dec - a * a), 0.0)
        area = area + np.where(inc, np.pi * (b * b - c_inc * c_inc), 0.0)
        out[i:i + chunk] = area.sum(axis=1)
    return out


def _inverse_distribution(cells, targets):
    """phi*(A) = inf{lam : mu(lam) <= A} for each target area A."""
    a, b, ya, yb = cells
    levels = np.unique(np.concatenate([ya, yb, [0.0]]))
    mu_lv = _distribution(cells, levels)
    targets = np.asarray(targets, dtype=float)
    # k: last level with mu > A (mu_lv is non-increasing)
    k = np.searchsorted(-mu_lv, -targets, side="left") - 1
    out = np.zeros(targets.size)
    valid = k >= 0
    if not np.any(valid):
        return out
    ks = np.unique(k[valid])
    ks = ks[ks < levels.size - 1]
    lo_lv = levels[ks]
    hi_lv = levels[ks + 1]
    thetas = np.array([0.25, 0.5, 0.75])
    probe = lo_lv[:, None] + thetas[None, :] * (hi_lv - lo_lv)[:, None]
    q = _distribution(cells, probe.ravel()).reshape(probe.shape)
    # quadratic through the three probes, in theta
    c2 = (q[:, 0] - 2 * q[:, 1] + q[:, 2]) / (2 * 0.25 ** 2)
    c1 = (q[:, 2] - q[:, 0]) / 0.5 - c2 * 1.0
    c0 = q[:, 1] - c1 * 0.5 - c2 * 0.25
    pos = np.searchsorted(ks, k[valid])
    A = targets[valid]
    C0, C1, C2 = c0[pos], c1[pos], c2[pos]
    L0, L1 = lo_lv[pos], hi_lv[pos]
    q_end = C0 + C1 + C2
    jump = q_end > A
    tl = np.zeros_like(A)
    th = np.ones_like(A)
    for _ in range(64):
        tm = 0.5 * (tl + th)
        above = C0 + tm * (C1 + tm * C2) > A
        tl = np.where(above, tm, tl)
        th = np.where(above, th, tm)
    theta = np.where(jump, 1.0, th)
    out[valid] = L0 + theta * (L1 - L0)
    return out


def _inner_dominates(field):
    inner = field.inner
    if inner is None:
        return False
    top = float(np.max(np.abs(field.values)))
    return inner.is_monotone() and inner.min_value() >= top * (1 - 1e-12)


def _expand_inner(field, n=400, depth=1e-12):
    """Replace an inner form by geometric samples (used when it does not dominate)."""
    r0 = field.r_lo
    extra = np.geomspace(depth * r0, r0, n, endpoint=False)
    vals = np.abs(field.inner.value(extra))
    vals = np.minimum(vals, 1e300)
    grid = RadialGrid(np.concatenate([extra, field.grid.nodes]), field.rho)
    return RadialField(grid, np.concatenate([vals, np.abs(field.values)]))


def rearrange(field):
    """Schwarz symmetrization on the field's own grid."""
    if field.inner is not None and not _inner_dominates(field):
        field = _expand_inner(field)
    r = field.grid.nodes
    y = np.abs(field.values)
    keep_inner = field.inner is not None
    cells = _cells(r, y, with_center=not keep_inner)
    base = np.pi * r[0] ** 2 if keep_inner else 0.0
    targets = np.pi * r * r - base
    out = _inverse_distribution(cells, targets)
    # left limit at the full measure: essential infimum
    out[-1] = float(np.min(y)) if keep_inner else float(np.min(y))
    out = np.maximum.accumulate(out[::-1])[::-1]
    inner = None
    if keep_inner:
        src = field.inner.log_abs
        inner = InnerForm(field.inner.r0, src, 1.0, field.inner.label)
    return RadialField(field.grid, out, inner=inner, label=(field.label + "#").lstrip("#"))


def lorentz_norm(field, p, q, rearranged=False):
    """Standard L^{p,q} quasi-norm (int_0^inf (t^{1/p} phi*(t))^q dt/t)^{1/q}."""
    if not p > 1:
        raise ValueError("p must exceed 1")
    fs = field if rearranged else rearrange(field)
    r = fs.grid.nodes
    if q == np.inf:
        vals = (np.pi * r * r) ** (1.0 / p) * fs.values
        top = float(np.max(vals))
        if fs.inner is not None:
            t = fs.inner.t0 + np.concatenate([[0.0], np.geomspace(1e-6, 1e12, 400)])
            lv = (_LOG_PI - t) / p + fs.inner.log_abs(t)
            if lv[-1] > lv[-2] and lv[-1] > np.log(top) + 1.0:
                return np.inf
            top = max(top, float(np.exp(np.max(lv))))
        else:
            top = max(top, float((np.pi * r[0] ** 2) ** (1.0 / p) * fs.values[0]))
        return top
    expo = 2.0 * q / p - 1.0
    const = 2.0 * np.pi ** (q / p)
    log_const = np.log(const)

    def h(rr, u):
        return const * rr ** expo * np.abs(u) ** q

    def h_log(t, lu):
        return log_const - 0.5 * expo * t + q * lu

    val = fs.radial_integral(h, h_log)
    return float(val ** (1.0 / q)) if np.isfinite(val) else np.inf


def lorentz_partial_integrals(field, p, q, radii):
    """int over r in (r_k, r0) of the Lorentz integrand, for shrinking r_k.

    A diagnostic for borderline cases: logarithmic growth of these partial
    integrals as r_k -> 0 is the signature of divergence.
    """
    fs = rearrange(field)
    if fs.inner is None:
        raise ValueError("partial integrals are defined for fields with an inner form")
    expo = 2.0 * q / p - 1.0
    log_const = np.log(2.0) + (q / p) * _LOG_PI
    from scipy import integrate as _int

    t0 = fs.inner.t0
    out = []
    for rk in radii:
        tk = -2.0 * np.log(rk)

        def g(t):
            # dr = (r/2) dt
            return np.exp(log_const - 0.5 * expo * t + q * fs.inner.log_abs(t) - 0.5 * t) / 2.0

        val, _ = _int.quad(g, t0, tk, limit=400, epsrel=1e-10)
        out.append(val)
    return np.array(out)


# -- mu-ratio and reports ---------------------------------------------------

def mu_ratio(field, sol, tol=1e-12):
    """sup u#/u_tilde over grid nodes plus the inner limit."""
    from .stationary import eval_u_tilde

    fs = rearrange(field)
    r = fs.grid.nodes
    scale = max(float(np.max(fs.values)), 1e-300)
    interior = r < sol.rho * (1 - 1e-14)
    ut = eval_u_tilde(sol, np.minimum(r[interior], sol.rho))
    ratio = fs.values[interior] / ut
    best = float(np.max(ratio)) if ratio.size else 0.0
    if fs.values[-1] > tol * scale and not interior[-1]:
        return np.inf
    if fs.inner is not None:
        t = fs.inner.t0 + np.concatenate([[0.0], np.geomspace(1e-6, 1e12, 400)])
        lu = fs.inner.log_abs(t)
        deep = t >= 2.5          # u_tilde = sqrt(t) there
        log_ut = np.where(deep, 0.5 * np.log(t), 0.0)
        if np.any(~deep):
            log_ut[~deep] = np.log(eval_u_tilde(sol, np.exp(-0.5 * t[~deep])))
        inner_ratio = np.exp(lu - log_ut)
        best = max(best, float(np.max(inner_ratio)))
    elif field.inner is None:
        # constant centre disk: u_tilde is unbounded there, ratio -> 0
        pass
    return best


@dataclass
class NormReport:
    luxemburg_gamma: float
    sup_norm: float
    lorentz: List[Tuple[float, float, float]] = field(default_factory=list)
    mu_ratio: float = float("nan")

    def __post_init__(self):
        vals = [self.luxemburg_gamma, self.sup_norm] + [v for _, _, v in self.lorentz]
        if not np.isnan(self.mu_ratio):
            vals.append(self.mu_ratio)
        if any(v < 0 for v in vals):
            raise ValueError("norm report entries must be non-negative")

    def rows(self, time):
        out = [(time, "luxemburg_gamma", self.luxemburg_gamma),
               (time, "sup_norm", self.sup_norm),
               (time, "mu_ratio", self.mu_ratio)]
        out += [(time, f"lorentz_{p:g}_{q:g}", v) for p, q, v in self.lorentz]
        return out


def norm_report(field, gamma, sol=None, lorentz_pairs=(), nl=DEFAULT):
    mu = mu_ratio(field, sol) if sol is not None else float("nan")
    lor = [(p, q, lorentz_norm(field, p, q)) for p, q in lorentz_pairs]
    return NormReport(luxemburg_norm(field, gamma, nl), field.sup(), lor, mu)


def export_reports_csv(times, reports, path):
    """Rows (time, kind, value), one per norm kind per time."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "kind", "value"])
        for t, rep in zip(times, reports):
            for row in rep.rows(t):
                w.writerow([f"{row[0]:.10e}", row[1], f"{row[2]:.12e}"])
    return path
