"""Supersolution by the transform v = F(u)^{-1/2} and the Perron limit.

For data u0 >= 0 set v0 = max(F(u0)^{-1/2}, D) with D = F(beta)^{-1/2} and
solve

    v_t - Lap v = v^3 / 2  in B_rho,   v = D on the boundary,   v(0) = v0.

Then ubar = F^{-1}(v^{-2}) >= beta is a supersolution of u_t = Lap u + f(u),
and the monotone iteration started from e^{t Lap} u0 stays below it.  For
u0 = u_tilde this gives a bounded solution next to the stationary one.
"""
from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy.special import i0e

from .errors import (CeilingViolation, DomainError, MonotonicityViolation, NoConvergence)
from .evolution import DuhamelOperator, EvolutionTrace, default_times
from .fields import RadialField, gauss_legendre
from .nonlinearity import DEFAULT
from .bessel import j1
from .semigroup import DiskSemigroup
from .spaces import lebesgue_from_samples, lorentz_norm, luxemburg_from_samples

D_CONST = DEFAULT.F_beta ** -0.5
L5_WEIGHT = 0.3                     # the t^{3/10} weight on the L^5 norm


def boundary_value(nl=DEFAULT):
    return nl.F_beta ** -0.5


# -- the transform and its inverse -------------------------------------------

def transform_initial(u0, nl=DEFAULT):
    """v0 = max(F(u0)^{-1/2}, F(beta)^{-1/2}), with the inner form mapped in logs."""
    D = boundary_value(nl)
    log_D = np.log(D)

    def g(u):
        u = np.asarray(u, dtype=float)
        pos = u > nl.beta
        out = np.full(u.shape, D)
        if np.any(pos):
            out[pos] = np.maximum(np.exp(-0.5 * nl.log_F(u[pos])), D)
        return out

    def g_log(lu):
        lu = np.asarray(lu, dtype=float)
        with np.errstate(over="ignore"):
            u = np.exp(lu)
        out = np.full(lu.shape, log_D)
        pos = u > nl.beta
        big = np.isinf(u)
        mid = pos & ~big
        if np.any(mid):
            out[mid] = np.maximum(-0.5 * nl.log_F(u[mid]), log_D)
        if np.any(big):
            # -log F(u)/2 = u^2/2 - log(u^2 + 1)/2 + log(2)/2 with u^2 overflowing
            s2 = np.exp(2.0 * lu[big])
            out[big] = 0.5 * s2
        return out

    return u0.map(g, g_log, label="v0")


def shifted_initial(v0, nl=DEFAULT):
    """vbar0 = v0 - D, zero on the boundary."""
    D = boundary_value(nl)

    def g(v):
        return np.maximum(np.asarray(v) - D, 0.0)

    def g_log(lv):
        lv = np.asarray(lv, dtype=float)
        with np.errstate(divide="ignore", over="ignore"):
            gap = -np.expm1(np.log(D) - lv)       # 1 - D/v
            return lv + np.log(np.maximum(gap, 0.0))

    return v0.map(g, g_log, label="vbar0")


def inverse_transform_values(v, nl=DEFAULT, slack=1e-10):
    """ubar = F^{-1}(v^{-2}); DomainError if v < D beyond ``slack`` (relative)."""
    D = boundary_value(nl)
    v = np.asarray(v, dtype=float)
    low = float(np.min(v))
    if low < D * (1.0 - slack):
        raise DomainError(f"v = {low:.12g} below the floor F(beta)^(-1/2) = {D:.12g}")
    vv = np.maximum(v, D)
    return np.maximum(nl.F_inv(vv ** -2.0), nl.beta)


# -- auxiliary cubic problem -------------------------------------------------

@dataclass
class AuxiliaryProblem:
    v0: RadialField
    T: float
    q: float = 3.0
    delta: float = float("nan")
    M: float = float("nan")
    D: float = D_CONST

    def __post_init__(self):
        if abs(self.D - D_CONST) > 1e-15 * D_CONST:
            raise ValueError("D must equal F(beta)^(-1/2)")
        if not 2.0 < self.q <= 5.0:
            raise ValueError("q must lie in (2, 5]")
        self.v0_floor = float(np.min(self.v0.values))
        if self.v0_floor < self.D * (1 - 1e-12):
            raise ValueError("v0 must be >= D everywhere")


def lifting_tail(sg, r=None):
    """psi - psi_N for psi = (rho^2 - r^2)/4, the solution of -Lap psi = 1, psi(rho) = 0.

    The source (vbar + D)^3/2 equals D^3/2 on the boundary at all times, and
    the response to a constant is c (psi - e^{t Lap} psi).  Its truncated mode
    sum misses c (psi - psi_N) up to terms of size exp(-lam_N t); adding the
    tail back removes the Gibbs ripple of the constant part.
    Uses <1, phi_n> = 2 pi rho^2 J1(j_n) / j_n * norm_n.
    """
    rr = sg.points if r is None else np.asarray(r, dtype=float)
    ones = 2.0 * np.pi * sg.rho ** 2 * j1(sg.zeros) / sg.zeros * sg.norms
    psi_n = ones / sg.eigenvalues
    exact = 0.25 * (sg.rho ** 2 - rr ** 2)
    if r is None:
        return exact - psi_n @ sg.psi
    return exact - psi_n @ sg.mode_values(rr)


@dataclass
class AuxiliaryResult:
    times: np.ndarray
    coeffs: np.ndarray              # coefficients of vbar = v - D
    sg: DiskSemigroup
    D: float
    distances: List[float] = field(default_factory=list)
    contraction: List[float] = field(default_factory=list)
    weighted_l5: Optional[np.ndarray] = None
    budget: dict = field(default_factory=dict)
    lifted: bool = True

    def __post_init__(self):
        self._tail = lifting_tail(self.sg) if self.lifted else np.zeros(self.sg.points.size)

    @property
    def source_floor(self):
        return 0.5 * self.D ** 3

    def vbar_values(self):
        out = self.coeffs @ self.sg.psi
        out[1:] += self.source_floor * self._tail
        return out

    def v_values(self):
        return self.D + self.vbar_values()

    def v_at(self, j, r):
        out = self.D + self.sg.synthesize(self.coeffs[j], r)
        if self.lifted and j > 0:
            out = out + self.source_floor * lifting_tail(self.sg, r)
        return out

    def vbar_field(self, j):
        # the lifting tail is below 1e-4 in size; norms use the mode part
        return self.sg.spectral_field(self.coeffs[j], label="vbar")


def weighted_l5(sg, times, values):
    """t^{3/10} ||values(t)||_{L^5} along a trace of quadrature-point samples."""
    return np.asarray(times) ** L5_WEIGHT * lebesgue_from_samples(values, sg.w_dx, 5.0)


def solve_auxiliary(prob, nt=160, tol=1e-10, max_sweeps=60, sg=None, times=None,
                    first=None, max_halvings=4):
    """Picard iteration for vbar(t) = e^{t Lap} vbar0 + (1/2) int e^{(t-s)Lap}(vbar + D)^3 ds.

    Distance between sweeps is sup_t t^{3/10} ||.||_{L^5}.  The first time
    cell uses the source at the first positive node, since v0^3 is not
    integrable.  When sweeps stall or contract by more than 1/2, T is halved
    and the solve repeated (recorded in ``budget``).
    """
    if sg is None:
        sg = DiskSemigroup(prob.v0.rho)
    vbar0 = shifted_initial(prob.v0)
    a0 = sg.project(vbar0)
    T = prob.T
    for attempt in range(max_halvings + 1):
        tt = default_times(T, nt, first if first is not None else T * 1e-8) \
            if times is None else np.asarray(times, dtype=float)
        duh = DuhamelOperator(sg, tt)
        lin = np.exp(-np.outer(tt, sg.eigenvalues)) * a0
        A = lin.copy()
        G = np.zeros_like(A)
        dists, kappas = [], []
        ok = False
        for sweep in range(max_sweeps):
            V = prob.D + A[1:] @ sg.psi
            G[1:] = sg.project_samples(0.5 * V ** 3)
            A_new = lin + duh(G, singular_start=True)
            diff = (A_new - A) @ sg.psi
            d = float(np.max(weighted_l5(sg, tt, diff)))
            dists.append(d)
            if len(dists) > 1 and dists[-2] > 0:
                kappas.append(d / dists[-2])
            A = A_new
            if d <= tol:
                ok = True
                break
            if len(kappas) >= 3 and min(kappas[-3:]) > 0.5:
                break
        if ok and (not kappas or max(kappas[1:] or kappas) <= 0.5):
            break
        if times is not None or attempt == max_halvings:
            raise NoConvergence(f"auxiliary Picard stalled at T = {T:g} (d = {dists[-1]:.3e})",
                                sweeps=len(dists), history=dists)
        T *= 0.5
    vals = A @ sg.psi
    wl5 = weighted_l5(sg, tt, vals)
    res = AuxiliaryResult(tt, A, sg, prob.D, dists, kappas, wl5)
    prob.delta = float(np.max(wl5[1:]))
    res.budget = {"T": T, "halvings": attempt, "delta": prob.delta,
                  "kappa_max": max(kappas) if kappas else 0.0,
                  "kappa_budget": 0.5, "q": prob.q}
    return res


def lorentz_monitor(res, q_list=(2.5, 3.0, 5.0), indices=None):
    """sup over the chosen trace times of ||vbar(t)||_{L^{2,q}} for each q."""
    idx = range(1, res.times.size) if indices is None else indices
    out = {}
    for q in q_list:
        best = 0.0
        for j in idx:
            best = max(best, lorentz_norm(res.vbar_field(j), 2.0, q))
        out[q] = best
    return out


def initial_lorentz_norms(v0, q_list=(2.0, 2.5, 3.0, 5.0)):
    """||v0||_{L^{2,q}}; inf flags divergence (expected at q = 2 for u0 = u_tilde)."""
    return {q: lorentz_norm(v0, 2.0, q) for q in q_list}


# -- weighted L^5 decay ------------------------------------------------------

def fit_log_decay(L, values, powers=(0.5, 1.5)):
    """Least squares values ~ a + sum_k b_k L^{-p_k} in L = log(1/t); returns (a, coeffs).

    Takes L rather than t so that times far below the double range can be used.
    """
    L = np.asarray(L, dtype=float)
    X = np.column_stack([np.ones_like(L)] + [L ** -p for p in powers])
    coef, *_ = np.linalg.lstsq(X, np.asarray(values, dtype=float), rcond=None)
    return float(coef[0]), coef[1:]


def dyadic_weighted_l5(res, vbar0, k_min=None, k_max=None):
    """Weighted L^5 monitor at dyadic times 2^{-k} inside the resolved window.

    Returns (L, full, linear) with L = log(1/t).  The full monitor interpolates
    trace samples linearly in log t; the linear part e^{t Lap} vbar0 is exact
    at each dyadic time.
    """
    sg = res.sg
    t_res = 30.0 / sg.eigenvalues[-1]
    t = res.times
    k_lo = int(np.ceil(-np.log2(t[-1]))) if k_min is None else k_min
    k_hi = int(np.floor(-np.log2(t_res))) if k_max is None else k_max
    ks = np.arange(k_lo, k_hi + 1)
    ts = 2.0 ** -ks.astype(float)
    vals = res.vbar_values()
    a0 = sg.project(vbar0)
    lt = np.log(t[1:])
    full, lin = [], []
    for tk in ts:
        j = int(np.clip(np.searchsorted(lt, np.log(tk)), 1, lt.size - 1))
        th = (np.log(tk) - lt[j - 1]) / (lt[j] - lt[j - 1])
        row = (1 - th) * vals[j] + th * vals[j + 1]
        full.append(tk ** L5_WEIGHT * lebesgue_from_samples(row, sg.w_dx, 5.0))
        lrow = (a0 * np.exp(-sg.eigenvalues * tk)) @ sg.psi
        lin.append(tk ** L5_WEIGHT * lebesgue_from_samples(lrow, sg.w_dx, 5.0))
    return -np.log(ts), np.array(full), np.array(lin)


def _panel_rule(edges, m):
    x, w = gauss_legendre(m)
    a, b = edges[:-1], edges[1:]
    pts = (0.5 * (b - a)[:, None] * (x + 1) + a[:, None]).ravel()
    return pts, (0.5 * (b - a)[:, None] * w).ravel()


def selfsimilar_linear_l5(L, r_star=np.exp(-1.25), Y=400.0, nl=DEFAULT):
    """t^{3/10} ||e^{t Lap} vbar0||_{L^5} for the data u_tilde, at t = e^{-L}.

    Free-space heat flow in the variable y = r / sqrt(t), where vbar0 is
    sqrt(2) / (r sqrt(1 - 2 log r)) - D on r < r_star.  The Dirichlet boundary
    changes the answer by O(exp(-(rho - r_star)^2 / 4t)), so this is the
    small-t oracle; it needs no time resolution and works at any L.  Uses
    the radial kernel (1/2) exp(-(y - s)^2/4) I0e(y s / 2) s ds.
    """
    D = boundary_value(nl)
    log_sqrt_t = -0.5 * L
    sig_star = np.exp(np.log(r_star) - log_sqrt_t) if L < 1400 else np.inf
    top = min(sig_star, Y + 60.0)
    se = np.unique(np.concatenate([np.geomspace(1e-14, 1.0, 60),
                                   np.linspace(1.0, top, int(top) + 2)]))
    se = se[se <= top]
    s, ws = _panel_rule(se, 12)
    dsq = D * np.exp(log_sqrt_t)
    g = np.sqrt(2.0) / (s * np.sqrt(1.0 + L - 2.0 * np.log(s))) - dsq
    ye = np.unique(np.concatenate([[0.0], np.geomspace(1e-6, 1.0, 20),
                                   np.linspace(1.0, Y, int(Y) + 1)]))
    y, wy = _panel_rule(ye, 8)
    gs = g * s * ws
    W = np.empty_like(y)
    for i in range(0, y.size, 256):
        yy = y[i:i + 256, None]
        W[i:i + 256] = (0.5 * np.exp(-(yy - s) ** 2 / 4.0) * i0e(yy * s / 2.0)) @ gs
    return float(np.sum(np.abs(W) ** 5 * 2.0 * np.pi * y * wy) ** 0.2)


@dataclass
class L5Decay:
    window_L: np.ndarray
    window_full: np.ndarray
    window_linear: np.ndarray
    window_oracle: np.ndarray
    ratio_fit: np.ndarray              # full/linear - 1 ~ e0 + c1/L + c2/L^2
    deep_L: np.ndarray
    deep_linear: np.ndarray
    deep_full: np.ndarray
    limit: float
    limit_linear: float

    @property
    def oracle_agreement(self):
        return float(np.max(np.abs(self.window_linear / self.window_oracle - 1.0)))


def weighted_l5_limit(res, vbar0, deep_k=2 ** np.arange(6, 15), powers=(0.5, 1.5, 2.5)):
    """Extrapolated lim_{t->0} t^{3/10} ||vbar(t)||_{L^5} on dyadic times.

    In the resolved window the full monitor is split as linear * (1 + eps);
    the linear factor is checked against the self-similar oracle there and
    evaluated by it at t = 2^{-k} for the ``deep_k``; eps is fitted as
    e0 + c1/L + c2/L^2 (constant term kept, so only boundedness is assumed).
    The limit is the intercept of a + sum b_p L^{-p} over the deep values.
    """
    L, full, lin = dyadic_weighted_l5(res, vbar0)
    oracle = np.array([selfsimilar_linear_l5(x) for x in L])
    eps = full / lin - 1.0
    X = np.column_stack([np.ones_like(L), 1.0 / L, L ** -2.0])
    cf, *_ = np.linalg.lstsq(X, eps, rcond=None)
    Ld = np.asarray(deep_k, dtype=float) * np.log(2.0)
    dl = np.array([selfsimilar_linear_l5(x) for x in Ld])
    df = dl * (1.0 + cf[0] + cf[1] / Ld + cf[2] / Ld ** 2)
    a_full, _ = fit_log_decay(Ld, df, powers)
    a_lin, _ = fit_log_decay(Ld, dl, powers)
    return L5Decay(L, full, lin, oracle, cf, Ld, dl, df, a_full, a_lin)


# -- supersolution residual ----------------------------------------------------

def fd_weights(x0, xs, order):
    """Finite-difference weights for the ``order``-th derivative at x0 (Fornberg)."""
    xs = np.asarray(xs, dtype=float)
    n = xs.size
    c = np.zeros((n, order + 1))
    c1, c4 = 1.0, xs[0] - x0
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, order)
        c2, c5 = 1.0, c4
        c4 = xs[i] - x0
        for j in range(i):
            c3 = xs[i] - xs[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, order]


_D1 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_D2 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0


@dataclass
class ResidualReport:
    times: np.ndarray
    radii: np.ndarray
    residual: np.ndarray            # u_t - Lap u - f(u), shape (nt, nr)
    scale: np.ndarray               # |u_t| + |Lap u| + f(u)
    identity: np.ndarray            # 4 f v^-4 |v_r|^2 (3/2 - f'F) from the same stencils
    error_estimate: np.ndarray      # |R(h) - R(2h)|

    def worst_relative(self):
        return float(np.min(self.residual / self.scale))


def supersolution_residual(res, radii=None, indices=None, h_factor=0.02, nl=DEFAULT,
                           ubar=None):
    """u_t - Lap u - f(u) for ubar = F^{-1}(v^{-2}) by fourth-order differences.

    Space: centred five-point stencils with step h = h_factor sqrt(t), using
    evenness at r = 0.  Time: five consecutive trace nodes.  The error estimate
    compares the residual at steps h and 2h.  ``ubar`` may replace the map
    v -> F^{-1}(v^{-2}) (used for synthetic checks).
    """
    t = res.times
    if radii is None:
        radii = np.concatenate([[0.0], np.linspace(0.0, res.sg.rho, 61)[1:-1]])
    radii = np.asarray(radii, dtype=float)
    t_res = 30.0 / res.sg.eigenvalues[-1]
    if indices is None:
        indices = [j for j in range(3, t.size - 2) if t[j - 2] >= t_res]
    to_u = (lambda v: inverse_transform_values(v, nl)) if ubar is None else ubar
    out_r, out_s, out_i, out_e = [], [], [], []
    for j in indices:
        rows = {}
        for hmul in (1.0, 2.0):
            h = hmul * h_factor * np.sqrt(t[j])
            offs = np.arange(-2, 3) * h
            pts = np.abs(radii[:, None] + offs[None, :])          # even extension
            v = res.v_at(j, pts.ravel()).reshape(pts.shape)
            u = to_u(v)
            u_rr = u @ _D2 / h ** 2
            u_r = u @ _D1 / h
            v_r = v @ _D1 / h
            lap = np.where(radii > 0, u_rr + u_r / np.where(radii > 0, radii, 1.0), 2.0 * u_rr)
            rows[hmul] = (lap, u[:, 2], v[:, 2], v_r)
        lap, u0, v0, v_r = rows[1.0]
        w = fd_weights(t[j], t[j - 2:j + 3], 1)
        ut = np.zeros_like(radii)
        for k, tk in enumerate(range(j - 2, j + 3)):
            ut += w[k] * to_u(res.v_at(tk, radii))
        fu = nl.f(u0)
        R = ut - lap - fu
        R2 = ut - rows[2.0][0] - fu
        out_r.append(R)
        out_s.append(np.abs(ut) + np.abs(lap) + np.abs(fu))
        out_i.append(4.0 * fu * v0 ** -4 * v_r ** 2 * (1.5 - nl.fprime_F(u0)))
        out_e.append(np.abs(R - R2))
    return ResidualReport(t[indices], radii, np.array(out_r), np.array(out_s),
                          np.array(out_i), np.array(out_e))


def g_bound_constant(res, nl=DEFAULT):
    """max of f(ubar) / v^2 over the trace (the constant in g(s) <= C/s)."""
    t_res = 30.0 / res.sg.eigenvalues[-1]
    v = res.v_values()[res.times >= t_res]
    u = inverse_transform_values(v, nl)
    return float(np.max(nl.f(u) / v ** 2))


# -- Perron iteration ------------------------------------------------------

@dataclass
class PerronResult:
    trace: EvolutionTrace
    ubar: np.ndarray                 # supersolution at quadrature points per time
    iterations: int
    gaps: List[float]
    monotonicity_violation: float
    ceiling_violation: float
    mu2: float
    window: np.ndarray               # mask of times inside the checked window


def perron_iterate(u0, aux, max_iters=200, tol=1e-9, gamma=None, sol=None,
                   slack=1e-8, nl=DEFAULT, check_from=None):
    """Monotone iteration u^{k+1} = e^{t Lap} u0 + Duhamel f(u^k) below ubar.

    Uses the auxiliary solve's time grid and semigroup.  Ordering checks
    u^k <= u^{k+1} <= ubar hold on t >= ``check_from`` (default: the
    spectral resolution time); below it the truncated basis cannot represent
    either object pointwise.
    """
    sg, times = aux.sg, aux.times
    if sol is None:
        from .stationary import default_solution
        sol = default_solution()
    gamma = sol.gamma if gamma is None else gamma
    if check_from is None:
        check_from = 30.0 / sg.eigenvalues[-1]
    window = times >= check_from
    window[0] = False
    ubar = np.full((times.size, sg.points.size), np.inf)
    ubar[window] = inverse_transform_values(aux.v_values()[window], nl)
    duh = DuhamelOperator(sg, times)
    a0 = sg.project(u0)
    lin = np.exp(-np.outer(times, sg.eigenvalues)) * a0
    G = np.zeros_like(lin)
    if u0.inner is not None and u0.inner.is_unbounded():
        singular = True
    else:
        singular = False
        G[0] = sg.project(u0.map(lambda u: nl.f(u), nl.log_f_of_log))
    A = lin.copy()
    U = A @ sg.psi
    gaps = []
    worst_mono, worst_ceiling = 0.0, 0.0
    for k in range(max_iters):
        top = float(np.max(np.abs(U[1:])))
        if top > 26.0:
            raise CeilingViolation(f"Perron iterate reached {top:.3g}; f would overflow")
        G[1:] = sg.project_samples(nl.f(U[1:]))
        A_new = lin + duh(G, singular_start=singular)
        U_new = A_new @ sg.psi
        step = U_new - U
        mono = float(np.max(-step[window])) if np.any(window) else 0.0
        ceil = float(np.max(U_new[window] - ubar[window])) if np.any(window) else 0.0
        worst_mono = max(worst_mono, mono)
        worst_ceiling = max(worst_ceiling, ceil)
        if mono > slack:
            raise MonotonicityViolation(f"iterate {k + 1} decreased by {mono:.3e}")
        if ceil > slack:
            raise CeilingViolation(f"iterate {k + 1} above the supersolution by {ceil:.3e}")
        gap = float(np.max(np.abs(step[1:])))
        gaps.append(gap)
        A, U = A_new, U_new
        if gap <= tol:
            break
    else:
        raise NoConvergence(f"Perron gap {gaps[-1]:.3e} above {tol:.1e}", sweeps=max_iters,
                            history=gaps)
    lux = luxemburg_from_samples(U[1:], sg.w_dx, gamma, nl)
    sup_t = max(float(np.max(lux)), 1.0)
    mu2 = next(1.0 + 2.0 ** -m for m in range(30, -1, -1) if 1.0 + 2.0 ** -m >= sup_t)
    states = [u0] + [sg.spectral_field(A[j], label="perron") for j in range(1, times.size)]
    tr = EvolutionTrace(times, states, gaps, [], [], A, lin, sg)
    tr.info.update({"luxemburg": np.concatenate([[np.nan], lux]),
                    "sup": np.concatenate([[np.inf], np.max(np.abs(U[1:]), axis=1)]),
                    "centre": A @ sg.psi0})
    return PerronResult(tr, ubar, len(gaps), gaps, worst_mono, worst_ceiling, mu2, window)


def convergence_bound_check(perron, aux):
    """(lhs, rhs_shape): ||u(t) - e^{t Lap}u0||_inf and (sup_{s<=t} s^{3/10}||v(s)||_5)^2."""
    tr = perron.trace
    diff = (tr.coeffs - tr.linear_coeffs) @ tr.sg.psi
    lhs = np.max(np.abs(diff), axis=1)
    v_w = aux.times ** L5_WEIGHT * lebesgue_from_samples(aux.v_values(), aux.sg.w_dx, 5.0)
    rhs = np.maximum.accumulate(np.where(aux.times > 0, v_w, 0.0)) ** 2
    return lhs[1:], rhs[1:]


def stationary_gap(perron, sol, frac=0.5, r_min=1e-12):
    """sup over r in [r_min, frac r*] of |u_tilde - u(t)|, per trace time."""
    from .stationary import eval_u_tilde

    sg = perron.trace.sg
    r = np.geomspace(r_min, frac * sol.r_star, 80)
    ut = eval_u_tilde(sol, r)
    vals = perron.trace.coeffs[1:] @ sg.mode_values(r)
    return np.max(np.abs(ut[None, :] - vals), axis=1)


def export_pipeline_csv(outdir, aux, perron, v0, radii=None, budget=None):
    """One CSV per stage (v0, v(t), ubar(t), u(t)) plus a budget summary."""
    os.makedirs(outdir, exist_ok=True)
    radii = np.linspace(1e-4 * aux.sg.rho, aux.sg.rho, 120) if radii is None else radii
    with open(os.path.join(outdir, "v0.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["r", "v0"])
        for r, v in zip(radii, v0(radii)):
            w.writerow([f"{r:.10e}", f"{v:.12e}"])
    psi = aux.sg.mode_values(radii)
    stages = {"v.csv": np.vstack([aux.v_at(j, radii) for j in range(aux.times.size)])}
    t_res = 30.0 / aux.sg.eigenvalues[-1]
    # ubar only where the spectral v is resolved (v >= D is guaranteed there)
    stages["ubar.csv"] = np.vstack([inverse_transform_values(row) if t >= t_res
                                    else np.full(radii.size, np.nan)
                                    for t, row in zip(aux.times, stages["v.csv"])])
    stages["u.csv"] = perron.trace.coeffs @ psi
    for name, arr in stages.items():
        with open(os.path.join(outdir, name), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "r", name[:-4]])
            for t, row in zip(aux.times[1:], arr[1:]):
                for r, v in zip(radii, row):
                    w.writerow([f"{t:.10e}", f"{r:.10e}", f"{v:.12e}"])
    with open(os.path.join(outdir, "budget.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["quantity", "value"])
        for k, v in sorted((budget or aux.budget).items()):
            w.writerow([k, v])
    return outdir
