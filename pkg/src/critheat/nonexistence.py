"""Instantaneous blow-up certificates for data mu * u_tilde.

A nonnegative solution that stays finite forces ||e^{t Lap} u0||_inf <=
F^{-1}(t) for small t.  For u0 = mu u_tilde the centre value of the linear
flow behaves like mu sqrt(-log t), while F^{-1}(t) ~ sqrt(-log t), so mu > 1
violates the bound at small enough t.

Centre values come from mode synthesis inside the spectral envelope.  Below
it they are bracketed by two kernel comparisons on B_rho:

    H(d, t) Gauss(y, t) <= G_rho(0, y, t) <= Gauss(y, t),   |y| <= rho - d,

so the free-space Gaussian average gives an upper bound and the H-weighted
average over a shrinking disk gives a lower bound.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .errors import VacuousBound
from .fields import gauss_legendre
from .nonlinearity import DEFAULT
from .semigroup import DiskSemigroup, H_factor

SPECTRAL_ENVELOPE = 1e-4


def default_time_grid(t_max=1e-2, t_min=1e-30, per_decade=2):
    """Decreasing logarithmic grid from t_max to t_min."""
    n = int(round(np.log10(t_max / t_min) * per_decade)) + 1
    return np.geomspace(t_max, t_min, n)


def relaxed_bound(t):
    """sqrt(-log t) + 1, the simple majorant of F^{-1}(t) for small t."""
    return np.sqrt(-np.log(np.asarray(t, dtype=float))) + 1.0


def _radial_rule(z_max, m=12):
    """Gauss points and weights on (0, z_max), geometric near 0 and unit panels beyond 1."""
    z_max = float(z_max)
    edges = np.geomspace(1e-30, min(1.0, z_max), 60)
    if z_max > 1.0:
        edges = np.concatenate([edges, np.linspace(1.0, z_max, int(np.ceil(z_max - 1.0)) + 1)[1:]])
    edges = np.concatenate([[0.0], edges])
    x, w = gauss_legendre(m)
    a, b = edges[:-1], edges[1:]
    pts = (0.5 * (b - a)[:, None] * (x + 1) + a[:, None]).ravel()
    return pts, (0.5 * (b - a)[:, None] * w).ravel()


def _gauss_density(z):
    # radial density of exp(-|z|^2/4)/(4 pi) dz in |z|
    return 0.5 * z * np.exp(-0.25 * z * z)


def gaussian_average(sol, t, mu=1.0, z_cut=40.0):
    """int_{B_rho} Gauss(y, t) mu u_tilde(y) dy; an upper bound for the centre value.

    In z = y / sqrt(t); the inner branch is sqrt(-log t - 2 log z).  Weights
    beyond |z| = z_cut are below exp(-400) and dropped.
    """
    L = -np.log(t)
    z_star = sol.r_star / np.sqrt(t)
    z_rho = sol.rho / np.sqrt(t)
    zi, wi = _radial_rule(min(z_star, z_cut))
    val = np.sum(wi * _gauss_density(zi) * np.sqrt(L - 2.0 * np.log(zi)))
    if z_star < z_cut:
        x, w = gauss_legendre(24)
        hi = min(z_rho, z_cut)
        edges = np.linspace(z_star, hi, 40)
        a, b = edges[:-1], edges[1:]
        z = (0.5 * (b - a)[:, None] * (x + 1) + a[:, None]).ravel()
        wz = (0.5 * (b - a)[:, None] * w).ravel()
        val += np.sum(wz * _gauss_density(z) * sol.outer_value(z * np.sqrt(t)))
    return float(mu * val)


def analytic_lower_bound(mu, t, a=0.1, sol=None, d=None, r=None):
    """H(d, t) int_{|z| <= r t^{-a}} Gauss(z) mu sqrt(-log t - 2 log|z|) dz.

    A certified lower bound on ||e^{t Lap}(mu u_tilde)||_inf (value at 0).
    VacuousBound when H(d, t) <= 0.
    """
    if not 0.0 < a < 0.5:
        raise ValueError("a must lie in (0, 1/2)")
    if sol is None:
        from .stationary import default_solution
        sol = default_solution()
    d = sol.rho - sol.r_star if d is None else d
    r = sol.r_star if r is None else r
    h = float(H_factor(d, t))
    if h <= 0:
        raise VacuousBound(f"H(d, t) = {h:.3g} <= 0 at t = {t:g}")
    L = -np.log(t)
    R = r * np.exp(a * L)
    z, w = _radial_rule(min(R, 40.0))
    val = np.sum(w * _gauss_density(z) * np.sqrt(L - 2.0 * np.log(z)))
    return h * mu * float(val)


def gaussian_mass(t, a=0.1, r=np.exp(-1.25)):
    """int_{|z| <= r t^{-a}} exp(-|z|^2/4)/(4 pi) dz = 1 - exp(-R^2/4)."""
    R = r * np.asarray(t, dtype=float) ** (-a)
    return -np.expm1(-0.25 * R * R)


def closed_lower_bound(mu, t, a=0.1, sol=None):
    """mu H(d,t) sqrt(1 - 2a) sqrt(-log t) times the inner Gaussian mass (for t small)."""
    if sol is None:
        from .stationary import default_solution
        sol = default_solution()
    d = sol.rho - sol.r_star
    R_log = np.log(sol.r_star) - a * np.log(t)
    # -2 log|z| >= -2 R_log on the disk, so sqrt(-log t - 2 R_log) bounds below
    return float(mu * H_factor(d, t) * np.sqrt(max(-np.log(t) - 2.0 * R_log, 0.0))
                 * gaussian_mass(t, a, sol.r_star))


@dataclass
class Certificate:
    mu: float
    t_witness: Optional[float]
    lhs: Optional[float]
    rhs: Optional[float]
    margin: Optional[float]
    params: dict
    times: np.ndarray = field(default_factory=lambda: np.zeros(0))
    lhs_lower: np.ndarray = field(default_factory=lambda: np.zeros(0))
    lhs_upper: np.ndarray = field(default_factory=lambda: np.zeros(0))
    rhs_all: np.ndarray = field(default_factory=lambda: np.zeros(0))
    source: List[str] = field(default_factory=list)

    def __post_init__(self):
        if self.t_witness is not None and not self.margin > 0:
            raise ValueError("a witness needs a positive margin")

    @property
    def margins(self):
        """Certified margins lower - F^{-1}(t) on the grid."""
        return self.lhs_lower - self.rhs_all

    @property
    def certified_no_violation(self):
        """True when every upper bound stays below F^{-1}(t)."""
        return bool(np.all(self.lhs_upper <= self.rhs_all))

    @property
    def verdict(self):
        if self.t_witness is not None:
            return f"mu={self.mu:g}: violation at t={self.t_witness:.3e}, margin {self.margin:.4g}"
        if self.certified_no_violation:
            return f"mu={self.mu:g}: no violation on the grid"
        return f"mu={self.mu:g}: inconclusive on the grid"


def centre_values(sg, sol, times, mu=1.0):
    """e^{t Lap}(mu u_tilde)(0) by mode synthesis, plus the max over the mesh."""
    a0 = sg.project(sol.as_field())
    decay = np.exp(-np.outer(times, sg.eigenvalues)) * a0
    centre = mu * decay @ sg.psi0
    mesh_max = mu * np.max(decay @ sg.psi_grid, axis=1)
    return centre, mesh_max


A_GRID = (0.1, 0.2, 0.3, 0.4, 0.45)


def linear_bound_certificate(mu, t_grid=None, sg=None, sol=None, a=A_GRID,
                             envelope=SPECTRAL_ENVELOPE, nl=DEFAULT):
    """Compare ||e^{t Lap}(mu u_tilde)||_inf with F^{-1}(t) along a decreasing grid.

    Returns the first (largest) t whose certified lower bound exceeds
    F^{-1}(t).  Inside the envelope both bounds are the spectral value.
    Below it the lower bound is the largest analytic_lower_bound over the
    cutoff exponents ``a`` (each one is a valid bound).
    """
    if mu <= 0:
        raise ValueError("mu must be positive")
    if sol is None:
        from .stationary import default_solution
        sol = default_solution()
    t_grid = default_time_grid() if t_grid is None else np.asarray(t_grid, dtype=float)
    if np.any(np.diff(t_grid) >= 0):
        raise ValueError("t_grid must decrease")
    spectral = t_grid >= envelope
    lower = np.empty_like(t_grid)
    upper = np.empty_like(t_grid)
    source = []
    scan_ok = True
    if np.any(spectral):
        if sg is None:
            sg = DiskSemigroup(sol.rho)
        c, mx = centre_values(sg, sol, t_grid[spectral], mu)
        scan_ok = bool(np.all(mx <= c * (1 + 1e-10)))
        lower[spectral] = c
        upper[spectral] = c
        source += ["spectral"] * int(np.sum(spectral))
    a_list = np.atleast_1d(a).astype(float)
    a_used = []
    for i in np.nonzero(~spectral)[0]:
        t = t_grid[i]
        bounds = [analytic_lower_bound(mu, t, ak, sol) for ak in a_list]
        k = int(np.argmax(bounds))
        lower[i] = bounds[k]
        a_used.append(float(a_list[k]))
        upper[i] = gaussian_average(sol, t, mu)
        source.append("kernel-bounds")
    rhs = nl.F_inv(t_grid)
    viol = np.nonzero(lower > rhs)[0]
    params = {"a": [float(x) for x in a_list], "a_used": a_used, "envelope": envelope, "t_max": float(t_grid[0]),
              "t_min": float(t_grid[-1]), "n": int(t_grid.size), "max_at_origin": scan_ok}
    if viol.size:
        i = int(viol[0])
        return Certificate(mu, float(t_grid[i]), float(lower[i]), float(rhs[i]),
                           float(lower[i] - rhs[i]), params, t_grid, lower, upper, rhs, source)
    return Certificate(mu, None, None, None, None, params, t_grid, lower, upper, rhs, source)


def check_relaxation(t_grid, nl=DEFAULT):
    """max over the grid of F^{-1}(t) - (sqrt(-log t) + 1); should be <= 0."""
    t = np.asarray(t_grid, dtype=float)
    return float(np.max(nl.F_inv(t) - relaxed_bound(t)))


def export_certificates_csv(certs, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["mu", "t", "lhs_lower", "lhs_upper", "rhs", "margin", "source"])
        for c in certs:
            for t, lo, hi, r, s in zip(c.times, c.lhs_lower, c.lhs_upper, c.rhs_all, c.source):
                w.writerow([f"{c.mu:g}", f"{t:.6e}", f"{lo:.12e}", f"{hi:.12e}", f"{r:.12e}",
                            f"{lo - r:.12e}", s])
        for c in certs:
            w.writerow(["# verdict", c.verdict])
    return path
