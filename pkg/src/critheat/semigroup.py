"""Dirichlet heat semigroup on the disk B_rho, radial sector.

Eigenpairs of -Laplacian with u(rho) = 0 restricted to radial functions:

    phi_n(r) = J0(j_n r / rho) / (sqrt(pi) rho |J1(j_n)|),   lam_n = (j_n / rho)^2,

orthonormal in L^2(B_rho, dx).  Coefficients are taken with Gauss-Legendre
on a mesh that is geometric toward r = 0 and uniform (a fraction of the
shortest mode wavelength) further out.  The smallest disk r < r_min is
handled through the field's inner form when it has one.
"""
from __future__ import annotations

import csv
import warnings

import numpy as np

from .bessel import bessel_zeros, j0, j1
from .errors import VacuousBound
from .fields import RadialField, RadialGrid, gauss_on_cells, inner_disk_integral
from .nonlinearity import DEFAULT


class ModeUnderflow(UserWarning):
    """Estimated truncation tail of a mode expansion is above tolerance."""


def H_factor(d, t):
    """Kernel comparison factor 1 - e^{-d^2/t} (2 + 4 d^2/t)."""
    x = d * d / np.asarray(t, dtype=float)
    return 1.0 - np.exp(-x) * (2.0 + 4.0 * x)


def gaussian_kernel(r, t):
    """Whole-plane heat kernel exp(-r^2/4t) / (4 pi t)."""
    return np.exp(-np.asarray(r) ** 2 / (4.0 * t)) / (4.0 * np.pi * t)


class DiskSemigroup:
    """Spectral e^{t Laplacian} on B_rho with the first ``modes`` radial modes."""

    def __init__(self, rho, modes=256, r_min=None, gauss=8, geom_ratio=1.25,
                 cells_per_wavelength=3):
        self.rho = float(rho)
        self.modes = int(modes)
        self.zeros = bessel_zeros(self.modes)
        self.eigenvalues = (self.zeros / self.rho) ** 2
        self.norms = 1.0 / (np.sqrt(np.pi) * self.rho * np.abs(j1(self.zeros)))
        self.r_min = 1e-12 * self.rho if r_min is None else float(r_min)
        wavelength = 2.0 * np.pi * self.rho / self.zeros[-1]
        h_max = wavelength / cells_per_wavelength
        r_split = min(self.rho / 4.0, 4.0 * h_max)
        n_geom = int(np.ceil(np.log(r_split / self.r_min) / np.log(geom_ratio)))
        geo = np.geomspace(self.r_min, r_split, n_geom + 1)
        n_uni = int(np.ceil((self.rho - r_split) / h_max))
        uni = np.linspace(r_split, self.rho, n_uni + 1)[1:]
        self.edges = np.concatenate([[0.0], geo, uni])
        pts, wdr = gauss_on_cells(self.edges, gauss)
        self.points = pts
        self.w_dr = wdr
        self.w_dx = 2.0 * np.pi * pts * wdr
        self.center = pts < self.r_min            # Gauss points of the centre cell
        self.psi = self.mode_values(pts)          # (N, K)
        self.grid = RadialGrid(self.edges[1:], self.rho, graded=True)
        self.psi_grid = self.mode_values(self.grid.nodes)
        self.psi0 = self.norms.copy()             # phi_n(0)

    # -- modes ------------------------------------------------------------

    def mode_values(self, r):
        r = np.atleast_1d(np.asarray(r, dtype=float))
        return self.norms[:, None] * j0(np.outer(self.zeros, r) / self.rho)

    def mode_field(self, n=0):
        c = np.zeros(self.modes)
        c[n] = 1.0
        return self.spectral_field(c)

    def gram(self):
        return (self.psi * self.w_dx) @ self.psi.T

    # -- projection and synthesis ----------------------------------------

    def project(self, field):
        """Mode coefficients <u, phi_n> of a RadialField."""
        if field.spectral is not None and field.spectral[0] is self:
            return np.array(field.spectral[1], copy=True)
        vals = field(self.points)
        if field.inner is not None and self.r_min <= field.inner.r0:
            w = np.where(self.center, 0.0, self.w_dx)
            c = self.psi @ (w * vals)
            log_2pi = np.log(2 * np.pi)
            core = inner_disk_integral(field.inner, lambda t, lu: log_2pi - 0.5 * t + lu,
                                       r_hi=self.r_min, sign=field.inner.sign)
            return c + self.psi0 * core
        return self.psi @ (self.w_dx * vals)

    def project_samples(self, values):
        """Coefficients from values at the quadrature points (shape (..., K))."""
        return (np.asarray(values) * self.w_dx) @ self.psi.T

    def synthesize(self, coeffs, r=None):
        """Sum_n c_n phi_n(r); r=None gives the quadrature points."""
        if r is None:
            return np.asarray(coeffs) @ self.psi
        return np.asarray(coeffs) @ self.mode_values(r)

    def spectral_field(self, coeffs, label=""):
        coeffs = np.asarray(coeffs, dtype=float)
        vals = coeffs @ self.psi_grid
        sg = self
        return RadialField(self.grid, vals, func=lambda r: sg.synthesize(coeffs, r),
                           quad=(self.points, self.w_dr), label=label,
                           spectral=(self, coeffs))

    def tail_estimate(self, coeffs, t):
        """L^2 size of the modes beyond N, assuming coefficients stay at their last level."""
        if t <= 0:
            return np.inf
        k = max(4, self.modes // 10)
        level = np.sqrt(np.mean(np.asarray(coeffs)[-k:] ** 2))
        n = np.arange(self.modes + 1, 50 * self.modes + 1)
        lam = ((n - 0.25) * np.pi / self.rho) ** 2
        return float(level * np.sqrt(np.sum(np.exp(-2.0 * lam * t))))

    def apply(self, field, t, warn=True):
        """e^{t Laplacian} field as a spectral RadialField (t = 0: truncated projection)."""
        if t < 0:
            raise ValueError("t must be non-negative")
        c = self.project(field)
        out = c * np.exp(-self.eigenvalues * t)
        if warn and t > 0:
            norm2 = np.sqrt(np.sum(c * c))
            if norm2 > 0 and self.tail_estimate(c, t) > 1e-8 * norm2:
                warnings.warn(f"mode tail above 1e-8 relative at t = {t:g}", ModeUnderflow,
                              stacklevel=2)
        return self.spectral_field(out, label=f"e^(tD){field.label}")

    def kernel_at_origin(self, y, t):
        """G_rho(0, y, t) by mode synthesis."""
        decay = np.exp(-self.eigenvalues * t) * self.psi0
        return decay @ self.mode_values(y)


def apply_semigroup(sg, field, t):
    return sg.apply(field, t)


# -- property checks --------------------------------------------------------

def check_orlicz_contraction(sg, field, t, gamma, nl=DEFAULT):
    from .spaces import luxemburg_norm

    rhs = luxemburg_norm(field, gamma, nl)
    if rhs == 0.0:
        return 0.0, 0.0
    lhs = luxemburg_norm(sg.apply(field, t, warn=False), gamma, nl)
    return lhs, rhs


def check_jensen(sg, field, t, H, H_log=None):
    """max over grid nodes of H(e^{tD} phi) - e^{tD} H(phi), and the scale used."""
    left = H(sg.apply(field, t, warn=False).values)
    right = sg.apply(field.map(H, H_log), t, warn=False).values
    gap = float(np.max(left - right))
    scale = float(max(np.max(np.abs(right)), np.max(np.abs(left)), 1e-300))
    return gap, scale


def smoothing_ratio(sg, field, t, p, gamma=None, mode="orlicz", r=None, q=None, nl=DEFAULT):
    """Norm of e^{tD} phi over the smoothing rate times the norm of phi.

    mode="orlicz": ||e^{tD}phi||_{f,gamma} / (t^{-1/p} log(1/t + 1)^{-1/2} ||phi||_p)
    mode="lorentz": t^{1/p - 1/r} ||e^{tD}phi||_{L^{r,q}} / ||phi||_{L^{p,q}}
    """
    from .spaces import lebesgue_norm, lorentz_norm, luxemburg_norm

    out = sg.apply(field, t, warn=False)
    if mode == "orlicz":
        if not 1 <= p <= 2:
            raise ValueError("the Orlicz form needs 1 <= p <= 2")
        rate = t ** (-1.0 / p) * np.log(1.0 / t + 1.0) ** -0.5
        return luxemburg_norm(out, gamma, nl) / (rate * lebesgue_norm(field, p))
    if mode == "lorentz":
        if r is None or q is None or not 1 < p <= r:
            raise ValueError("the Lorentz form needs 1 < p <= r and q")
        return t ** (1.0 / p - 1.0 / r) * lorentz_norm(out, r, q) / lorentz_norm(field, p, q)
    raise ValueError(f"unknown mode {mode!r}")


def kernel_lower_bound_check(sg, y, t, d):
    """(G_rho(0, y, t), H(d, t) exp(-y^2/4t)/(4 pi t)); VacuousBound when H <= 0."""
    h = H_factor(d, t)
    if np.any(h <= 0):
        raise VacuousBound(f"H(d, t) = {float(np.min(h)):.3g} <= 0")
    return sg.kernel_at_origin(y, t), h * gaussian_kernel(y, t)


def export_kernel_csv(sg, ys, ts, d, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["y", "t", "G_spectral", "G_lower_bound"])
        for t in ts:
            g = sg.kernel_at_origin(ys, t)
            lb = H_factor(d, t) * gaussian_kernel(np.asarray(ys), t)
            for row in zip(ys, np.full(len(ys), t), g, lb):
                w.writerow([f"{x:.12e}" for x in row])
    return path


def random_fields(rho, n, seed=0, nonneg=True):
    """Seeded corpus of smooth bounded radial fields vanishing at rho.

    Each is a random positive mix of Gaussians exp(-(r - c)^2 / w^2) times
    the cutoff (1 - (r/rho)^2), evaluated exactly through ``func``.
    """
    rng = np.random.default_rng(seed)
    grid = RadialGrid.uniform(rho, 400)
    out = []
    for k in range(n):
        m = int(rng.integers(1, 4))
        amp = rng.uniform(0.2, 2.0, m)
        if not nonneg:
            amp *= rng.choice([-1.0, 1.0], m)
        centre = rng.uniform(0.0, 0.8 * rho, m)
        width = rng.uniform(0.05, 0.5, m) * rho

        def func(r, amp=amp, centre=centre, width=width):
            r = np.asarray(r, dtype=float)
            bumps = np.exp(-((r[..., None] - centre) / width) ** 2) @ amp
            return bumps * np.clip(1.0 - (r / rho) ** 2, 0.0, None)

        fld = RadialField(grid, func(grid.nodes), func=func,
                          quad=gauss_on_cells(np.concatenate([[0.0], grid.nodes]), 8),
                          label=f"random{k}")
        out.append(fld)
    return out
