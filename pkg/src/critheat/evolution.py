"""Mild solutions of u_t = Lap u + f(u) on B_rho with u = 0 on the boundary.

Picard iteration works on mode coefficients at a set of time nodes.  The
Duhamel integral is done by product integration: the nonlinear term's
coefficients are linear in s on each time cell and the heat factor
exp(-lam (t - s)) is integrated exactly, mode by mode.

The implicit-explicit stepper is an independent finite-volume code:
backward Euler diffusion, explicit reaction, cell averages as unknowns.
"""
from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy.linalg import solve_banded

from .errors import BlowupDetected, NoConvergence
from .fields import RadialField, RadialGrid, gauss_on_cells, inner_disk_integral
from .nonlinearity import DEFAULT
from .semigroup import DiskSemigroup
from .spaces import (NormReport, lebesgue_norm, luxemburg_from_samples, luxemburg_norm,
                     mu_ratio)

MU1_GRID = (0.6, 0.75, 0.9)


def choose_mu1(mu, grid=MU1_GRID, fallback_gap=0.05):
    """Smallest grid value in (max(mu, 1/sqrt 2), 1); else halfway-ish to 1."""
    floor = max(mu, 1.0 / np.sqrt(2.0))
    for m in grid:
        if floor < m < 1.0:
            return m
    return min(floor + fallback_gap, 0.5 * (floor + 1.0))


def _phi12(z):
    """phi1(z) = (e^z - 1)/z and phi2(z) = (e^z - 1 - z)/z^2, stable near 0."""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < 1e-3
    zs = np.where(small, 1.0, z)
    em1 = np.expm1(zs)
    p1 = np.where(small, 1 + z / 2 + z * z / 6 + z ** 3 / 24, em1 / zs)
    p2 = np.where(small, 0.5 + z / 6 + z * z / 24 + z ** 3 / 120, (em1 - zs) / (zs * zs))
    return p1, p2


def default_times(T, nt, first=None):
    """0 followed by nt geometric nodes from ``first`` (default T*1e-6) to T.

    Nodes far below the spectral resolution time are kept on purpose: they
    let the first Duhamel cells follow the fast decay of the high modes.
    """
    first = T * 1e-6 if first is None else first
    return np.concatenate([[0.0], np.geomspace(first, T, nt)])


class DuhamelOperator:
    """Product-integration weights for int_0^{t_j} e^{(t_j - s)Lap} G(s) ds.

    With G linear on each [t_i, t_{i+1}], mode n picks up
    w_far * G_i + w_near * G_{i+1}, where (x = lam h, a = t_j - t_{i+1})

        w_near = e^{-lam a} h phi2(-x),   w_far = e^{-lam a} h (phi1(-x) - phi2(-x)).
    """

    def __init__(self, sg, times, cache_limit=4e6):
        self.sg = sg
        self.times = np.asarray(times, dtype=float)
        if self.times[0] != 0.0 or np.any(np.diff(self.times) <= 0):
            raise ValueError("times must start at 0 and increase strictly")
        n = self.times.size
        self._cache = None
        if n * (n - 1) * sg.modes <= cache_limit:
            self._cache = [self._weights(j) for j in range(n)]

    def _weights(self, j):
        if j == 0:
            return None, None
        t = self.times
        lam = self.sg.eigenvalues
        a = t[j] - t[1:j + 1]
        h = t[1:j + 1] - t[:j]
        decay = np.exp(-np.outer(a, lam))
        p1, p2 = _phi12(-np.outer(h, lam))
        return decay * h[:, None] * (p1 - p2), decay * h[:, None] * p2

    def __call__(self, G, singular_start=False):
        """G: (n, N) coefficients of the source at the time nodes.

        ``singular_start`` drops G[0] (e.g. a non-integrable source at t = 0)
        and uses G[1] as a constant on the first cell.
        """
        G = np.asarray(G, dtype=float)
        n = self.times.size
        out = np.zeros_like(G)
        for j in range(1, n):
            far, near = self._cache[j] if self._cache is not None else self._weights(j)
            acc = np.sum(near * G[1:j + 1], axis=0) + np.sum(far[1:] * G[1:j], axis=0)
            acc += far[0] * (G[1] if singular_start else G[0])
            out[j] = acc
        return out


@dataclass
class EvolutionTrace:
    times: np.ndarray
    states: List[RadialField]
    iterates: List[float] = field(default_factory=list)
    reports: List[NormReport] = field(default_factory=list)
    contraction: List[float] = field(default_factory=list)
    coeffs: Optional[np.ndarray] = None
    linear_coeffs: Optional[np.ndarray] = None
    sg: Optional[DiskSemigroup] = None
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("trace times must increase strictly")
        if len(self.states) != self.times.size:
            raise ValueError("one state per time is required")
        if self.reports and len(self.reports) != self.times.size:
            raise ValueError("reports must align with states")

    def sup_norms(self):
        return np.array([r.sup_norm for r in self.reports])

    def luxemburg_norms(self):
        return np.array([r.luxemburg_gamma for r in self.reports])

    def mesh_values(self):
        """(n, K) values at the semigroup quadrature points (spectral traces)."""
        return self.coeffs @ self.sg.psi


def _reports(sg, A, u0, gamma, sol, nl):
    times_vals = A @ sg.psi
    lux = luxemburg_from_samples(times_vals, sg.w_dx, gamma, nl)
    centre = A @ sg.psi0
    reports = []
    for j in range(A.shape[0]):
        if j == 0:
            lx = luxemburg_norm(u0, gamma, nl)
            sup = u0.sup()
            mu = mu_ratio(u0, sol) if sol is not None else float("nan")
        else:
            lx = float(lux[j])
            sup = float(max(np.max(np.abs(times_vals[j])), abs(centre[j])))
            mu = mu_ratio(sg.spectral_field(A[j]), sol) if sol is not None else float("nan")
        reports.append(NormReport(lx, sup, [], mu))
    return reports


def picard_solve(u0, T, nt=64, max_sweeps=60, tol=1e-10, sg=None, gamma=None, sol=None,
                 times=None, nl=DEFAULT, first=None, reports=True):
    """Picard iteration of the Duhamel formula on time nodes in [0, T].

    Returns an EvolutionTrace whose states are spectral fields (the t = 0
    state is u0 itself).  Raises NoConvergence when ``max_sweeps`` sweeps do
    not bring the sup over times of the Luxemburg distance below ``tol``.
    """
    if sol is None:
        from .stationary import default_solution
        sol = default_solution()
    gamma = sol.gamma if gamma is None else gamma
    if sg is None:
        sg = DiskSemigroup(sol.rho)
    times = default_times(T, nt, first) if times is None else np.asarray(times, dtype=float)
    duh = DuhamelOperator(sg, times)
    a0 = sg.project(u0)
    lin = np.exp(-np.outer(times, sg.eigenvalues)) * a0
    f_u0 = u0.map(lambda u: nl.f(u), nl.log_f_of_log, label="f(u0)")
    G = np.empty_like(lin)
    G[0] = sg.project(f_u0)
    A = lin.copy()
    dists, kappas = [], []
    converged = False
    for sweep in range(max_sweeps):
        U = A[1:] @ sg.psi
        G[1:] = sg.project_samples(nl.f(U))
        A_new = lin + duh(G)
        diff = (A_new[1:] - A[1:]) @ sg.psi
        d = float(np.max(luxemburg_from_samples(diff, sg.w_dx, gamma, nl)))
        dists.append(d)
        if len(dists) > 1 and dists[-2] > 0:
            kappas.append(d / dists[-2])
        A = A_new
        if d <= tol:
            converged = True
            break
    if not converged:
        raise NoConvergence(f"Picard distance {dists[-1]:.3e} above {tol:.1e} after "
                            f"{max_sweeps} sweeps", sweeps=max_sweeps, history=dists)
    states = [u0] + [sg.spectral_field(A[j]) for j in range(1, times.size)]
    reps = _reports(sg, A, u0, gamma, sol, nl) if reports else []
    trace = EvolutionTrace(times, states, dists, reps, kappas, A, lin, sg)
    if reps:
        flagged = [t for t, r in zip(times, reps) if r.mu_ratio > 1 - 1e-6]
        trace.info["monitor_flag_time"] = flagged[0] if flagged else None
    return trace


# -- finite-volume IMEX -----------------------------------------------------

def cell_averages(field, edges, m=8):
    """Exact averages of a RadialField over the annular cells of ``edges`` (edges[0] = 0)."""
    edges = np.asarray(edges, dtype=float)
    areas = np.pi * (edges[1:] ** 2 - edges[:-1] ** 2)
    pts, wts = gauss_on_cells(edges, m)
    vals = field(pts) * 2 * np.pi * pts * wts
    sums = vals.reshape(edges.size - 1, m).sum(axis=1)
    if field.inner is not None and edges[1] <= field.inner.r0:
        log_2pi = np.log(2 * np.pi)
        sums[0] = inner_disk_integral(field.inner, lambda t, lu: log_2pi - 0.5 * t + lu,
                                      r_hi=edges[1], sign=field.inner.sign)
    return sums / areas


def _fv_matrix(edges):
    """Banded form of the finite-volume radial Laplacian, Dirichlet at rho."""
    rc = 0.5 * (edges[1:] + edges[:-1])
    h = np.diff(edges)
    n = rc.size
    vol = 0.5 * (edges[1:] ** 2 - edges[:-1] ** 2)        # area / (2 pi)
    lower = np.zeros(n)
    upper = np.zeros(n)
    diag = np.zeros(n)
    for i in range(n):
        if i > 0:
            c = edges[i] / (rc[i] - rc[i - 1])
            lower[i] = c / vol[i]
            diag[i] -= c / vol[i]
        if i < n - 1:
            c = edges[i + 1] / (rc[i + 1] - rc[i])
            upper[i] = c / vol[i]
            diag[i] -= c / vol[i]
        else:
            c = edges[n] / (edges[n] - rc[i])              # boundary value 0 at rho
            diag[i] -= c / vol[i]
    return lower, diag, upper, rc, h


def imex_solve(u0, T, dt, cells=400, ceiling=10.0, out_times=None, reaction=True,
               nl=DEFAULT, rho=None):
    """Backward-Euler diffusion, explicit reaction, on uniform annular cells.

    Raises BlowupDetected (with the partial trace) when the sup norm passes
    ``ceiling``.
    """
    rho = u0.rho if rho is None else rho
    edges = np.linspace(0.0, rho, cells + 1)
    lower, diag, upper, rc, _ = _fv_matrix(edges)
    ab = np.zeros((3, cells))
    ab[0, 1:] = -dt * upper[:-1]
    ab[1] = 1.0 - dt * diag
    ab[2, :-1] = -dt * lower[1:]
    u = cell_averages(u0, edges)
    nsteps = int(np.ceil(T / dt - 1e-9))
    dt = T / nsteps
    ab[0, 1:] = -dt * upper[:-1]
    ab[1] = 1.0 - dt * diag
    ab[2, :-1] = -dt * lower[1:]
    if out_times is None:
        out_times = np.linspace(0.0, T, 11)
    out_times = np.asarray(out_times)
    grid = RadialGrid(np.concatenate([rc, [rho]]), rho)
    area_w = np.pi * (edges[1:] ** 2 - edges[:-1] ** 2)

    def snap(vals):
        return RadialField(grid, np.concatenate([vals, [0.0]]), label="imex")

    rec_t, rec_u = [0.0], [snap(u)]
    k_out = 1 if out_times[0] == 0.0 else 0
    t = 0.0
    for step in range(1, nsteps + 1):
        top = float(np.max(np.abs(u)))
        if top > ceiling:
            partial = EvolutionTrace(np.array(rec_t), rec_u)
            partial.info["cell_weights"] = area_w
            raise BlowupDetected(f"sup norm {top:.3g} above ceiling {ceiling:g} at t = {t:.3e}",
                                 t_star=t, trace=partial)
        rhs = u + dt * nl.f(u) if reaction else u
        u = solve_banded((1, 1), ab, rhs)
        t = step * dt
        while k_out < out_times.size and t >= out_times[k_out] - 1e-12 * T:
            rec_t.append(t)
            rec_u.append(snap(u))
            k_out += 1
    trace = EvolutionTrace(np.array(rec_t), rec_u)
    trace.info["cell_weights"] = area_w
    trace.info["centers"] = rc
    trace.info["dt"] = dt
    return trace


def blowup_time(u0, T, dt, cells, ceiling=10.0, nl=DEFAULT):
    """First time the IMEX sup norm crosses the ceiling (None if it never does)."""
    try:
        imex_solve(u0, T, dt, cells, ceiling, out_times=[T], nl=nl)
    except BlowupDetected as exc:
        return exc.t_star
    return None


# -- monitors ---------------------------------------------------------------

def verify_nonlinear_bound(trace, mu1, nl=DEFAULT):
    """sup_t ||f(u(t))||_{L^{1/mu1^2}} over the trace."""
    if not 1.0 / np.sqrt(2.0) < mu1 < 1.0:
        raise ValueError("mu1 must be in (1/sqrt 2, 1)")
    p = 1.0 / mu1 ** 2
    best = 0.0
    for st in trace.states:
        if st.inner is None and not np.any(st.values) and st.spectral is None:
            continue
        fu = st.map(lambda u: nl.f(u), nl.log_f_of_log)
        best = max(best, lebesgue_norm(fu, p))
    return best


def convergence_to_data(trace, u0, gamma, k=None, nl=DEFAULT):
    """||u(t_j) - e^{t_j Lap} u0||_{f,gamma} for t_j > 0 (first k of them)."""
    if trace.coeffs is not None:
        diff = (trace.coeffs[1:] - trace.linear_coeffs[1:]) @ trace.sg.psi
        d = luxemburg_from_samples(diff, trace.sg.w_dx, gamma, nl)
    else:
        sg = trace.info.get("sg")
        if sg is None:
            raise ValueError("a non-spectral trace needs info['sg'] for the linear flow")
        rc = trace.info["centers"]
        w = trace.info["cell_weights"]
        a0 = sg.project(u0)
        d = []
        for t, st in zip(trace.times[1:], trace.states[1:]):
            lin = (a0 * np.exp(-sg.eigenvalues * t)) @ sg.mode_values(rc)
            d.append(luxemburg_from_samples(st.values[:-1] - lin, w, gamma, nl))
        d = np.array(d)
    return d if k is None else d[:k]


def sup_gap_at(trace_a, trace_b_imex, t_index=-1):
    """Sup-norm gap between a spectral trace and an IMEX trace at cell centres."""
    rc = trace_b_imex.info["centers"]
    spec = trace_a.states[t_index](rc)
    return float(np.max(np.abs(spec - trace_b_imex.states[t_index].values[:-1])))


def export_trace_csv(trace, path_long, path_norms=None, radii=None, manifest=None):
    """Long-format (t, r, u) CSV, optional NormReport CSV and a manifest next to it."""
    from .spaces import export_reports_csv

    with open(path_long, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "r", "u"])
        for t, st in zip(trace.times, trace.states):
            rr = st.grid.nodes if radii is None else radii
            vals = st(rr)
            for r, v in zip(rr, vals):
                w.writerow([f"{t:.10e}", f"{r:.10e}", f"{v:.12e}"])
    if path_norms is not None and trace.reports:
        export_reports_csv(trace.times, trace.reports, path_norms)
    if manifest is not None:
        mpath = os.path.join(os.path.dirname(os.path.abspath(path_long)), "manifest.json")
        with open(mpath, "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
    return path_long
