"""Batch driver: ``critheat <command> [--config PATH] [--out DIR] [...]``.

Commands write CSV files into the output directory and print a short
summary.  Configuration is a flat key=value file; command-line flags
override it.  Errors exit with status 1 and a JSON error record on stderr.
"""
from __future__ import annotations

import argparse
import csv
import glob
import json
import os
import sys
from dataclasses import asdict, dataclass, field
from typing import List

import numpy as np

COMMANDS = ("shoot", "norms", "semigroup-checks", "evolve", "perron", "nonexist",
            "trichotomy", "report")


@dataclass
class ExperimentConfig:
    command: str = ""
    mu: List[float] = field(default_factory=lambda: [0.5, 0.9, 1.0, 1.1, 1.5])
    T: float = 0.01
    nt: int = 64
    modes: int = 256
    grid: int = 400
    tol: float = 1e-10
    q: List[float] = field(default_factory=lambda: [2.5, 3.0, 5.0])
    seed: int = 0
    out: str = "critheat-out"

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if any(m <= 0 for m in self.mu):
            raise ValueError("mu values must be positive")
        if self.T <= 0 or self.nt < 2 or self.modes < 8 or self.grid < 10:
            raise ValueError("T, nt, modes and grid must be positive and not tiny")


def _floats(text):
    return [float(x) for x in str(text).replace(",", " ").split()]


_PARSERS = {"mu": _floats, "q": _floats, "T": float, "nt": int, "modes": int, "grid": int,
            "tol": float, "seed": int, "out": str}


def read_config(path):
    """Parse key=value lines; '#' starts a comment."""
    out = {}
    with open(path) as fh:
        for n, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{n}: expected key=value")
            key, val = (s.strip() for s in line.split("=", 1))
            if key not in _PARSERS:
                raise ValueError(f"{path}:{n}: unknown key {key!r}")
            out[key] = _PARSERS[key](val)
    return out


def build_parser():
    p = argparse.ArgumentParser(prog="critheat", description=__doc__.split("\n")[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="key=value configuration file")
    p.add_argument("--out", help="output directory")
    p.add_argument("--mu", help="comma separated multipliers of u_tilde")
    p.add_argument("--modes", type=int, help="number of radial Dirichlet modes")
    p.add_argument("--grid", type=int, help="cells for the finite-volume cross-check")
    p.add_argument("--tol", type=float, help="iteration tolerance")
    p.add_argument("--seed", type=int, help="seed for random field corpora")
    return p


def make_config(args):
    vals = read_config(args.config) if args.config else {}
    for key in ("out", "modes", "grid", "tol", "seed"):
        v = getattr(args, key)
        if v is not None:
            vals[key] = v
    if args.mu is not None:
        vals["mu"] = _floats(args.mu)
    return ExperimentConfig(command=args.command, **vals)


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([f"{x:.12e}" if isinstance(x, float) else x for x in row])
    return path


# -- commands ---------------------------------------------------------------

def cmd_shoot(cfg, ctx):
    from .stationary import (GAMMA_REF, REF_TOL, RHO_REF, export_profile_csv,
                             shoot_outer_implicit)

    sol = ctx.solution()
    rho_implicit = shoot_outer_implicit()
    export_profile_csv(sol, os.path.join(cfg.out, "profile.csv"))
    rows = [("rho", sol.rho, RHO_REF, abs(sol.rho - RHO_REF) <= REF_TOL),
            ("rho_implicit", rho_implicit, RHO_REF, abs(rho_implicit - RHO_REF) <= 1e-6),
            ("gamma", sol.gamma, GAMMA_REF, abs(sol.gamma - GAMMA_REF) <= REF_TOL)]
    _write_rows(os.path.join(cfg.out, "constants.csv"),
                ["name", "value", "reference", "within_tolerance"], rows)
    return [f"{n} = {v:.13f} (ref {r:.13f}) {'ok' if ok else 'MISMATCH'}" for n, v, r, ok in rows]


def cmd_norms(cfg, ctx):
    from .spaces import norm_report

    sol = ctx.solution()
    ut = sol.as_field()
    rows, lines = [], []
    for mu in cfg.mu:
        rep = norm_report(ut.scaled(mu), sol.gamma, sol, lorentz_pairs=[(2.0, q) for q in cfg.q])
        rows.append([mu, rep.luxemburg_gamma, rep.sup_norm, rep.mu_ratio]
                    + [v for _, _, v in rep.lorentz])
        lines.append(f"mu={mu:g}: luxemburg={rep.luxemburg_gamma:.10f} mu_ratio={rep.mu_ratio:.10f}")
    _write_rows(os.path.join(cfg.out, "norms.csv"),
                ["mu", "luxemburg_gamma", "sup_norm", "mu_ratio"]
                + [f"lorentz_2_{q:g}" for q in cfg.q], rows)
    return lines


def cmd_semigroup_checks(cfg, ctx):
    from .semigroup import (check_jensen, check_orlicz_contraction, export_kernel_csv,
                            kernel_lower_bound_check, random_fields)

    sol = ctx.solution()
    sg = ctx.semigroup()
    fields_ = random_fields(sol.rho, 20, cfg.seed)
    times = [1e-4, 1e-3, 1e-2, 1e-1, 1.0]
    rows = []
    worst = {"contraction": -np.inf, "jensen": -np.inf}
    for fld in fields_:
        for t in times:
            lhs, rhs = check_orlicz_contraction(sg, fld, t, sol.gamma)
            gap, scale = check_jensen(sg, fld, t, sol.nl.f, sol.nl.log_f_of_log)
            worst["contraction"] = max(worst["contraction"], lhs - rhs)
            worst["jensen"] = max(worst["jensen"], gap / scale)
            rows.append([fld.label, t, lhs, rhs, gap, scale])
    _write_rows(os.path.join(cfg.out, "semigroup_checks.csv"),
                ["field", "t", "orlicz_lhs", "orlicz_rhs", "jensen_gap", "jensen_scale"], rows)
    d = sol.rho - sol.r_star
    ys = np.linspace(0.0, sol.r_star, 41)
    kb = []
    for t in times[:3]:
        lhs, rhs = kernel_lower_bound_check(sg, ys, t, d)
        kb.append(float(np.min(lhs - rhs)))
    export_kernel_csv(sg, ys, times[:3], d, os.path.join(cfg.out, "kernel.csv"))
    return [f"orlicz contraction: max(lhs - rhs) = {worst['contraction']:.3e}",
            f"jensen: max gap / scale = {worst['jensen']:.3e}",
            f"kernel lower bound: min(lhs - rhs) = {min(kb):.3e}"]


def cmd_evolve(cfg, ctx):
    from .evolution import choose_mu1, export_trace_csv, picard_solve, verify_nonlinear_bound
    from .errors import NoConvergence

    sol = ctx.solution()
    sg = ctx.semigroup()
    ut = sol.as_field()
    lines = []
    for mu in cfg.mu:
        if mu >= 1.0:
            lines.append(f"mu={mu:g}: skipped (Picard is run for mu < 1)")
            continue
        try:
            tr = picard_solve(ut.scaled(mu), cfg.T, nt=cfg.nt, tol=cfg.tol, sg=sg, sol=sol)
        except NoConvergence as exc:
            lines.append(f"mu={mu:g}: {exc}")
            continue
        mu1 = choose_mu1(mu)
        sup_lux = float(np.max(tr.luxemburg_norms()))
        bound = verify_nonlinear_bound(tr, mu1)
        stem = os.path.join(cfg.out, f"evolve_mu{mu:g}")
        radii = np.linspace(0.0, sol.rho, 65)
        export_trace_csv(tr, stem + "_trace.csv", stem + "_norms.csv", radii=radii,
                         manifest=asdict(cfg))
        lines.append(f"mu={mu:g}: {len(tr.iterates)} sweeps, kappa_max="
                     f"{max(tr.contraction):.3g}, sup_t lux={sup_lux:.6f} <= mu1={mu1:g}, "
                     f"sup_t ||f(u)||_(1/mu1^2)={bound:.6g}")
    return lines


def _perron_pipeline(cfg, ctx):
    from .colehopf import (AuxiliaryProblem, perron_iterate, solve_auxiliary, transform_initial)

    if "perron" not in ctx.cache:
        sol = ctx.solution()
        sg = ctx.semigroup()
        v0 = transform_initial(sol.as_field())
        aux = solve_auxiliary(AuxiliaryProblem(v0, 2 * cfg.T), sg=sg)
        pr = perron_iterate(sol.as_field(), aux, sol=sol)
        ctx.cache["perron"] = (v0, aux, pr)
    return ctx.cache["perron"]


def cmd_perron(cfg, ctx):
    from .colehopf import export_pipeline_csv, supersolution_residual

    v0, aux, pr = _perron_pipeline(cfg, ctx)
    rep = supersolution_residual(aux)
    export_pipeline_csv(cfg.out, aux, pr, v0)
    centre = pr.trace.info["centre"]
    return [f"auxiliary: T={aux.budget['T']:g}, kappa_max={aux.budget['kappa_max']:.3g}",
            f"supersolution residual: min relative {rep.worst_relative():.3e}",
            f"Perron: {pr.iterations} iterations, monotonicity {pr.monotonicity_violation:.2e}, "
            f"ceiling {pr.ceiling_violation:.2e}, mu2={pr.mu2:.10g}",
            f"centre value at the smallest time {centre[1]:.6f} (finite)"]


def cmd_nonexist(cfg, ctx):
    from .nonexistence import export_certificates_csv, linear_bound_certificate

    sol = ctx.solution()
    certs = [linear_bound_certificate(mu, sg=ctx.semigroup(), sol=sol) for mu in cfg.mu]
    export_certificates_csv(certs, os.path.join(cfg.out, "certificates.csv"))
    return [c.verdict for c in certs]


def cmd_trichotomy(cfg, ctx):
    from .evolution import picard_solve
    from .errors import CritHeatError
    from .nonexistence import linear_bound_certificate

    sol = ctx.solution()
    sg = ctx.semigroup()
    ut = sol.as_field()
    rows = []
    for mu in cfg.mu:
        if mu < 1.0:
            try:
                tr = picard_solve(ut.scaled(mu), cfg.T, nt=cfg.nt, tol=cfg.tol, sg=sg, sol=sol,
                                  reports=False)
                verdict = "converged"
                detail = f"sweeps={len(tr.iterates)}"
            except CritHeatError as exc:
                verdict, detail = "not converged", str(exc)
            check = "evolution.picard_solve"
        elif mu == 1.0:
            _, _, pr = _perron_pipeline(cfg, ctx)
            finite = bool(np.all(np.isfinite(pr.trace.info["centre"][1:])))
            verdict = "non-unique pair produced" if finite else "perron failed"
            detail = f"centre(t_min)={pr.trace.info['centre'][1]:.4f}, u_tilde(0)=inf"
            check = "colehopf.perron_iterate + stationary"
        else:
            c = linear_bound_certificate(mu, sg=sg, sol=sol)
            verdict = "violation certificate" if c.t_witness is not None else "no certificate"
            detail = c.verdict
            check = "nonexistence.linear_bound_certificate"
        rows.append([f"{mu:g}", verdict, detail, check])
    _write_rows(os.path.join(cfg.out, "trichotomy.csv"), ["mu", "verdict", "detail", "check"], rows)
    return [f"mu={r[0]}: {r[1]}  [{r[3]}]" for r in rows]


def cmd_report(cfg, ctx):
    files = sorted(glob.glob(os.path.join(cfg.out, "*.csv")))
    rows = []
    for path in files:
        if os.path.basename(path) == "report.csv":
            continue
        with open(path) as fh:
            n = sum(1 for _ in fh) - 1
        rows.append([os.path.basename(path), n])
    _write_rows(os.path.join(cfg.out, "report.csv"), ["file", "rows"], rows)
    return [f"{name}: {n} rows" for name, n in rows] or ["no CSV files found"]


HANDLERS = {"shoot": cmd_shoot, "norms": cmd_norms, "semigroup-checks": cmd_semigroup_checks,
            "evolve": cmd_evolve, "perron": cmd_perron, "nonexist": cmd_nonexist,
            "trichotomy": cmd_trichotomy, "report": cmd_report}


class _Context:
    """Lazily built shared objects for one run."""

    def __init__(self, cfg):
        self.cfg = cfg
        self.cache = {}

    def solution(self):
        if "sol" not in self.cache:
            from .stationary import default_solution
            self.cache["sol"] = default_solution()
        return self.cache["sol"]

    def semigroup(self):
        if "sg" not in self.cache:
            from .semigroup import DiskSemigroup
            self.cache["sg"] = DiskSemigroup(self.solution().rho, modes=self.cfg.modes)
        return self.cache["sg"]


def main(argv=None):
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else argv
    if not argv:
        parser.print_usage(sys.stderr)
        return 2
    args = parser.parse_args(argv)
    try:
        cfg = make_config(args)
        os.makedirs(cfg.out, exist_ok=True)
        lines = HANDLERS[cfg.command](cfg, _Context(cfg))
    except Exception as exc:          # reported as a machine-readable record
        record = {"error": type(exc).__name__, "message": str(exc), "command": args.command}
        print(json.dumps(record), file=sys.stderr)
        return 1
    for line in lines:
        print(line)
    return 0


if __name__ == "__main__":
    sys.exit(main())
