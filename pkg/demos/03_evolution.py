"""Below the threshold: Picard converges for mu < 1, and IMEX agrees.

At mu = 1.5 the explicit reaction blows up at once.
"""
import warnings

import numpy as np

from critheat.evolution import blowup_time, imex_solve, picard_solve, sup_gap_at
from critheat.semigroup import DiskSemigroup
from critheat.stationary import default_solution

warnings.simplefilter("ignore")
sol = default_solution()
sg = DiskSemigroup(sol.rho)
ut = sol.as_field()
T = 0.01

for mu in (0.5, 0.9):
    tr = picard_solve(ut * mu, T, sg=sg, sol=sol)
    gap = sup_gap_at(tr, imex_solve(ut * mu, T, 2.5e-6, 400, out_times=[T]))
    print(f"mu = {mu}: {len(tr.iterates)} sweeps, kappa = {max(tr.contraction):.3f}, "
          f"sup lux = {np.max(tr.luxemburg_norms()):.6f}, |u(T)|_inf = {tr.sup_norms()[-1]:.4f}, "
          f"IMEX gap = {gap:.1e}")

for cells, dt in ((200, 1e-5), (400, 2.5e-6)):
    print(f"mu = 1.5, {cells} cells: blow-up flagged at t = {blowup_time(ut * 1.5, 0.05, dt, cells):.2e}")
