"""The three regimes side by side.

mu < 1 gives existence, mu = 1 gives two solutions, and mu > 1 admits no
solution at all.  The last case is certified by the linear bound: a
solution would need |e^{tL} mu u_tilde|_inf <= F^{-1}(t).
"""
import warnings

from critheat.nonexistence import default_time_grid, linear_bound_certificate
from critheat.semigroup import DiskSemigroup
from critheat.stationary import default_solution

warnings.simplefilter("ignore")
sol = default_solution()
sg = DiskSemigroup(sol.rho)
grid = default_time_grid()
for mu in (0.5, 1.0, 1.1, 1.5):
    print(linear_bound_certificate(mu, t_grid=grid, sg=sg, sol=sol).verdict)
