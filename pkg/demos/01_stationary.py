"""The singular steady state: shooting, the gauge constant, and its residuals.

The inner branch sqrt(-2 log r) is exact; the outer branch is found by
shooting from r* = e^{-5/4} until v first vanishes.  That zero is the disk
radius rho.
"""
import numpy as np

from critheat.spaces import luxemburg_norm
from critheat.stationary import (R_STAR, default_solution, distributional_residual,
                                 eval_u_tilde, ode_residual, shoot_outer_implicit,
                                 standard_test_functions)

sol = default_solution()
print(f"matching radius r*   = {R_STAR:.12f}")
print(f"rho (RK4)            = {sol.rho:.13f}")
print(f"rho (Radau)          = {shoot_outer_implicit():.13f}")
print(f"gamma                = {sol.gamma:.13f}")

r = np.geomspace(1e-12, sol.rho * 0.999, 7)
print("\n      r        u_tilde     residual/(1+f)")
for ri, ui, res in zip(r, eval_u_tilde(sol, r), ode_residual(sol, r)):
    print(f"{ri:10.3e}  {ui:10.5f}  {abs(res) / (1 + sol.nl.f(ui)):10.2e}")

# the field is its own unit ball boundary in the gauge it defines
print(f"\nLuxemburg norm of u_tilde = {luxemburg_norm(sol.as_field(), sol.gamma):.12f}")

print("\nweak residual against radial test functions")
for fn in standard_test_functions(sol):
    a, b = fn.sup_norms(sol.rho)
    print(f"  {fn.label:>22s}: {distributional_residual(sol, fn):+.2e}  (scale {a + b:.2e})")
