import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from critheat.errors import DomainError, NoZeroFound
from critheat.nonlinearity import ALPHA, BETA
from critheat.spaces import luxemburg_norm
from critheat.stationary import (GAMMA_REF, INNER_GAMMA, R_STAR, REF_TOL, RHO_REF,
                                 RadialTestFunction, compute_gamma, convergence_order,
                                 distributional_residual, eval_u_tilde, export_profile_csv,
                                 inner_gamma_quadrature, ode_residual, outer_gamma_flux,
                                 outer_gamma_gauss, shoot_outer, shoot_outer_implicit,
                                 standard_test_functions)


def test_matching_data(sol):
    p = sol.profile
    assert p.v[0] == pytest.approx(1.581139, abs=1e-6)
    assert p.dv[0] == pytest.approx(-2.2074867121415, abs=1e-12)
    assert p.dv[0] == pytest.approx(-np.exp(1.25) / BETA, rel=1e-15)


def test_rho_regression_and_profile_shape(sol):
    assert sol.rho > R_STAR
    assert abs(sol.rho - RHO_REF) <= REF_TOL
    p = sol.profile
    assert np.all(np.diff(p.v) < 0)
    assert np.all(p.v[:-1] > 0)
    assert abs(p.v[-1]) <= 1e-12


def test_two_integrators_agree(sol):
    assert abs(shoot_outer_implicit() - sol.rho) <= 1e-6


def test_fourth_order_convergence():
    order, rhos = convergence_order()
    assert order >= 3.5
    e1, e2 = abs(rhos[0] - rhos[1]), abs(rhos[1] - rhos[2])
    assert e1 <= 16 * e2 * 1.5


def test_energy_decreasing(sol):
    e = sol.energy()
    assert np.max(np.diff(e)) <= 1e-8


def test_no_zero_raises():
    with pytest.raises(NoZeroFound):
        shoot_outer(step=1e-2, r_max=1.0)


def test_eval_points(sol):
    assert eval_u_tilde(sol, np.exp(-2.0)) == 2.0
    assert eval_u_tilde(sol, R_STAR) == pytest.approx(BETA, rel=1e-15)
    assert eval_u_tilde(sol, R_STAR * (1 + 1e-12)) == pytest.approx(BETA, abs=1e-9)
    assert abs(eval_u_tilde(sol, sol.rho)) <= 1e-12
    with pytest.raises(DomainError):
        eval_u_tilde(sol, 0.0)


def test_inner_residual(sol):
    r = np.geomspace(1e-12, R_STAR, 100)
    u = eval_u_tilde(sol, r)
    res = ode_residual(sol, r)
    assert np.max(np.abs(res) / (1 + sol.nl.f(u))) <= 1e-10
    assert abs(ode_residual(sol, np.exp(-2.0))) <= 1e-10


def test_outer_residual(sol):
    r = np.array([0.5 * (R_STAR + sol.rho), 0.99 * sol.rho])
    v = eval_u_tilde(sol, r)
    assert np.all(v[1:] < BETA)
    assert np.all(np.abs(ode_residual(sol, r)) <= 1e-6 * (1 + sol.nl.f(v)))


def test_gamma_routes(sol):
    inner = inner_gamma_quadrature()
    assert INNER_GAMMA == pytest.approx(3.97384, abs=1e-5)
    assert abs(inner - INNER_GAMMA) <= 1e-8
    outer = sol.gamma - INNER_GAMMA
    assert 0 < outer <= 2 * np.pi * ALPHA * BETA**2 * sol.rho**2 / 2
    assert abs(outer_gamma_gauss(sol) - outer) <= 1e-8
    assert abs(outer_gamma_flux(sol) - outer) <= 1e-8
    assert abs(compute_gamma(sol) - GAMMA_REF) <= REF_TOL


def test_luxemburg_self_consistency(sol, utilde):
    assert abs(luxemburg_norm(utilde, sol.gamma) - 1) <= 1e-6


def test_zero_test_function(sol):
    assert distributional_residual(sol, RadialTestFunction.zero()) == 0.0


@pytest.mark.parametrize("k", range(6))
def test_distributional_residual_refines(sol, k):
    fn = standard_test_functions(sol)[k]
    a, b = fn.sup_norms(sol.rho)
    tol = 1e-4 * (a + b)
    errs = [abs(distributional_residual(sol, fn, panels=n)) for n in (8, 32, 128)]
    final = abs(distributional_residual(sol, fn))
    assert final <= tol
    assert errs[-1] <= max(errs[0], tol)
    assert errs[-1] <= tol


@settings(max_examples=25, deadline=None)
@given(st.floats(min_value=0.15, max_value=1.4))
def test_bump_laplacian_matches_finite_difference(R):
    fn = RadialTestFunction.bump(R)
    r = np.linspace(0.05, 0.95, 7) * R
    h = 1e-4 * R
    fd = (fn.phi(r + h) - 2 * fn.phi(r) + fn.phi(r - h)) / h**2 \
        + (fn.phi(r + h) - fn.phi(r - h)) / (2 * h * r)
    assert np.allclose(fn.lap(r), fd, rtol=1e-5, atol=1e-5 * np.max(np.abs(fd)))


def test_profile_csv(sol, tmp_path):
    path = export_profile_csv(sol, tmp_path / "p.csv")
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    assert data.shape[1] == 3
    assert np.all(np.diff(data[:, 0]) > 0)
