import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import j0, j1

from critheat.colehopf import (D_CONST, AuxiliaryProblem, AuxiliaryResult,
                               convergence_bound_check, export_pipeline_csv, fd_weights,
                               fit_log_decay, g_bound_constant, initial_lorentz_norms,
                               inverse_transform_values, lifting_tail, lorentz_monitor,
                               perron_iterate, selfsimilar_linear_l5, shifted_initial,
                               solve_auxiliary, stationary_gap, supersolution_residual,
                               transform_initial, weighted_l5_limit)
from critheat.errors import DomainError
from critheat.fields import RadialField, RadialGrid, constant_field
from critheat.nonlinearity import BETA, DEFAULT as nl
from critheat.stationary import eval_u_tilde


def window(res):
    return res.times >= 30.0 / res.sg.eigenvalues[-1]


def test_boundary_constant():
    assert D_CONST == pytest.approx(nl.F(BETA) ** -0.5, rel=1e-15)
    assert D_CONST == pytest.approx(2.638451273, rel=1e-9)
    with pytest.raises(ValueError):
        AuxiliaryProblem(constant_field(RadialGrid.uniform(1.0, 10), 3.0), 0.1, D=2.6)


def test_transform_of_zero(sol):
    grid = RadialGrid.uniform(sol.rho, 50)
    v0 = transform_initial(constant_field(grid, 0.0))
    assert np.all(v0.values == D_CONST)


def test_v0_bound_inside_r_star(sol, v0):
    r = np.geomspace(1e-12, sol.r_star * (1 - 1e-9), 200)
    bound = np.sqrt(2.0) / (r * np.sqrt(1 - 2 * np.log(r)))
    assert np.all(v0(r) <= bound * (1 + 1e-12))
    assert np.min(v0.values) >= D_CONST * (1 - 1e-15)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 6.0), st.floats(0.0, 3.0))
def test_transform_monotone(a, b):
    grid = RadialGrid.uniform(1.0, 4)
    lo = transform_initial(constant_field(grid, a)).values[0]
    hi = transform_initial(constant_field(grid, a + b)).values[0]
    assert hi >= lo


def test_inverse_transform(sol, v0, utilde):
    assert inverse_transform_values(np.full(3, D_CONST)) == pytest.approx(np.full(3, BETA), rel=1e-12)
    with pytest.raises(DomainError):
        inverse_transform_values(np.array([0.99 * D_CONST]))
    r = np.geomspace(1e-10, sol.rho * 0.999, 300)
    ub0 = inverse_transform_values(v0(r))
    assert np.all(ub0 >= eval_u_tilde(sol, r) - 1e-10)
    v = np.linspace(D_CONST, 30.0, 100)
    assert np.all(np.diff(inverse_transform_values(v)) > 0)
    assert np.all(inverse_transform_values(v) >= BETA)


def test_shifted_initial_vanishes_on_the_boundary(v0, sol):
    vb = shifted_initial(v0)
    assert vb(sol.rho) == pytest.approx(0.0, abs=1e-12)
    assert np.min(vb.values) >= 0


def test_lifting_tail(sg):
    # psi_N + tail = (rho^2 - r^2)/4 exactly; the tail is small away from r = rho
    assert np.max(np.abs(lifting_tail(sg))) < 1e-3
    r = np.linspace(0, sg.rho, 9)
    ones = 2 * np.pi * sg.rho**2 * j1(sg.zeros) / sg.zeros * sg.norms
    psi_n = (ones / sg.eigenvalues) @ sg.mode_values(r)
    assert np.allclose(psi_n + lifting_tail(sg, r), 0.25 * (sg.rho**2 - r**2), atol=1e-14)


def test_l2q_of_v0(v0):
    norms = initial_lorentz_norms(v0)
    assert norms[2.0] == np.inf
    for q in (2.5, 3.0, 5.0):
        assert np.isfinite(norms[q])
    assert norms[2.5] > norms[3.0] > norms[5.0]


def test_constant_data_rises(sg, sol):
    grid = RadialGrid.uniform(sol.rho, 100)
    res = solve_auxiliary(AuxiliaryProblem(constant_field(grid, D_CONST), 0.01), nt=40, sg=sg)
    w = window(res)
    v = res.v_values()
    assert np.min(v[w]) >= D_CONST - 1e-10
    centre = res.v_at(int(np.argmax(w)), np.array([0.0, 0.5]))
    assert np.all(centre > D_CONST)


def test_auxiliary_solve(aux):
    assert aux.distances[-1] <= 1e-10
    assert aux.budget["kappa_max"] <= aux.budget["kappa_budget"] == 0.5
    assert np.isfinite(aux.budget["delta"])
    assert np.min(aux.v_values()[window(aux)]) >= D_CONST * (1 - 1e-12)


def test_lorentz_monitor_finite(aux):
    mon = lorentz_monitor(aux, indices=[5, 80, aux.times.size - 1])
    assert all(np.isfinite(v) and v > 0 for v in mon.values())


def test_fit_log_decay_recovers_synthetic():
    L = np.linspace(10, 60, 30)
    vals = 0.2 + 3.0 * L**-0.5 - 1.0 * L**-1.5
    a, b = fit_log_decay(L, vals)
    assert a == pytest.approx(0.2, abs=1e-12) and np.allclose(b, [3.0, -1.0])


def test_selfsimilar_limit_decreases():
    vals = [selfsimilar_linear_l5(L) for L in (20.0, 80.0, 320.0)]
    assert np.all(np.diff(vals) < 0)
    # the monitor behaves like 1.26 sqrt(2/L)
    assert vals[-1] * np.sqrt(320.0 / 2) == pytest.approx(1.26, rel=0.05)


def test_weighted_l5_limit_vanishes(aux, v0):
    dec = weighted_l5_limit(aux, shifted_initial(v0))
    # the resolved-window linear monitor matches the self-similar quadrature
    assert dec.oracle_agreement <= 1e-5
    assert np.all(np.diff(dec.deep_linear) < 0)
    assert abs(dec.limit) <= 1e-3 and abs(dec.limit_linear) <= 1e-3
    # the nonlinear correction stays bounded across the window
    assert np.all(np.abs(dec.window_full / dec.window_linear - 1) < 1)


@pytest.mark.parametrize("x0,order,poly", [(0.3, 1, 3), (0.0, 2, 4), (1.1, 1, 4)])
def test_fd_weights_exact_on_polynomials(x0, order, poly):
    xs = np.array([-0.2, 0.0, 0.15, 0.3, 0.5]) + x0
    w = fd_weights(x0, xs, order)
    for k in range(poly + 1):
        exact = 0.0 if k < order else np.prod(np.arange(k, k - order, -1)) * x0 ** (k - order)
        assert np.dot(w, xs**k) == pytest.approx(exact, abs=1e-10)


def test_residual_synthetic_oracle(sg, sol):
    # time-constant v = D + c phi_1 gives a closed-form residual
    times = np.concatenate([[0.0], np.geomspace(1e-3, 1e-1, 40)])
    c = np.zeros(sg.modes)
    c[0] = 0.8
    res = AuxiliaryResult(times, np.tile(c, (times.size, 1)), sg, D_CONST, lifted=False)
    rep = supersolution_residual(res)
    k = sg.zeros[0] / sol.rho
    n = sg.norms[0]
    r = rep.radii
    v = D_CONST + 0.8 * n * j0(k * r)
    vr = -0.8 * n * k * j1(k * r)
    lap = -k * k * (v - D_CONST)
    u = inverse_transform_values(v)
    f = nl.f(u)
    bracket = 4 * f * v**-4 * vr**2 * (1.5 - nl.fprime_F(u))
    sym = 2 * f * v**-3 * (-lap - 0.5 * v**3) + bracket
    assert np.max(np.abs(rep.residual - sym) / np.abs(sym)) <= 1e-6
    assert np.max(np.abs(rep.identity - bracket)) <= 1e-6 * np.max(np.abs(bracket))


def test_supersolution_residual(aux):
    rep = supersolution_residual(aux)
    assert rep.residual.size > 0
    assert rep.worst_relative() >= -1e-4
    assert np.all(rep.identity >= 0)
    assert np.max(rep.error_estimate / rep.scale) < 1e-4


@settings(max_examples=50, deadline=None)
@given(st.floats(float(BETA), 25.0))
def test_bracket_at_least_half(s):
    assert 1.5 - nl.fprime_F(s) >= 0.5


def test_g_bound(aux):
    C = g_bound_constant(aux)
    assert 0 < C <= 1
    t = np.geomspace(1e-12, nl.F(BETA), 200)
    # C is f(ubar)/v^2 = t g(t) at t = v^-2 over the values the trace reaches
    top = np.max(t * nl.g(t))
    assert C <= top * (1 + 1e-12) and top <= 0.443


def test_perron_regular_branch(perron, aux, sol):
    tr = perron.trace
    assert perron.monotonicity_violation <= 1e-8
    assert perron.ceiling_violation <= 1e-8
    centre = tr.info["centre"]
    assert np.all(np.isfinite(centre[1:])) and np.all(np.isfinite(tr.info["sup"][1:]))
    assert perron.mu2 > 1
    assert np.nanmax(tr.info["luxemburg"][perron.window]) <= perron.mu2
    assert np.all(np.isinf(perron.ubar[~perron.window]))


def test_perron_distinct_from_stationary(perron, sol):
    gap = stationary_gap(perron, sol)
    assert gap[gap.size // 2] > 0 and np.min(gap) > 0


def test_perron_zero_data(aux, sol):
    grid = RadialGrid.uniform(sol.rho, 100)
    pr = perron_iterate(RadialField(grid, np.zeros(100)), aux, sol=sol)
    assert np.all(pr.trace.coeffs == 0)
    lhs, rhs = convergence_bound_check(pr, aux)
    assert np.all(lhs == 0)


def test_convergence_bound(perron, aux):
    lhs, rhs = convergence_bound_check(perron, aux)
    w = window(aux)[1:]
    assert np.all(np.diff(lhs[w]) > 0)
    assert np.all(np.diff(rhs) >= 0)
    assert np.max(lhs[w] / rhs[w]) < 1.0
    assert lhs[0] < 1e-5 and rhs[0] < 1e-2 * rhs[-1]


def test_pipeline_csv(aux, perron, v0, tmp_path):
    out = export_pipeline_csv(str(tmp_path), aux, perron, v0, radii=np.linspace(0.01, 1.0, 4))
    for name in ("v0.csv", "v.csv", "ubar.csv", "u.csv", "budget.csv"):
        assert (tmp_path / name).exists()
    v = np.loadtxt(tmp_path / "v.csv", delimiter=",", skiprows=1)
    assert v.shape == (4 * (aux.times.size - 1), 3)
