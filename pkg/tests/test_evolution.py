import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import j0 as sp_j0

from critheat.errors import BlowupDetected, NoConvergence
from critheat.evolution import (DuhamelOperator, EvolutionTrace, _phi12, blowup_time,
                                choose_mu1, convergence_to_data, default_times,
                                export_trace_csv, imex_solve, picard_solve, sup_gap_at,
                                verify_nonlinear_bound)
from critheat.fields import RadialField, RadialGrid, gauss_on_cells
from critheat.nonlinearity import DEFAULT as nl
from critheat.spaces import lebesgue_norm

T = 0.01
REFINE = ((200, 1e-5), (400, 2.5e-6), (800, 6.25e-7))


@pytest.fixture(scope="module")
def picard05(utilde, sg, sol):
    return picard_solve(utilde * 0.5, T, sg=sg, sol=sol)


@pytest.fixture(scope="module")
def picard09(utilde, sg, sol):
    return picard_solve(utilde * 0.9, T, sg=sg, sol=sol)


def test_choose_mu1():
    assert choose_mu1(0.5) == 0.75
    assert choose_mu1(0.7) == 0.75
    assert choose_mu1(0.8) == 0.9
    assert choose_mu1(0.9) == pytest.approx(0.95)
    for mu in np.linspace(0.0, 0.99, 34):
        m = choose_mu1(mu)
        assert max(mu, 1 / np.sqrt(2)) < m < 1


@settings(max_examples=50, deadline=None)
@given(st.floats(-5.0, 5.0))
def test_phi_functions(z):
    p1, p2 = _phi12(z)
    if abs(z) > 1e-2:
        assert p1 == pytest.approx(np.expm1(z) / z, rel=1e-12)
        assert p2 == pytest.approx((np.expm1(z) - z) / z**2, rel=1e-9)
    else:
        # Taylor oracle to fourth order
        assert p1 == pytest.approx(1 + z / 2 + z**2 / 6 + z**3 / 24 + z**4 / 120, rel=1e-12)
        assert p2 == pytest.approx(0.5 + z / 6 + z**2 / 24 + z**3 / 120 + z**4 / 720, rel=1e-10)


def test_default_times():
    t = default_times(1.0, 10)
    assert t[0] == 0 and t[1] == pytest.approx(1e-6) and t[-1] == 1.0
    assert np.all(np.diff(t) > 0)


def test_duhamel_constant_source(sg):
    # for G constant in time, the Duhamel coefficients are G (1 - e^{-lam t}) / lam
    times = default_times(0.01, 20)
    duh = DuhamelOperator(sg, times)
    g = np.zeros(sg.modes)
    g[:5] = 1.0
    out = duh(np.tile(g, (times.size, 1)))
    lam = sg.eigenvalues
    ref = -np.expm1(-np.outer(times, lam)) / lam * g
    assert np.max(np.abs(out - ref)) <= 1e-13


def test_zero_data_stays_zero(sol, sg):
    grid = RadialGrid.uniform(sol.rho, 100)
    zero = RadialField(grid, np.zeros(100))
    tr = picard_solve(zero, T, nt=8, sg=sg, sol=sol, reports=False)
    assert np.all(tr.coeffs == 0)
    assert verify_nonlinear_bound(tr, 0.8) == 0.0
    assert np.all(convergence_to_data(tr, zero, sol.gamma) == 0)


def test_trace_invariants(sol):
    grid = RadialGrid.uniform(sol.rho, 10)
    s = RadialField(grid, np.zeros(10))
    with pytest.raises(ValueError):
        EvolutionTrace([0.0, 0.0], [s, s])
    with pytest.raises(ValueError):
        EvolutionTrace([0.0, 1.0], [s])


@pytest.mark.parametrize("mu", [0.5, 0.9])
def test_picard_contracts_and_stays_in_ball(mu, picard05, picard09):
    tr = picard05 if mu == 0.5 else picard09
    assert tr.iterates[-1] <= 1e-10
    assert max(tr.contraction) < 1
    mu1 = choose_mu1(mu)
    assert np.max(tr.luxemburg_norms()) <= mu1 < 1
    assert len(tr.reports) == tr.times.size
    assert tr.info["monitor_flag_time"] is None
    assert np.all(np.isfinite(tr.sup_norms()[1:]))


def test_kappa_grows_with_T(utilde, sg, sol):
    k = [max(picard_solve(utilde * 0.9, t, sg=sg, sol=sol, reports=False).contraction)
         for t in (0.0025, 0.005, 0.01)]
    assert np.all(np.diff(k) > 0)


def test_no_convergence_raises(utilde, sg, sol):
    with pytest.raises(NoConvergence) as exc:
        picard_solve(utilde * 0.5, T, sg=sg, sol=sol, max_sweeps=2, reports=False)
    assert exc.value.sweeps == 2 and len(exc.value.history) == 2


def test_comparison_principle(picard05, utilde, sg, sol):
    upper = picard_solve(utilde * 0.6, T, sg=sg, sol=sol, reports=False)
    assert np.min(upper.mesh_values() - picard05.mesh_values()) >= -1e-8


def test_nonlinear_bound(picard05, picard09, utilde, sg, sol):
    b5 = verify_nonlinear_bound(picard05, 0.8)
    assert np.isfinite(b5)
    # a larger trace (pointwise, by comparison) cannot lower the bound
    assert verify_nonlinear_bound(picard09, 0.95) >= verify_nonlinear_bound(picard05, 0.95)
    with pytest.raises(ValueError):
        verify_nonlinear_bound(picard05, 0.5)
    # refinement stability of the t = T term, which is the one the solver computes
    fine = picard_solve(utilde * 0.5, T, nt=96, sg=sg, sol=sol, reports=False)
    p = 1 / 0.8**2
    a = lebesgue_norm(picard05.states[-1].map(nl.f, nl.log_f_of_log), p)
    b = lebesgue_norm(fine.states[-1].map(nl.f, nl.log_f_of_log), p)
    assert b == pytest.approx(a, rel=1e-3)


@pytest.mark.parametrize("mu", [0.5, 0.9])
def test_convergence_to_data(mu, picard05, picard09, utilde, sol):
    tr = picard05 if mu == 0.5 else picard09
    d = convergence_to_data(tr, utilde * mu, sol.gamma)
    assert np.all(np.diff(d) > 0)
    assert d[0] <= 1e-3
    assert d.size == tr.times.size - 1
    assert convergence_to_data(tr, utilde * mu, sol.gamma, k=3).size == 3


def test_imex_linear_first_mode(sg, sol):
    z = sg.zeros[0]
    grid = RadialGrid.uniform(sol.rho, 400)
    fn = lambda r: sp_j0(z * np.asarray(r) / sol.rho)
    mode = RadialField(grid, fn(grid.nodes), func=fn,
                       quad=gauss_on_cells(np.concatenate([[0.0], grid.nodes]), 8))
    im = imex_solve(mode, 0.1, 1e-4, cells=400, reaction=False, out_times=[0.05, 0.1])
    rc = im.info["centers"]
    for t, s in zip(im.times[1:], im.states[1:]):
        assert np.max(np.abs(s.values[:-1] - np.exp(-sg.eigenvalues[0] * t) * fn(rc))) <= 1e-4


@pytest.mark.parametrize("mu", [0.5, 0.9])
def test_imex_agrees_with_picard(mu, picard05, picard09, utilde):
    tr = picard05 if mu == 0.5 else picard09
    gaps = [sup_gap_at(tr, imex_solve(utilde * mu, T, dt, cells, out_times=[T]))
            for cells, dt in REFINE]
    assert gaps[-1] <= 1e-3
    assert gaps[-1] < gaps[0]


def test_blowup_detected_for_supercritical(utilde):
    stars = [blowup_time(utilde * 1.5, 0.05, dt, cells) for cells, dt in REFINE]
    assert all(s is not None for s in stars)
    assert np.all(np.diff(stars) < 0)
    with pytest.raises(BlowupDetected) as exc:
        imex_solve(utilde * 1.5, 0.05, 1e-5, 200)
    assert exc.value.t_star == stars[0]
    assert exc.value.trace.times[0] == 0.0
    assert blowup_time(utilde * 0.5, T, 1e-5, 200) is None


def test_trace_csv(picard05, tmp_path):
    radii = np.linspace(0.0, 1.0, 5)
    path = export_trace_csv(picard05, tmp_path / "tr.csv", tmp_path / "n.csv", radii=radii,
                            manifest={"T": T})
    rows = open(path).read().splitlines()
    assert rows[0] == "t,r,u" and len(rows) == 1 + 5 * picard05.times.size
    assert (tmp_path / "manifest.json").exists() and (tmp_path / "n.csv").exists()
