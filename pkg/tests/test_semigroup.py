import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import j0 as sp_j0

from critheat.bessel import j0
from critheat.errors import VacuousBound
from critheat.fields import RadialField, RadialGrid, gauss_on_cells
from critheat.nonlinearity import DEFAULT as nl
from critheat.semigroup import (DiskSemigroup, H_factor, ModeUnderflow, apply_semigroup,
                                check_jensen, check_orlicz_contraction, export_kernel_csv,
                                gaussian_kernel, kernel_lower_bound_check, random_fields,
                                smoothing_ratio)
from critheat.spaces import lebesgue_norm

TIMES = (1e-4, 1e-3, 1e-2, 1e-1, 1.0)


def exact_field(rho, func, n=400):
    grid = RadialGrid.uniform(rho, n)
    quad = gauss_on_cells(np.concatenate([[0.0], grid.nodes]), 8)
    return RadialField(grid, func(grid.nodes), func=func, quad=quad)


@pytest.fixture(scope="module")
def corpus(sol):
    return random_fields(sol.rho, 20, seed=0)


def test_basis_invariants(sg):
    assert np.all(np.diff(sg.zeros) > 0)
    assert np.max(np.abs(j0(sg.zeros))) <= 1e-12
    assert np.all(sg.eigenvalues > 0) and np.all(np.diff(sg.eigenvalues) > 0)
    assert np.max(np.abs(sg.gram() - np.eye(sg.modes))) <= 1e-8


def test_first_mode_decay_closed_form(sg, sol):
    z, c = sg.zeros[0], sg.norms[0]
    mode = exact_field(sol.rho, lambda r: c * sp_j0(z * np.asarray(r) / sol.rho))
    r = np.linspace(0.0, sol.rho, 301)
    for t in np.geomspace(1e-6, 1.0, 7):
        out = sg.apply(mode, t, warn=False)
        ref = np.exp(-sg.eigenvalues[0] * t) * c * sp_j0(z * r / sol.rho)
        assert np.max(np.abs(out(r) - ref)) <= 1e-10


def test_t_zero_is_projection(sg, corpus):
    f = corpus[0]
    out = apply_semigroup(sg, f, 0.0)
    assert np.allclose(sg.project(out), sg.project(f), rtol=0, atol=1e-14)
    with pytest.raises(ValueError):
        sg.apply(f, -1.0)


def test_max_principle_and_l1_contraction(sg, corpus):
    for f in corpus:
        for t in TIMES:
            out = sg.apply(f, t, warn=False)
            assert np.min(out.values) >= -1e-8
            assert np.max(out.values) <= f.sup() + 1e-8
            assert lebesgue_norm(out, 1) <= lebesgue_norm(f, 1) + 1e-8


def test_constant_one_image_in_unit_interval(sg, sol):
    one = exact_field(sol.rho, lambda r: np.ones_like(np.asarray(r, dtype=float)))
    for t in TIMES:
        out = sg.apply(one, t, warn=False)
        assert np.min(out.values) >= 0 - 1e-8 and np.max(out.values) <= 1 + 1e-8


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10**6), st.floats(1e-4, 0.1), st.floats(1e-4, 0.1))
def test_semigroup_property(sg, seed, s, t):
    f = random_fields(sg.rho, 1, seed=seed)[0]
    a = sg.apply(sg.apply(f, s, warn=False), t, warn=False)
    b = sg.apply(f, s + t, warn=False)
    assert np.max(np.abs(a.values - b.values)) <= 1e-8


def test_truncation_control(sol, sg, corpus, utilde):
    big = DiskSemigroup(sol.rho, 2 * sg.modes)
    r = np.linspace(0.0, sol.rho, 2001)
    for f in list(corpus[:5]) + [utilde]:
        for t in (1e-4, 1e-3, 1e-2):
            gap = np.max(np.abs(sg.apply(f, t, warn=False)(r) - big.apply(f, t, warn=False)(r)))
            assert gap <= 1e-7


def test_mode_underflow_warning(sg, utilde):
    with pytest.warns(ModeUnderflow):
        sg.apply(utilde, 1e-8)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        sg.apply(utilde, 1e-3)


def test_orlicz_contraction_utilde(sg, sol, utilde):
    for t in (1e-4, 1e-2, 1.0):
        lhs, rhs = check_orlicz_contraction(sg, utilde, t, sol.gamma)
        assert lhs <= 1 + 1e-6 and abs(rhs - 1) <= 1e-6


def test_orlicz_contraction_zero(sg, sol):
    zero = exact_field(sol.rho, lambda r: np.zeros_like(np.asarray(r, dtype=float)))
    assert check_orlicz_contraction(sg, zero, 1e-2, sol.gamma) == (0.0, 0.0)


def test_orlicz_contraction_corpus(sg, sol, corpus):
    cases = 0
    for f in corpus:
        for t in TIMES:
            lhs, rhs = check_orlicz_contraction(sg, f, t, sol.gamma)
            assert lhs <= rhs + 1e-6
            cases += 1
    assert cases == 100


def test_jensen_cases(sg, sol, utilde, corpus):
    one = exact_field(sol.rho, lambda r: np.ones_like(np.asarray(r, dtype=float)))
    gap, scale = check_jensen(sg, one, 1e-2, lambda s: s * s, lambda lu: 2 * lu)
    assert gap <= 1e-6 * scale
    gap, scale = check_jensen(sg, corpus[0], 1e-2, lambda s: s, lambda lu: lu)
    assert abs(gap) <= 1e-10
    gap, scale = check_jensen(sg, utilde * 0.5, 1e-3, nl.f, nl.log_f_of_log)
    assert gap <= 1e-6 * scale
    for f in corpus:
        for t in TIMES:
            gap, scale = check_jensen(sg, f, t, nl.f, nl.log_f_of_log)
            assert gap <= 1e-6 * scale


def test_orlicz_smoothing_ratio_bounded(sg, sol, utilde):
    p = 1 / 0.64
    phi = utilde.map(lambda x: nl.f(0.8 * x), lambda lu: nl.log_f_of_log(lu + np.log(0.8)))
    assert np.isfinite(lebesgue_norm(phi, p))
    ratios = [smoothing_ratio(sg, phi, 10.0**-k, p, sol.gamma) for k in range(1, 7)]
    C = max(ratios)
    assert np.all(np.isfinite(ratios)) and C < 1.0
    with pytest.raises(ValueError):
        smoothing_ratio(sg, phi, 1e-2, 3.0, sol.gamma)


def test_lorentz_smoothing_ratio(sg, corpus):
    for f in corpus[:5]:
        same = [smoothing_ratio(sg, f, 10.0**-k, 2, mode="lorentz", r=2, q=2) for k in range(1, 5)]
        assert max(same) <= 1.0 + 1e-8
        lower = [smoothing_ratio(sg, f, 10.0**-k, 1.5, mode="lorentz", r=3, q=2) for k in range(1, 5)]
        assert np.all(np.diff(lower) < 0)
    with pytest.raises(ValueError):
        smoothing_ratio(sg, corpus[0], 1e-2, 3, mode="lorentz", r=2, q=2)


def test_first_mode_orlicz_ratio_vanishes(sg, sol):
    z, c = sg.zeros[0], sg.norms[0]
    mode = exact_field(sol.rho, lambda r: c * sp_j0(z * np.asarray(r) / sol.rho))
    ratios = [smoothing_ratio(sg, mode, 10.0**-k, 2, sol.gamma) for k in range(1, 7)]
    assert np.all(np.diff(ratios) < 0) and ratios[-1] < 1e-2


def test_H_factor(sol):
    d = sol.d
    assert H_factor(d, d * d / 10) == pytest.approx(1 - 42 * np.exp(-10), rel=1e-14)
    assert H_factor(d, d * d / 10) == pytest.approx(0.998094, abs=1e-6)
    t = np.geomspace(1e-8, 1.0, 50)
    assert np.all(H_factor(d, t) <= 1)
    assert H_factor(d, 1e-8) == 1.0


def test_kernel_lower_bound(sg, sol):
    y = np.linspace(0.0, sol.r_star, 50)
    for t in TIMES:
        if H_factor(sol.d, t) <= 0:
            with pytest.raises(VacuousBound):
                kernel_lower_bound_check(sg, y, t, sol.d)
            continue
        lhs, rhs = kernel_lower_bound_check(sg, y, t, sol.d)
        assert np.all(lhs >= rhs - 1e-8)


def test_kernel_csv(sg, sol, tmp_path):
    path = export_kernel_csv(sg, [0.0, 0.1], [1e-3, 1e-2], sol.d, tmp_path / "k.csv")
    rows = open(path).read().splitlines()
    assert rows[0] == "y,t,G_spectral,G_lower_bound" and len(rows) == 5
    g = np.loadtxt(path, delimiter=",", skiprows=1)
    assert g[0, 2] == pytest.approx(gaussian_kernel(0.0, 1e-3), rel=1e-6)
