import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hypac.diagnostics import extract_interface
from hypac.initial_data import layer_initial_data
from hypac.potential import Potential, affine_damping, quartic_potential
from hypac.radial_pde import (
    BlowUpError,
    FieldState,
    PdeParams,
    build_grid,
    run,
    stable_dt,
    step,
    to_fast_time,
    to_slow_time,
)

Q = quartic_potential()


def test_grid_sizes():
    g = build_grid(0.02, 10)
    assert g.n_cells == 500 and g.dr == pytest.approx(0.002)
    assert g.r[0] == 0.0 and g.r[-1] == 1.0
    assert build_grid(0.01, 10).n_cells == 1000
    assert build_grid(0.001, 20).n_cells == 20000
    with pytest.raises(ValueError):
        build_grid(1e-6, 20)
    with pytest.raises(ValueError):
        build_grid(0.02, 4)


def test_grid_resolution_guard():
    build_grid(0.02, 8).check_resolution(0.02)
    with pytest.raises(ValueError):
        build_grid(0.04, 8).check_resolution(0.02)


def test_stable_dt_value():
    p = PdeParams(eps=0.02, tau=1.0)
    assert stable_dt(p, build_grid(0.02), 0.5) == pytest.approx(2e-5)
    with pytest.raises(ValueError):
        stable_dt(p, build_grid(0.02), 0.0)
    # large tau: the wave term grows like sqrt(tau) and the others like tau
    big = PdeParams(eps=0.02, tau=1e4)
    g = build_grid(0.02)
    # max |F''| over [-1.5, 1.5] is F''(1.5) = 5.75
    assert stable_dt(big, g, 1.0) == pytest.approx(0.02**2 / math.sqrt(5.75))


def test_params_validation():
    for kw in ({"n": 4}, {"eps": 0.0}, {"eps": 0.3}, {"tau": 0.0}, {"t_end": -1.0}, {"boundary_value": 0.5}):
        with pytest.raises(ValueError):
            PdeParams(**kw)


@pytest.mark.parametrize("n", [2, 3])
def test_laplacian_exact_on_quadratics(n):
    g = build_grid(0.05, 10)
    L = g.weights(n).laplacian(g.r**2)
    assert np.allclose(L[:-1], 2 * n, rtol=0, atol=1e-9)
    assert L[-1] == 0.0
    assert g.weights(n).integrate(np.ones_like(g.r)) == pytest.approx(1 / n)


@pytest.mark.parametrize("n", [2, 3])
def test_laplacian_second_order(n):
    errs = []
    for ppe in (10, 20, 40):
        g = build_grid(0.1, ppe)
        u = np.cos(np.pi * g.r)
        exact = -np.pi**2 * np.cos(np.pi * g.r) - (n - 1) * np.pi * np.sin(np.pi * g.r) / np.where(g.r > 0, g.r, 1.0)
        exact[0] = -n * np.pi**2
        errs.append(np.max(np.abs(g.weights(n).laplacian(u) - exact)[:-1]))
    assert 3.5 < errs[0] / errs[1] < 4.5
    assert 3.5 < errs[1] / errs[2] < 4.5


def test_plus_one_is_a_fixed_point():
    p = PdeParams(eps=0.05)
    g = build_grid(0.05)
    s = FieldState(0.0, np.ones_like(g.r), np.zeros_like(g.r))
    s2 = step(p, g, s, stable_dt(p, g))
    assert np.array_equal(s2.u, s.u) and np.array_equal(s2.w, s.w)


def test_minus_one_interior_unchanged_away_from_boundary():
    p = PdeParams(eps=0.05)
    g = build_grid(0.05)
    u = -np.ones_like(g.r)
    u[-1] = 1.0
    s2 = step(p, g, FieldState(0.0, u, np.zeros_like(u)), stable_dt(p, g))
    assert np.array_equal(s2.u[:-3], u[:-3])
    assert s2.u[-1] == 1.0


def test_step_rejects_unstable_dt():
    p = PdeParams(eps=0.05)
    g = build_grid(0.05)
    s = FieldState(0.0, np.ones_like(g.r), np.zeros_like(g.r))
    with pytest.raises(ValueError):
        step(p, g, s, 2 * stable_dt(p, g, 1.0))


def test_blow_up_is_reported_with_partial_result():
    # a single-well "potential" with an unstable state at 0 drives u past the guard
    hill = Potential(F=lambda s: -50.0 * s**2, Fp=lambda s: -100.0 * s, Fpp=lambda s: -100.0 + 0.0 * s)
    p = PdeParams(eps=0.05, t_end=0.05, potential=hill)
    g = build_grid(0.05)
    u = np.full_like(g.r, 0.5)
    u[-1] = 1.0
    with pytest.raises(BlowUpError) as info:
        run(p, g, FieldState(0.0, u, np.zeros_like(u)))
    assert info.value.partial is not None
    assert 0 < info.value.t < 0.05
    with pytest.raises(BlowUpError):
        FieldState(0.0, np.array([np.nan, 0.0, 1.0]), np.zeros(3)).check(1.0)


def test_layer_moves_inward():
    eps = 0.02
    p = PdeParams(eps=eps, t_end=0.01)
    g = build_grid(eps)
    res = run(p, g, layer_initial_data(g, eps, 0.6, potential=Q))
    rho = extract_interface(res.final, g)
    assert rho < 0.6
    near = np.abs(g.r - rho) < eps
    # points inside the layer switch from -1 towards +1 as the circle shrinks
    assert np.all(res.final.w[near] > 0)


def test_run_edge_cases():
    p = PdeParams(eps=0.05, t_end=0.0)
    g = build_grid(0.05)
    init = layer_initial_data(g, 0.05, 0.5, potential=Q)
    res = run(p, g, init)
    assert res.n_steps == 0 and np.array_equal(res.final.u, init.u)
    p = PdeParams(eps=0.05, t_end=0.003)
    res = run(p, g, init, snapshot_times=[0.001, 0.003])
    assert [s.t for s in res.snapshots] == [0.001, 0.003]
    assert res.final.t == 0.003 and np.array_equal(res.snapshots[-1].u, res.final.u)
    for bad in ([0.002, 0.001], [0.004]):
        with pytest.raises(ValueError):
            run(p, g, init, snapshot_times=bad)


def test_hook_stride():
    p = PdeParams(eps=0.05, t_end=0.003)
    g = build_grid(0.05)
    init = layer_initial_data(g, 0.05, 0.5, potential=Q)
    seen = []
    res = run(p, g, init, hook=lambda s: seen.append(s.t) or s.t, stride=5)
    assert seen[0] == 0.0 and seen[-1] == 0.003
    assert len(res.series) == len(seen) == 1 + math.ceil(res.n_steps / 5)


def test_time_richardson_fourth_order():
    eps, T = 0.05, 0.004
    p = PdeParams(eps=eps, t_end=T)
    g = build_grid(eps)
    init = layer_initial_data(g, eps, 0.5, potential=Q)
    u = [run(p, g, init, safety=s).final.u for s in (0.5, 0.25, 0.125)]
    d1, d2 = np.max(np.abs(u[0] - u[1])), np.max(np.abs(u[1] - u[2]))
    assert 10 < d1 / d2 < 24


def test_space_refinement_second_order():
    eps, T = 0.05, 0.004
    p = PdeParams(eps=eps, t_end=T)
    finals = []
    for ppe in (10, 20, 40):
        g = build_grid(eps, ppe)
        res = run(p, g, layer_initial_data(g, eps, 0.5, potential=Q), safety=0.25)
        finals.append(res.final.u[:: ppe // 10])
    d1, d2 = np.max(np.abs(finals[0] - finals[1])), np.max(np.abs(finals[1] - finals[2]))
    assert 3 < d1 / d2 < 5


def test_solution_stays_bounded(pde_run):
    run_ = pde_run(0.02)
    u_max = run_.recorder.column("u_max")
    before = run_.t < run_.t_extinction
    assert np.max(u_max[before]) <= 1 + 0.02
    # the collapse at the origin radiates an overshoot; it stays bounded
    assert np.max(u_max) <= 2.0


def test_energy_nonincreasing_within_tolerance(pde_run):
    run_ = pde_run(0.02)
    E, t = run_.recorder.column("E"), run_.t
    allowed = 10 * run_.dt * run_.E0 * np.diff(t)
    assert np.all(np.diff(E) <= allowed)


def test_general_damping_and_negative_boundary():
    eps = 0.05
    p = PdeParams(eps=eps, t_end=0.004, damping=affine_damping(2.0, 1.0), boundary_value=-1.0)
    g = build_grid(eps)
    init = layer_initial_data(g, eps, 0.5, potential=Q, boundary_value=-1.0)
    res = run(p, g, init)
    assert res.final.u[-1] == -1.0 and res.final.u[0] == pytest.approx(1.0, abs=1e-4)


def test_time_scale_conversion():
    assert to_slow_time(0.18, 0.02) == pytest.approx(450)
    assert to_slow_time(0.0, 0.3) == 0.0
    assert to_slow_time(0.18, 0.01) == pytest.approx(1800)


@given(st.floats(0, 10), st.floats(1e-3, 0.2))
def test_time_scale_round_trip(t, eps):
    assert to_fast_time(to_slow_time(t, eps), eps) == pytest.approx(t, rel=1e-12, abs=1e-15)
