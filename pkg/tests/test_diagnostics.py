import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hypac.diagnostics import (
    SeriesRecorder,
    dissipation_rate,
    dissipation_residual,
    energy_eps,
    extract_interface,
    l1_step_distance,
    omega_pair_distance,
    potential_mass,
    psi_grad_bv,
    psi_variation,
    velocity_curvature_check,
)
from hypac.initial_data import layer_initial_data
from hypac.interface_ode import OdeParams, integrate_to_extinction, mcf_exact
from hypac.potential import constant_damping, quartic_potential
from hypac.radial_pde import FieldState, PdeParams, build_grid, run

Q = quartic_potential()
G1 = constant_damping()


def _state(grid, u, w=None, t=0.0):
    return FieldState(t, np.asarray(u, dtype=float), np.zeros_like(grid.r) if w is None else w)


def test_energy_of_constant_states():
    g = build_grid(0.02)
    assert energy_eps(_state(g, np.zeros_like(g.r)), g, 0.02, 1.0, 2, Q) == pytest.approx(1 / (8 * 0.02), rel=1e-12)
    assert energy_eps(_state(g, np.zeros_like(g.r)), g, 0.02, 1.0, 3, Q) == pytest.approx(1 / (12 * 0.02), rel=1e-12)
    assert energy_eps(_state(g, np.ones_like(g.r)), g, 0.02, 1.0, 2, Q) == 0.0


def test_stationary_residual_is_zero():
    g = build_grid(0.05)
    s = [_state(g, np.ones_like(g.r), t=t) for t in (0.0, 0.01, 0.02)]
    assert np.all(dissipation_residual(s, g, 0.05, 1.0, 2, Q, G1) == 0.0)
    assert dissipation_rate(s[0], g, 0.05, 2, G1) == 0.0
    pv = psi_variation(s, g, 2, Q, kappa=1.0, M=1.0)
    assert np.all(pv.grad_bv == 0) and np.all(pv.time_bv == 0) and pv.max_holder == 0.0


def test_extract_interface():
    g = build_grid(0.02)
    assert extract_interface(_state(g, np.ones_like(g.r)), g) is None
    assert extract_interface(_state(g, g.r - 0.37), g) == pytest.approx(0.37, abs=1e-12)
    s = layer_initial_data(g, 0.02, 0.6, potential=Q)
    assert abs(extract_interface(s, g) - 0.6) <= g.dr
    step = np.where(g.r < 0.43, -1.0, 1.0)
    assert abs(extract_interface(_state(g, step), g) - 0.43) <= g.dr
    two = np.where(g.r < 0.2, 1.0, np.where(g.r < 0.7, -1.0, 1.0))
    assert extract_interface(_state(g, two), g) == pytest.approx(0.7, abs=g.dr)
    assert extract_interface(_state(g, two), g, prev_rho=0.25) == pytest.approx(0.2, abs=g.dr)


def test_exact_zero_without_sign_change_is_not_an_interface():
    g = build_grid(0.1)
    u = np.ones_like(g.r)
    u[3] = 0.0
    assert extract_interface(_state(g, u), g) is None


def test_l1_step_distance():
    g = build_grid(0.02)
    ones = _state(g, np.ones_like(g.r))
    for rho, n in ((0.6, 2), (0.3, 3), (1.0, 2)):
        assert l1_step_distance(ones, g, n, rho) == pytest.approx(2 * rho**n / n, rel=1e-12)
    exact = _state(g, np.where(g.r < 0.45, -1.0, 1.0))
    cell = l1_step_distance(exact, g, 2, 0.45)
    assert cell <= 2 * 0.45 * g.dr
    with pytest.raises(ValueError):
        l1_step_distance(ones, g, 2, 1.2)


def test_l1_distance_of_layer_halves_with_eps():
    d = []
    for eps in (0.04, 0.02, 0.01):
        g = build_grid(eps)
        d.append(l1_step_distance(layer_initial_data(g, eps, 0.6, potential=Q), g, 2, 0.6))
    for a, b in zip(d, d[1:]):
        assert 1.6 <= a / b <= 2.4


def test_omega_pair_distance():
    assert omega_pair_distance(0.6, 0.3, 2) == pytest.approx(0.27)
    assert omega_pair_distance(0.5, 0.4, 2) == pytest.approx(0.09)
    assert omega_pair_distance(0.6, 0.0, 3) == pytest.approx(0.144)
    assert omega_pair_distance(0.2, 0.2, 2) == 0.0
    with pytest.raises(ValueError):
        omega_pair_distance(1.1, 0.2, 2)


def test_velocity_curvature_on_mcf():
    t = np.linspace(0.0, 0.17, 400)
    rows = velocity_curvature_check(t, mcf_exact(2, 0.6, t), 1.0, 2)
    assert all(abs(r["ratio"] - 1) < 1e-3 for r in rows)
    t2 = np.linspace(0.0, 0.3, 400)
    rows = velocity_curvature_check(t2, mcf_exact(2, 0.6, t2 / 2.0), 2.0, 2)
    assert all(abs(r["ratio"] - 1) < 1e-3 for r in rows)


def test_velocity_curvature_on_ode():
    traj = integrate_to_extinction(OdeParams(2, 1e-5, 0.6))
    t = np.linspace(0.02, 0.9 * traj.t_extinction, 300)
    rows = velocity_curvature_check(t, traj.at(t)[0], 1.0, 2)
    assert all(0.98 <= r["ratio"] <= 1.02 for r in rows)


def test_velocity_curvature_needs_samples():
    with pytest.raises(ValueError):
        velocity_curvature_check(np.linspace(0, 1, 6), np.linspace(0.6, 0.5, 6), 1.0, 2)
    with pytest.raises(ValueError):
        velocity_curvature_check([0, 2, 1, 3, 4, 5, 6], np.ones(7), 1.0, 2)


def test_recorder_and_mass_on_short_run():
    eps = 0.05
    g = build_grid(eps)
    p = PdeParams(eps=eps, t_end=0.02)
    rec = SeriesRecorder(g, eps, 1.0, 2, Q, G1, references={"mcf": lambda t: float(mcf_exact(2, 0.6, t))}, keep_every=5)
    run(p, g, layer_initial_data(g, eps, 0.6, potential=Q), hook=rec, stride=5)
    E = rec.column("E")
    assert np.all(np.diff(E) <= 1e-12 * E[0])
    assert np.max(np.abs(rec.residuals())) <= 1e-2 * E[0]
    assert rec.extinction_time() is None
    assert np.all(rec.column("l1_mcf") < 1.1 * 2 * math.sqrt(2) * math.log(2) * 0.6 * eps)
    assert potential_mass(rec.kept[-1], g, 2, Q) <= eps * E[0]
    assert rec.rows[-1]["t"] == pytest.approx(0.02)


def test_slow_scale_is_static():
    # over a window of O(eps^2) fast time the interface barely moves
    eps = 0.05
    g = build_grid(eps)
    p = PdeParams(eps=eps, t_end=eps**2)
    rec = SeriesRecorder(g, eps, 1.0, 2, Q, G1)
    run(p, g, layer_initial_data(g, eps, 0.6, potential=Q), hook=rec, stride=1)
    rho = rec.column("rho")
    assert np.max(np.abs(rho - 0.6)) < 2 * eps**2


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.floats(-1.4, 1.4, allow_nan=False), min_size=5, max_size=5),
    st.sampled_from([2, 3]),
)
def test_grad_bv_never_exceeds_energy(coefs, n):
    eps = 0.1
    g = build_grid(eps)
    x = np.cos(np.pi * np.outer(np.arange(5), g.r))
    u = np.clip(np.array(coefs) @ x, -1.5, 1.5)
    s = _state(g, u)
    assert psi_grad_bv(s, g, n, Q) <= energy_eps(s, g, eps, 1.0, n, Q) * (1 + 1e-12)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.sampled_from([2, 3]))
def test_omega_pair_symmetric_and_bounded(a, b, n):
    d = omega_pair_distance(a, b, n)
    assert d == omega_pair_distance(b, a, n)
    assert 0.0 <= d <= 2.0 / n
    assert math.isclose(d, 0.0) or a != b
