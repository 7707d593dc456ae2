"""Acceptance suite: each test checks one criterion at its stated tolerance and reports a PASS/FAIL line."""

import numpy as np

from hypac.diagnostics import energy_eps, velocity_curvature_check
from hypac.interface_ode import OdeParams, convergence_sweep, fixed_step_rk4, integrate_to_extinction
from hypac.moving_frame import phi_eval, phi_property_margins, quadratic_constant
from hypac.potential import psi, quartic_potential

N, RHO0 = 2, 0.6


def _rho_at(run, t):
    i = int(np.argmin(np.abs(run.t - t)))
    return run.t[i], run.rho[i]


def test_extinction_time_eps_002(pde_run, report):
    run = pde_run(0.02)
    t16, r16 = _rho_at(run, 0.16)
    te = run.t_extinction
    alive = np.isfinite(r16)
    ok = alive and te is not None and te <= 0.188 and 0.16 - 0.01 <= te <= 0.19 + 0.01
    report("1 extinction time", ok, f"rho(t={t16:.4f})={r16:.4f}, extinction at t={te}")
    assert alive
    assert te is not None and te <= 0.188
    assert 0.15 <= te <= 0.20


def test_pde_ode_interface_gap(pde_run, report):
    gaps = {eps: pde_run(eps).sup_gap((0.02, 0.14)) for eps in (0.04, 0.02)}
    ok = all(g <= 5 * e for e, g in gaps.items()) and gaps[0.02] < gaps[0.04]
    report("2 PDE-ODE interface gap", ok, ", ".join(f"eps={e}: {g:.3e} (bound {5 * e:g})" for e, g in gaps.items()))
    for e, g in gaps.items():
        assert g <= 5 * e
    assert gaps[0.02] < gaps[0.04]


def test_l1_distance_to_sharp_limits(pde_run, report):
    epss = (0.04, 0.02, 0.01)
    to_eps = [pde_run(e).l1_integral("ode") for e in epss]
    to_0 = [pde_run(e).l1_integral("mcf") for e in epss]
    ok = all(
        all(a > b for a, b in zip(v, v[1:])) and v[-1] <= 0.5 * v[0] for v in (to_eps, to_0)
    )
    report(
        "3 L1 distance to sharp limits",
        ok,
        f"omega_eps {np.round(to_eps, 6).tolist()}, omega_0 {np.round(to_0, 6).tolist()}",
    )
    for v in (to_eps, to_0):
        assert v[0] > v[1] > v[2]
        assert v[2] <= 0.5 * v[0]


def test_ode_first_order_rate(report):
    rows = convergence_sweep(N, RHO0, 0.0, [1e-3, 1e-4, 1e-5], T=0.15, t1=0.02)
    r_rho = [a["sup_error_rho"] / b["sup_error_rho"] for a, b in zip(rows, rows[1:])]
    r_nu = [a["sup_error_nu"] / b["sup_error_nu"] for a, b in zip(rows, rows[1:])]
    ok = all(5 <= r <= 20 for r in r_rho + r_nu)
    report("4 ODE rate in eta", ok, f"rho ratios {np.round(r_rho, 3).tolist()}, nu ratios {np.round(r_nu, 3).tolist()}")
    for r in r_rho + r_nu:
        assert 5 <= r <= 20


def test_energy_dissipation_identity(pde_run, report):
    runs = [pde_run(0.04), pde_run(0.02), pde_run(0.01)]
    runs += [pde_run(e, damping="affine:2,1", t_end=0.42, frame_T=None) for e in (0.04, 0.02)]
    rel = [float(np.max(np.abs(r.residuals()))) / r.E0 for r in runs]
    shrink = {}
    for eps in (0.04, 0.02):
        full = np.max(np.abs(pde_run(eps).residuals()))
        half = np.max(np.abs(pde_run(eps, safety=0.25).residuals()))
        shrink[eps] = full / half
    ok = max(rel) <= 1e-2 and min(shrink.values()) >= 3
    report("5 dissipation identity", ok, f"max |res|/E0 = {max(rel):.2e}, shrink on halving dt {[round(float(s), 2) for s in shrink.values()]}")
    assert max(rel) <= 1e-2
    for s in shrink.values():
        assert s >= 3


def test_psi_bv_and_holder_bounds(pde_run, report):
    run = pde_run(0.02)
    pot = run.params.potential
    E = np.array([energy_eps(s, run.grid, 0.02, 1.0, N, pot) for s in run.recorder.kept])
    pv = run.psi_var
    gap = float(np.min(E - pv.grad_bv))
    ok = gap >= 0 and pv.max_holder <= 1.05
    report("6 Psi BV and Hoelder bounds", ok, f"min(E - grad_bv) = {gap:.3e} over {len(E)} states, max Hoelder ratio = {pv.max_holder:.3f}")
    assert np.all(pv.grad_bv <= E)
    assert pv.max_holder <= 1.05


def test_phi_property_suite(report):
    eps, tau, T, alpha = 0.02, 1.0, 0.14, 0.5
    traj = integrate_to_extinction(OdeParams(N, eps**2 * tau, RHO0))
    K = quadratic_constant(N, RHO0, T, alpha)
    rng = np.random.default_rng(20240601)
    worst: dict = {}
    exact = True
    for t in rng.uniform(0.0, T, 50):
        rho, nu = (float(x) for x in traj.at(t))
        exact &= phi_eval(N, eps, tau, rho, nu, -rho) == 0.0 and phi_eval(N, eps, tau, rho, nu, 0.0) == 1.0
        for k, v in phi_property_margins(N, eps, tau, rho, nu, K_T=K, r_quad=0.05, n_R=200).items():
            worst[k] = min(worst.get(k, np.inf), v)
    ok = exact and worst["range"] >= 0 and worst["symmetry"] >= 0 and worst["quadratic"] >= 0 and worst["phi_t"] >= -1e-6
    report("7 phi properties", ok, ", ".join(f"{k}={v:.2e}" for k, v in worst.items()))
    assert exact
    assert worst["range"] >= 0
    assert worst["symmetry"] >= 0
    assert worst["quadratic"] >= 0
    assert worst["phi_t"] >= -1e-6


def _mid_ratio(run, g_bar=2.0):
    sel = np.isfinite(run.rho)
    rows = velocity_curvature_check(run.t[sel], run.rho[sel], g_bar, N)
    t = np.array([r["t"] for r in rows])
    ratio = np.array([r["ratio"] for r in rows])
    third = (t[-1] - t[0]) / 3
    mid = (t >= t[0] + third) & (t <= t[-1] - third)
    return float(np.mean(ratio[mid]))


def test_curvature_law_with_variable_damping(pde_run, report):
    runs = {e: pde_run(e, damping="affine:2,1", t_end=0.42, frame_T=None) for e in (0.04, 0.02)}
    ratios = {e: _mid_ratio(r) for e, r in runs.items()}
    te = runs[0.02].t_extinction
    ok = (
        0.8 <= ratios[0.04] <= 1.2
        and abs(ratios[0.02] - 1) < abs(ratios[0.04] - 1)
        and te is not None
        and abs(te - 0.36) <= 0.2 * 0.36
    )
    report("8 curvature law, g = 2 + s", ok, f"ratios {[round(r, 4) for r in ratios.values()]}, extinction at eps=0.02: {te}")
    assert 0.8 <= ratios[0.04] <= 1.2
    assert abs(ratios[0.02] - 1) < abs(ratios[0.04] - 1)
    assert te is not None and abs(te - 0.36) <= 0.2 * 0.36


def test_moving_frame_energy_and_layer_distance(pde_run, report):
    c0 = psi(quartic_potential(), 1.0)
    fr = pde_run(0.02).frame
    fr4 = pde_run(0.04).frame
    assert fr is not None and fr4 is not None
    excess = float(np.max(fr.E_phi) - fr.E_phi[0])
    d2, d4 = float(np.max(fr.d_eps_from_0)), float(np.max(fr4.d_eps_from_0))
    ok = excess <= 0.05 * c0 and d2 < d4 and fr.t[-1] >= 0.135
    report("9 moving-frame energy and layer distance", ok, f"max E_phi - E_phi(0) = {excess:.3e} (allowed {0.05 * c0:.3e}), max d_eps {d2:.3e} < {d4:.3e}")
    assert fr.t[-1] >= 0.135
    assert excess <= 0.05 * c0
    assert d2 < d4


def test_rk4_oracle_matches_adaptive(report):
    p = OdeParams(N, 1e-4, RHO0)
    traj = integrate_to_extinction(p)
    t, rho, _ = fixed_step_rk4(p, 1e-7, 0.9 * traj.t_extinction, stride=50)
    diff = float(np.max(np.abs(rho - traj.at(t)[0])))
    report("10 RK4 oracle vs adaptive", diff <= 1e-7, f"sup |rho_rk4 - rho_dp45| = {diff:.2e} on [0, {t[-1]:.4f}]")
    assert diff <= 1e-7
