"""First-order convergence of the interface ODE to the classical flow as eta -> 0."""

import numpy as np

from hypac.interface_ode import OdeParams, convergence_sweep, integrate_to_extinction

rows = convergence_sweep(2, 0.6, 0.0, [1e-2, 1e-3, 1e-4, 1e-5], T=0.15, t1=0.02)
print(f"{'eta':>8} {'sup|rho-rho0|':>14} {'ratio':>7} {'sup|nu+1/rho0|':>15} {'ratio':>7}")
prev = None
for r in rows:
    rr = "" if prev is None else f"{prev['sup_error_rho'] / r['sup_error_rho']:7.2f}"
    rn = "" if prev is None else f"{prev['sup_error_nu'] / r['sup_error_nu']:7.2f}"
    print(f"{r['eta']:8.0e} {r['sup_error_rho']:14.3e} {rr:>7} {r['sup_error_nu']:15.3e} {rn:>7}")
    prev = r

# starting at rest, the speed relaxes onto -(n-1)/rho within a few eta
for eta in (1e-3, 1e-4):
    traj = integrate_to_extinction(OdeParams(2, eta, 0.6))
    t = np.array([eta, 3 * eta, 10 * eta])
    rho, nu = traj.at(t)
    print(f"eta={eta:g}: nu * rho at t = eta, 3 eta, 10 eta -> {np.round(nu * rho, 4).tolist()}")
