"""Interface speed under the damping g(s) = 2 + s.

The mean of g over the layer, weighted by the profile, is 2, so the interface
should move at half the curvature speed and vanish near t = 0.36.
"""

import numpy as np

from hypac.diagnostics import velocity_curvature_check
from hypac.experiments import simulate_pde
from hypac.potential import damping_from_spec, quartic_potential, scalar_constants

g_bar = scalar_constants(quartic_potential(), damping_from_spec("affine:2,1"))[2]
print(f"g_bar = {g_bar:.6f}")
for eps in (0.04, 0.02):
    run = simulate_pde(eps, damping="affine:2,1", t_end=0.42, frame_T=None)
    ok = np.isfinite(run.rho)
    rows = velocity_curvature_check(run.t[ok], run.rho[ok], g_bar, 2)
    ratio = np.array([r["ratio"] for r in rows])
    third = len(ratio) // 3
    print(f"eps={eps}: mid ratio {ratio[third:-third].mean():.4f}, extinction {run.t_extinction:.4f}")
