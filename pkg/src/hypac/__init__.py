"""Radial damped hyperbolic Allen-Cahn solver, interface ODE and moving-frame diagnostics."""

from .diagnostics import (
    EnergyReport,
    SeriesRecorder,
    dissipation_rate,
    dissipation_residual,
    energy_eps,
    extract_interface,
    l1_step_distance,
    omega_pair_distance,
    psi_grad_bv,
    psi_variation,
    velocity_curvature_check,
)
from .initial_data import PreparednessReport, layer_initial_data, preparedness
from .interface_ode import (
    OdeParams,
    OdeTrajectory,
    convergence_sweep,
    fixed_step_rk4,
    integrate_to_extinction,
    mcf_exact,
    t_max,
)
from .moving_frame import FrameParams, MovingFrameView, d_eps, e_phi, phi_eval, phi_R_eval, to_moving_frame
from .potential import (
    Damping,
    Potential,
    affine_damping,
    constant_damping,
    psi,
    quartic_potential,
    scalar_constants,
    standing_wave,
)
from .radial_pde import FieldState, PdeParams, RadialGrid, build_grid, run, stable_dt, step

__version__ = "0.1.0"
