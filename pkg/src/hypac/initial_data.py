"""Well-prepared layer initial data and the functionals that measure how well prepared it is."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .diagnostics import l1_step_distance
from .potential import Potential, WaveProfile, psi, standing_wave
from .radial_pde import FieldState, PdeParams, RadialGrid


@dataclass(frozen=True)
class PreparednessReport:
    eps: float
    tau: float
    n: int
    rho0: float
    weighted_energy: float
    c0: float
    excess: float
    residual_R: float
    residual_bound: float
    residual_scaled: float

    def as_row(self) -> dict:
        return asdict(self)


def layer_initial_data(
    grid: RadialGrid,
    eps: float,
    rho0: float,
    profile: WaveProfile | None = None,
    potential: Potential | None = None,
    boundary_value: float = 1.0,
) -> FieldState:
    """``u0(r) = U0((r - rho0)/eps)`` with ``u1 = 0`` and the Dirichlet value re-imposed at ``r = 1``."""
    if not 4 * eps < rho0 < 1 - 4 * eps:
        raise ValueError(f"layer at rho0={rho0} is within 4 eps of the boundary (eps={eps})")
    if profile is None:
        if potential is None:
            raise ValueError("need a wave profile or a potential")
        profile = standing_wave(potential)
    u = profile((grid.r - rho0) / eps)
    if boundary_value < 0:
        u = -u
    u[-1] = boundary_value
    return FieldState(0.0, u, np.zeros_like(u))


def theta_weight(n: int, rho0: float, r):
    """``exp(-(n-1)(r/rho0 - 1)) (r/rho0)^(n-1)``; equals 1 at ``r = rho0``."""
    x = np.asarray(r, dtype=float) / rho0
    out = np.exp(-(n - 1) * (x - 1.0)) * x ** (n - 1)
    return float(out) if np.ndim(out) == 0 else out


def radial_gradient(u: np.ndarray, dr: float) -> np.ndarray:
    """Centered differences, one-sided at the ends."""
    return np.gradient(u, dr, edge_order=1)


def weighted_energy(state: FieldState, grid: RadialGrid, eps: float, tau: float, n: int, rho0: float, potential: Potential) -> float:
    """Trapezoidal ``int_0^1 [eps^3 tau/2 u1^2 + eps/2 u0_r^2 + F(u0)/eps] theta(r) dr``."""
    ur = radial_gradient(state.u, grid.dr)
    dens = 0.5 * eps**3 * tau * state.w**2 + 0.5 * eps * ur**2 + potential.F(state.u) / eps
    return float(np.trapezoid(dens * theta_weight(n, rho0, grid.r), grid.r))


def prepared_residual(state: FieldState, params: PdeParams, grid: RadialGrid) -> float:
    """``eps^-2 tau^-1 int (L u0 - eps^-2 F'(u0) - u1)^2 r^(n-1) + int (u1)_r^2 r^(n-1)``.

    ``L`` is the solver's discrete radial Laplacian; the Dirichlet node carries no residual.
    """
    eps, tau = params.eps, params.tau
    wts = grid.weights(params.n)
    res = wts.laplacian(state.u) - params.potential.Fp(state.u) / eps**2 - state.w
    res[-1] = 0.0
    grad_w = np.diff(state.w) / grid.dr
    return float(wts.integrate(res**2) / (eps**2 * tau) + np.dot(wts.A * grid.dr, grad_w**2))


def preparedness(state: FieldState, params: PdeParams, grid: RadialGrid, rho0: float, C: float = 1.0) -> PreparednessReport:
    c0 = psi(params.potential, 1.0)
    we = weighted_energy(state, grid, params.eps, params.tau, params.n, rho0, params.potential)
    R = prepared_residual(state, params, grid)
    return PreparednessReport(
        eps=params.eps,
        tau=params.tau,
        n=params.n,
        rho0=rho0,
        weighted_energy=we,
        c0=c0,
        excess=we - c0,
        residual_R=R,
        residual_bound=C * params.eps**-5 / params.tau,
        residual_scaled=R * params.eps**5 * params.tau,
    )


def step_distance_initial(state: FieldState, grid: RadialGrid, n: int, rho0: float) -> float:
    """``int_0^1 |u0 - u_bar| r^(n-1) dr`` against the sharp step at ``rho0``."""
    return l1_step_distance(state, grid, n, rho0)
