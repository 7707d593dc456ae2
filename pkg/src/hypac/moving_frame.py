"""Analysis in coordinates attached to the moving interface.

With ``rho(t)`` the radius from :mod:`hypac.interface_ode` and ``nu = rho'``,
``v(R, t) = u(R + rho(t), t)`` lives on ``[-rho, 1 - rho]``.  The weight

    phi(R, t) = exp(-k R / rho) (1 + R / rho)^k,   k = (n-1) / (1 - eps^2 tau nu^2),

vanishes at the origin, equals one on the interface and makes the
moving-frame energy ``E_phi`` almost nonincreasing.  ``d_eps`` measures how far
the layer drifts from ``R = 0`` between two times.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator

from .initial_data import radial_gradient
from .interface_ode import OdeParams, OdeTrajectory, mcf_exact, rhs
from .potential import Potential, psi, psi_values
from .radial_pde import FieldState, RadialGrid


class FrameError(ValueError):
    pass


@dataclass(frozen=True)
class FrameParams:
    alpha: float
    a: float
    T: float

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise FrameError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not self.a > 0:
            raise FrameError(f"window half-width must be positive, got {self.a}")


def default_frame(n: int, rho0: float, T: float, alpha: float = 0.5) -> FrameParams:
    """Window half-width ``0.9 min(rho_mcf(T), 1 - rho0)``."""
    return FrameParams(alpha=alpha, a=0.9 * min(mcf_exact(n, rho0, T), 1.0 - rho0), T=T)


def alpha_margin(traj: OdeTrajectory, eps: float, tau: float, frame: FrameParams) -> float:
    """``min_t (1 - eps^2 tau nu^2) - alpha`` over stored samples with ``t <= T``."""
    sel = traj.times <= frame.T
    return float(np.min(1.0 - eps**2 * tau * traj.nu[sel] ** 2) - frame.alpha)


def window_margin(traj: OdeTrajectory, frame: FrameParams) -> float:
    """Distance from ``[-a, a]`` to the ends of ``(-rho(t), 1 - rho(t))`` on ``[0, T]``."""
    sel = traj.times <= frame.T
    rho = traj.rho[sel]
    return float(min(np.min(rho) - frame.a, np.min(1.0 - rho) - frame.a))


def check_frame(traj: OdeTrajectory, eps: float, tau: float, frame: FrameParams) -> None:
    """Raise if the speed or window condition fails on ``[0, T]``."""
    m = alpha_margin(traj, eps, tau, frame)
    if m < 0:
        raise FrameError(f"1 - eps^2 tau nu^2 drops below alpha={frame.alpha} (margin {m:.3g})")
    w = window_margin(traj, frame)
    if w <= 0:
        raise FrameError(f"window [-a, a] leaves the moving domain (margin {w:.3g})")


# --------------------------------------------------------------------------- phi


def _exponent(n: int, eps: float, tau: float, nu) -> np.ndarray:
    q = 1.0 - eps**2 * tau * np.asarray(nu, dtype=float) ** 2
    if np.any(q <= 0):
        raise FrameError("1 - eps^2 tau nu^2 must be positive")
    return (n - 1) / q


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


def phi_eval(n: int, eps: float, tau: float, rho, nu, R):
    """Integrating factor ``phi``; broadcasts over ``rho``, ``nu`` and ``R``."""
    rho = np.asarray(rho, dtype=float)
    R = np.asarray(R, dtype=float)
    k = _exponent(n, eps, tau, nu)
    x = R / rho
    if np.any(x < -1.0 - 1e-12):
        raise FrameError("R below -rho")
    x = np.maximum(x, -1.0)
    return _scalar(np.exp(-k * x) * (1.0 + x) ** k)


def phi_R_eval(n: int, eps: float, tau: float, rho, nu, R):
    """``d phi / dR = -k (R/rho^2) exp(-k R/rho) (1 + R/rho)^(k-1)``.

    Written without the ``1/(R + rho)`` factor so the value at ``R = -rho`` is
    the one-sided limit: zero when ``k > 1``, ``e / rho`` when ``k = 1``.
    """
    rho = np.asarray(rho, dtype=float)
    R = np.asarray(R, dtype=float)
    k = _exponent(n, eps, tau, nu)
    x = R / rho
    if np.any(x < -1.0 - 1e-12):
        raise FrameError("R below -rho")
    x = np.maximum(x, -1.0)
    return _scalar(-k * x / rho * np.exp(-k * x) * (1.0 + x) ** (k - 1.0))


def quadratic_constant(n: int, rho0: float, T: float, alpha: float) -> float:
    """``K_T = (n-1)^2 / (alpha^2 (rho0^2 - 2(n-1)T))``."""
    d = rho0**2 - 2 * (n - 1) * T
    if d <= 0:
        raise FrameError("T must be below the classical extinction time")
    return (n - 1) ** 2 / (alpha**2 * d)


def _ode_shift(n: int, eta: float, rho: float, nu: float, h: float) -> tuple[float, float]:
    """One classical RK4 step of the interface ODE from ``(rho, nu)`` (``h`` may be negative)."""
    p = OdeParams(n=n, eta=eta, rho0=0.5, nu0=0.0)

    def f(y):
        return np.array(rhs(p, y))

    y = np.array([rho, nu])
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    y = y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return float(y[0]), float(y[1])


def phi_t_fd(n: int, eps: float, tau: float, rho: float, nu: float, R, h: float | None = None):
    """Centered difference of ``phi`` in time, following the interface ODE for ``+-h``.

    The default step ``1e-4 eta`` keeps the truncation error small inside the
    initial layer, where ``nu`` changes on the time scale ``eta``.
    """
    eta = eps**2 * tau
    if h is None:
        h = min(1e-6, 1e-4 * eta)
    rp, vp = _ode_shift(n, eta, rho, nu, h)
    rm, vm = _ode_shift(n, eta, rho, nu, -h)
    return (phi_eval(n, eps, tau, rp, vp, R) - phi_eval(n, eps, tau, rm, vm, R)) / (2 * h)


def phi_property_margins(n: int, eps: float, tau: float, rho: float, nu: float, *, K_T: float, r_quad: float = 0.05, n_R: int = 200, h: float | None = None):
    """Margins (>= 0 when satisfied) of the pointwise properties of ``phi`` at one ``(rho, nu)``.

    Returns a dict with ``range`` (phi in [0, 1]), ``endpoints`` (phi(-rho)=0, phi(0)=1),
    ``symmetry`` (phi(-R) <= phi(R) on (0, rho)), ``quadratic``
    (phi >= 1 - K_T R^2 for |R| <= r_quad) and ``phi_t``
    (phi_t <= -(nu/rho) R phi_R, up to the finite difference error).
    """
    R_all = np.linspace(-rho, 1.0 - rho, 401)
    ph = phi_eval(n, eps, tau, rho, nu, R_all)
    out = {"range": float(min(np.min(ph), np.min(1.0 - ph)))}
    end = max(abs(phi_eval(n, eps, tau, rho, nu, -rho)), abs(phi_eval(n, eps, tau, rho, nu, 0.0) - 1.0))
    out["endpoints"] = -float(end)
    Rs = np.linspace(0.0, rho, n_R + 2)[1:-1]
    out["symmetry"] = float(np.min(phi_eval(n, eps, tau, rho, nu, Rs) - phi_eval(n, eps, tau, rho, nu, -Rs)))
    Rq = np.linspace(-min(r_quad, rho), r_quad, 201)
    out["quadratic"] = float(np.min(phi_eval(n, eps, tau, rho, nu, Rq) - (1.0 - K_T * Rq**2)))
    Rt = np.linspace(-rho, 1.0 - rho, 201)[1:]
    lhs = phi_t_fd(n, eps, tau, rho, nu, Rt, h)
    rhs_ = -(nu / rho) * Rt * phi_R_eval(n, eps, tau, rho, nu, Rt)
    out["phi_t"] = float(np.min(rhs_ - lhs))
    return out


# --------------------------------------------------------------------------- views and functionals


@dataclass(frozen=True, eq=False)
class MovingFrameView:
    t: float
    rho: float
    nu: float
    R: np.ndarray
    v: np.ndarray
    vR: np.ndarray
    vt: np.ndarray
    phi: np.ndarray


def to_moving_frame(state: FieldState, grid: RadialGrid, rho: float, nu: float, *, n: int, eps: float, tau: float, R=None) -> MovingFrameView:
    """Fields in the moving frame.

    By default the offsets are the nodes shifted by ``rho``; given ``R``, the
    fields ``u``, ``u_r`` and ``u_t`` are resampled there by monotone cubic
    interpolation.  ``vt = u_t + nu u_r`` by the chain rule.
    """
    if not grid.dr < rho < 1.0 - grid.dr:
        raise FrameError(f"rho={rho} outside the grid interior")
    ur = radial_gradient(state.u, grid.dr)
    if R is None:
        R = grid.r - rho
        v, vR, ut = state.u.copy(), ur, state.w.copy()
    else:
        R = np.asarray(R, dtype=float)
        if np.any(R < -rho - 1e-12) or np.any(R > 1.0 - rho + 1e-12):
            raise FrameError("offsets outside [-rho, 1 - rho]")
        r = np.clip(R + rho, 0.0, 1.0)
        v = PchipInterpolator(grid.r, state.u)(r)
        vR = PchipInterpolator(grid.r, ur)(r)
        ut = PchipInterpolator(grid.r, state.w)(r)
    vt = ut + nu * vR
    phi = np.asarray(phi_eval(n, eps, tau, rho, nu, R), dtype=float)
    return MovingFrameView(t=state.t, rho=rho, nu=nu, R=R, v=v, vR=vR, vt=vt, phi=phi)


def e_phi(view: MovingFrameView, eps: float, tau: float, nu: float, potential: Potential) -> tuple[float, float]:
    """Weighted energy ``E_phi`` and its static part ``P_phi`` by the trapezoidal rule."""
    q = 1.0 - eps**2 * tau * nu**2
    Fv = potential.F(view.v)
    static = 0.5 * eps * view.vR**2 + Fv / eps
    full = 0.5 * eps**3 * tau * view.vt**2 + 0.5 * eps * q * view.vR**2 + Fv / eps
    E = float(np.trapezoid(full * view.phi, view.R))
    P = float(np.trapezoid(static * view.phi, view.R))
    return E, P


def d_eps(view1: MovingFrameView, view2: MovingFrameView, a: float, potential: Potential, n_pts: int | None = None) -> float:
    """``int_{-a}^{a} |Psi(v1) - Psi(v2)| dR`` on a uniform grid (trapezoidal rule)."""
    for vw in (view1, view2):
        if vw.R[0] > -a + 1e-12 or vw.R[-1] < a - 1e-12:
            raise FrameError(f"view at t={vw.t:g} does not cover [-{a:g}, {a:g}]")
    if n_pts is None:
        h = min(np.min(np.diff(view1.R)), np.min(np.diff(view2.R)))
        n_pts = int(math.ceil(2 * a / h)) + 1
    x = np.linspace(-a, a, n_pts)
    p1 = psi_values(potential, PchipInterpolator(view1.R, view1.v)(x))
    p2 = psi_values(potential, PchipInterpolator(view2.R, view2.v)(x))
    return float(np.trapezoid(np.abs(p1 - p2), x))


def lower_bound_C1(potential: Potential) -> float:
    """``1 / (Psi(1/4) - Psi(0))``."""
    return 1.0 / (psi(potential, 0.25) - psi(potential, 0.0))


def lower_bound_factor(n: int, eps: float, tau: float, rho: float, nu: float, d: float, C1: float) -> float:
    """``phi(-C1 d - eps^(1/2))``, taken as zero once the argument passes ``-rho``."""
    R = -C1 * d - math.sqrt(eps)
    if R <= -rho:
        return 0.0
    return float(phi_eval(n, eps, tau, rho, nu, R))


def calibrate_C2(P, factors, eps: float, c0: float) -> float:
    """Smallest ``C2 >= 0`` with ``P >= factor (c0 - C2 eps^(1/2))`` at every sample."""
    P = np.asarray(P, dtype=float)
    f = np.asarray(factors, dtype=float)
    sel = f > 0
    if not np.any(sel):
        return 0.0
    need = (c0 - P[sel] / f[sel]) / math.sqrt(eps)
    return float(max(0.0, np.max(need)))


def lower_bound_margins(P, factors, eps: float, c0: float, C2: float) -> np.ndarray:
    """``P - factor (c0 - C2 eps^(1/2))`` per sample."""
    return np.asarray(P, dtype=float) - np.asarray(factors, dtype=float) * (c0 - C2 * math.sqrt(eps))


@dataclass
class FrameReport:
    t: np.ndarray
    E_phi: np.ndarray
    P_phi: np.ndarray
    d_eps_from_0: np.ndarray
    alpha_margin: np.ndarray
    lb_factor: np.ndarray
    C1: float

    def columns(self) -> dict:
        return {
            "t": self.t,
            "E_phi": self.E_phi,
            "P_phi": self.P_phi,
            "d_eps_from_0": self.d_eps_from_0,
            "alpha_margin": self.alpha_margin,
        }


def frame_report(
    states, grid: RadialGrid, traj: OdeTrajectory, *, n: int, eps: float, tau: float, potential: Potential, frame: FrameParams
) -> FrameReport:
    """Moving-frame energies and layer drift for each state with ``t <= T``."""
    check_frame(traj, eps, tau, frame)
    states = [s for s in states if s.t <= frame.T * (1 + 1e-12)]
    if not states:
        raise FrameError("no states inside [0, T]")
    C1 = lower_bound_C1(potential)
    views, rows = [], []
    for s in states:
        rho, nu = (float(x) for x in traj.at(s.t))
        vw = to_moving_frame(s, grid, rho, nu, n=n, eps=eps, tau=tau)
        views.append(vw)
        E, P = e_phi(vw, eps, tau, nu, potential)
        rows.append((s.t, E, P, 1.0 - eps**2 * tau * nu**2 - frame.alpha, rho, nu))
    d = np.array([d_eps(views[0], vw, frame.a, potential) for vw in views])
    t, E, P, am, rho, nu = (np.array(c) for c in zip(*rows))
    lb = np.array([lower_bound_factor(n, eps, tau, r_, v_, d_, C1) for r_, v_, d_ in zip(rho, nu, d)])
    return FrameReport(t=t, E_phi=E, P_phi=P, d_eps_from_0=d, alpha_margin=am, lb_factor=lb, C1=C1)
