"""Radius of a shrinking spherical interface with inertia.

The interface radius obeys ``eta rho'' + rho' + (n-1)/rho = 0`` with
``eta = eps^2 tau``.  As ``eta -> 0`` this reduces to mean curvature flow for
spheres, ``rho' = -(n-1)/rho``, whose solution is :func:`mcf_exact`.

The system is stiff (relaxation time ``eta``) and singular at extinction
(``rho -> 0``, ``nu -> -inf``), so :func:`integrate_to_extinction` uses a
Dormand-Prince 5(4) pair with a step cap through the initial layer and
bisection on the dense output to locate the extinction event.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .io import write_csv


class OdeError(ValueError):
    pass


@dataclass(frozen=True)
class OdeParams:
    n: int
    eta: float
    rho0: float
    nu0: float = 0.0
    allow_outside: bool = False

    def __post_init__(self):
        if self.n not in (2, 3):
            raise OdeError(f"dimension must be 2 or 3, got {self.n}")
        if not self.eta >= 0:
            raise OdeError(f"eta must be nonnegative, got {self.eta}")
        if not 0 < self.rho0 < 1:
            raise OdeError(f"rho0 must lie in (0, 1), got {self.rho0}")
        if not self.in_gamma and not self.allow_outside:
            raise OdeError(
                f"initial velocity {self.nu0} outside [-(n-1)/rho0, 0] = [{-(self.n - 1) / self.rho0:g}, 0];"
                " pass allow_outside=True for such runs"
            )

    @property
    def in_gamma(self) -> bool:
        """Whether the initial data lie in the invariant region ``-(n-1)/rho <= nu <= 0``."""
        return -(self.n - 1) / self.rho0 <= self.nu0 <= 0.0


@dataclass
class OdeTrajectory:
    params: OdeParams
    times: np.ndarray
    rho: np.ndarray
    nu: np.ndarray
    t_extinction: float | None = None
    truncated: bool = False
    n_steps: int = 0
    n_rejected: int = 0
    _dense: tuple | None = field(default=None, repr=False)

    def at(self, t):
        """Cubic Hermite interpolation ``(rho(t), nu(t))`` between stored samples."""
        if self._dense is None:
            p = self.params
            dnu = (-self.nu - (p.n - 1) / self.rho) / p.eta
            self._dense = (
                CubicHermiteSpline(self.times, self.rho, self.nu, extrapolate=False),
                CubicHermiteSpline(self.times, self.nu, dnu, extrapolate=False),
            )
        t = np.asarray(t, dtype=float)
        if np.any(t < self.times[0]) or np.any(t > self.times[-1]):
            raise OdeError(f"time outside the integrated range [0, {self.times[-1]:g}]")
        return self._dense[0](t), self._dense[1](t)

    def to_csv(self, path):
        return write_csv(path, {"t": self.times, "rho": self.rho, "nu": self.nu})


def t_max(n: int, rho0: float) -> float:
    """Extinction time of the classical flow, ``rho0^2 / (2 (n-1))``."""
    if not rho0 > 0:
        raise OdeError("rho0 must be positive")
    return rho0**2 / (2 * (n - 1))


def mcf_exact(n: int, rho0: float, t):
    """Sphere radius under mean curvature flow, ``sqrt(rho0^2 - 2 (n-1) t)``."""
    t_arr = np.asarray(t, dtype=float)
    tm = t_max(n, rho0)
    if np.any(t_arr > tm * (1 + 1e-14)):
        raise OdeError(f"t beyond the extinction time {tm:g}")
    out = np.sqrt(np.maximum(rho0**2 - 2 * (n - 1) * t_arr, 0.0))
    return float(out) if np.ndim(out) == 0 else out


def rhs(params: OdeParams, state) -> tuple[float, float]:
    rho, nu = state
    if not rho > 0:
        raise OdeError(f"radius must be positive, got {rho}")
    if not params.eta > 0:
        raise OdeError("rhs needs eta > 0; the classical limit is mcf_exact")
    return nu, (-nu - (params.n - 1) / rho) / params.eta


# Dormand-Prince 5(4)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)

H_MIN = 1e-14


def _hermite(t0, t1, y0, y1, d0, d1, t):
    h = t1 - t0
    s = (t - t0) / h
    h00 = (1 + 2 * s) * (1 - s) ** 2
    h10 = s * (1 - s) ** 2
    h01 = s * s * (3 - 2 * s)
    h11 = s * s * (s - 1)
    return h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1


def _dp_step(k_rhs, t, y0, y1, h, f0):
    """One Dormand-Prince step; returns the new state, its derivative and the error estimate,
    or None if a stage left the domain rho > 0."""
    ks = [f0]
    for i in range(1, 7):
        a = _A[i]
        r = y0 + h * sum(a[j] * ks[j][0] for j in range(i))
        v = y1 + h * sum(a[j] * ks[j][1] for j in range(i))
        if r <= 0:
            return None
        ks.append(k_rhs(r, v))
    r_new, v_new = r, v  # stage 7 is evaluated at the 5th-order solution (FSAL)
    er = h * sum(_E[j] * ks[j][0] for j in range(7))
    ev = h * sum(_E[j] * ks[j][1] for j in range(7))
    return r_new, v_new, ks[6], er, ev


def integrate_to_extinction(
    params: OdeParams,
    tol: float = 1e-9,
    *,
    t_end: float | None = None,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    stride: int = 1,
    h0: float | None = None,
) -> OdeTrajectory:
    """Integrate until ``rho`` reaches ``tol`` (or until ``t_end`` if given).

    The step is capped at ``eta/2`` for ``t <= 20 eta``.  If the step size
    underflows ``1e-14`` near extinction, integration stops with
    ``truncated=True`` and the extinction time is extrapolated with the local
    curvature law ``rho rho' = -(n-1)``.
    """
    if not tol > 0:
        raise OdeError("tol must be positive")
    p = params
    if not p.eta > 0:
        raise OdeError("integrate_to_extinction needs eta > 0; use mcf_exact for the classical limit")
    n1, eta = p.n - 1, p.eta

    def k_rhs(r, v):
        return v, (-v - n1 / r) / eta

    layer_end = 20 * eta
    t, r, v = 0.0, float(p.rho0), float(p.nu0)
    f = k_rhs(r, v)
    h = h0 if h0 is not None else min(eta / 10, 1e-4)
    times, rhos, nus = [t], [r], [v]
    n_acc = n_rej = 0
    t_ext, truncated = None, False
    while True:
        if t_end is not None and t >= t_end:
            break
        if t <= layer_end:
            h = min(h, eta / 2)
        if t_end is not None:
            h = min(h, t_end - t)
        if h < H_MIN:
            truncated = True
            t_ext = t + r / (2 * abs(v)) if v < 0 else t
            break
        out = _dp_step(k_rhs, t, r, v, h, f)
        if out is None:
            n_rej += 1
            h *= 0.5
            continue
        r_new, v_new, f_new, er, ev = out
        err = max(
            abs(er) / (atol + rtol * max(abs(r), abs(r_new))),
            abs(ev) / (atol + rtol * max(abs(v), abs(v_new))),
        )
        if not math.isfinite(err) or err > 1.0:
            n_rej += 1
            h *= max(0.2, 0.9 * err ** -0.2) if math.isfinite(err) else 0.2
            continue
        n_acc += 1
        if r_new <= tol:
            # bisection on the cubic Hermite dense output
            lo, hi = t, t + h
            while hi - lo > 1e-15 * max(1.0, hi):
                mid = 0.5 * (lo + hi)
                if _hermite(t, t + h, r, r_new, v, v_new, mid) > tol:
                    lo = mid
                else:
                    hi = mid
            t_ext = 0.5 * (lo + hi)
            times.append(t + h)
            rhos.append(r_new)
            nus.append(v_new)
            break
        t, r, v, f = t + h, r_new, v_new, f_new
        if n_acc % stride == 0 or (t_end is not None and t >= t_end):
            times.append(t)
            rhos.append(r)
            nus.append(v)
        h *= min(5.0, 0.9 * err ** -0.2) if err > 0 else 5.0
    if times[-1] != t and t_ext is None:
        times.append(t)
        rhos.append(r)
        nus.append(v)
    return OdeTrajectory(
        params=p,
        times=np.array(times),
        rho=np.array(rhos),
        nu=np.array(nus),
        t_extinction=t_ext,
        truncated=truncated,
        n_steps=n_acc,
        n_rejected=n_rej,
    )


def fixed_step_rk4(params: OdeParams, dt: float, t_end: float, stride: int = 1):
    """Classical RK4 with a fixed step; reference route for checking the adaptive integrator.

    Stops early if the radius would leave ``rho > 0``.  Returns ``(t, rho, nu)``.
    """
    n1, eta = params.n - 1, params.eta
    r, v, t = float(params.rho0), float(params.nu0), 0.0
    nsteps = int(round(t_end / dt))
    ts, rs, vs = [t], [r], [v]
    for k in range(1, nsteps + 1):
        a1 = v
        b1 = (-v - n1 / r) / eta
        r2 = r + 0.5 * dt * a1
        v2 = v + 0.5 * dt * b1
        if r2 <= 0:
            break
        b2 = (-v2 - n1 / r2) / eta
        r3 = r + 0.5 * dt * v2
        v3 = v + 0.5 * dt * b2
        if r3 <= 0:
            break
        b3 = (-v3 - n1 / r3) / eta
        r4 = r + dt * v3
        v4 = v + dt * b3
        if r4 <= 0:
            break
        b4 = (-v4 - n1 / r4) / eta
        r_new = r + dt / 6 * (a1 + 2 * v2 + 2 * v3 + v4)
        if r_new <= 0:
            break
        v = v + dt / 6 * (b1 + 2 * b2 + 2 * b3 + b4)
        r = r_new
        t = k * dt
        if k % stride == 0:
            ts.append(t)
            rs.append(r)
            vs.append(v)
    return np.array(ts), np.array(rs), np.array(vs)


def convergence_sweep(n: int, rho0: float, nu0: float, etas, T: float, t1: float, tol: float = 1e-9, n_eval: int = 20001):
    """Sup-norm distance of the inertial radius from mean curvature flow for each ``eta``.

    Returns rows ``{"eta", "sup_error_rho", "sup_error_nu"}`` sorted by ``eta``
    descending; the radius error is taken over ``[0, T]`` and the velocity
    error ``|nu + (n-1)/rho_mcf|`` over ``[t1, T]``.
    """
    if not T < t_max(n, rho0):
        raise OdeError("T must be below the classical extinction time")
    if not 0 < t1 < T:
        raise OdeError("need 0 < t1 < T")
    etas = list(etas)
    if any(not e > 0 for e in etas):
        raise OdeError("eta = 0 is the classical limit; use mcf_exact")
    rows = []
    for eta in sorted(etas, reverse=True):
        traj = integrate_to_extinction(OdeParams(n, eta, rho0, nu0, allow_outside=True), tol, t_end=T)
        tt = np.linspace(0.0, T, n_eval)
        rho, _ = traj.at(tt)
        tn = np.linspace(t1, T, n_eval)
        _, nu = traj.at(tn)
        rows.append(
            {
                "eta": eta,
                "sup_error_rho": float(np.max(np.abs(rho - mcf_exact(n, rho0, tt)))),
                "sup_error_nu": float(np.max(np.abs(nu + (n - 1) / mcf_exact(n, rho0, tn)))),
            }
        )
    return rows


# --------------------------------------------------------------------------- invariant checks


def invariant_region_margin(traj: OdeTrajectory) -> float:
    """Smallest of ``-nu`` and ``rho nu + n - 1`` over the stored samples (>= 0 inside Gamma)."""
    n1 = traj.params.n - 1
    ok = traj.rho > 0
    return float(min(np.min(-traj.nu[ok]), np.min(traj.rho[ok] * traj.nu[ok] + n1)))


def velocity_bound_margin(traj: OdeTrajectory, T: float) -> float:
    """``(n-1)^2/(rho0^2 - 2(n-1)T) - max nu^2`` on ``[0, T]``."""
    p = traj.params
    bound = (p.n - 1) ** 2 / (p.rho0**2 - 2 * (p.n - 1) * T)
    sel = traj.times <= T
    return float(bound - np.max(traj.nu[sel] ** 2))


def sandwich_margin(traj: OdeTrajectory, t_upto: float | None = None) -> float:
    """Margin of ``mcf_exact(t) <= rho(t) <= rho0 + nu0 t``; the upper bound only when ``nu0 < 0``."""
    p = traj.params
    tm = t_max(p.n, p.rho0)
    sel = traj.times <= (tm if t_upto is None else min(t_upto, tm))
    t, r = traj.times[sel], traj.rho[sel]
    m = float(np.min(r - mcf_exact(p.n, p.rho0, t)))
    if p.nu0 < 0:
        m = min(m, float(np.min(p.rho0 + p.nu0 * t - r)))
    return m


def extinction_bracket(params: OdeParams) -> tuple[float, float]:
    """``[T_max, rho0/|nu0|]``; the upper end is infinite when ``nu0 = 0``."""
    hi = params.rho0 / abs(params.nu0) if params.nu0 < 0 else math.inf
    return t_max(params.n, params.rho0), hi


def initial_layer_check(params: OdeParams, factor: float = 5.0, tol: float = 1e-9):
    """Deviation from the curvature law just after the initial layer versus its predicted size.

    At ``t* = 10 eta ln(1/eta)`` the transient ``chi(0) e^{-t/eta}/eta`` is
    negligible and what remains is the slow-manifold offset
    ``eta (n-1)^2 / rho^3``.  Returns ``(measured, predicted, ok)``.
    """
    p = params
    eta = p.eta
    t_star = 10 * eta * math.log(1 / eta)
    traj = integrate_to_extinction(p, tol, t_end=t_star)
    _, nu = traj.at(t_star)
    rho_o = mcf_exact(p.n, p.rho0, t_star)
    measured = abs(float(nu) + (p.n - 1) / rho_o)
    chi0 = eta * abs(p.nu0 + (p.n - 1) / p.rho0)
    predicted = chi0 * math.exp(-t_star / eta) / eta + eta * (p.n - 1) ** 2 / rho_o**3
    return measured, predicted, measured <= factor * predicted


def check_trajectory(traj: OdeTrajectory, T: float | None = None) -> list[dict]:
    """Run the invariant suite on one trajectory; returns ``[{name, pass, margin}]``."""
    p = traj.params
    tm = t_max(p.n, p.rho0)
    T = 0.9 * tm if T is None else T
    tol = 10 * 1e-9
    checks = []

    def add(name, margin, ok=None):
        checks.append({"name": name, "pass": bool(margin >= 0 if ok is None else ok), "margin": float(margin)})

    if p.in_gamma:
        add("ode.invariant_region", invariant_region_margin(traj) + tol)
        add("ode.velocity_bound", velocity_bound_margin(traj, T))
        add("ode.sandwich", sandwich_margin(traj) + tol)
        if traj.t_extinction is not None:
            lo, hi = extinction_bracket(p)
            add("ode.extinction_lower", traj.t_extinction - lo)
            if math.isfinite(hi):
                add("ode.extinction_upper", hi - traj.t_extinction)
    else:
        m = invariant_region_margin(traj)
        if m < 0:
            warnings.warn("initial data outside the invariant region; Gamma checks reported as warnings only")
        add("ode.invariant_region(warning)", m, ok=True)
    return checks
