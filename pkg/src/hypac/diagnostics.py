"""Fixed-frame functionals: energy and its dissipation, Psi-variation bounds, interface tracking
and L1 distances to sharp step functions.

Spatial integrals ``int_0^1 f r^(n-1) dr`` use the solver's shell volumes and
gradient energies its face areas (see :mod:`hypac.radial_pde`), so the
dissipation identity below is exact for the semi-discrete scheme and its
residual measures time-integration error only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .potential import Damping, Potential, psi_values
from .radial_pde import FieldState, RadialGrid


@dataclass
class EnergyReport:
    t: float
    E_eps: float
    dissipation_lhs: float = np.nan
    dissipation_rhs: float = np.nan
    residual: float = np.nan
    psi_grad_bv: float = np.nan
    interface_rho: float | None = None


# --------------------------------------------------------------------------- energy


def energy_parts(state: FieldState, grid: RadialGrid, eps: float, tau: float, n: int, potential: Potential):
    """``(kinetic, gradient, potential)`` contributions to ``E_eps``."""
    wts = grid.weights(n)
    kin = 0.5 * eps**3 * tau * wts.integrate(state.w**2)
    grad = 0.5 * eps * float(np.dot(wts.A, np.diff(state.u) ** 2)) / grid.dr
    pot = wts.integrate(potential.F(state.u)) / eps
    return kin, grad, pot


def energy_eps(state: FieldState, grid: RadialGrid, eps: float, tau: float, n: int, potential: Potential, damping: Damping | None = None) -> float:
    """``int [eps^3 tau/2 u_t^2 + eps/2 u_r^2 + F(u)/eps] r^(n-1) dr``."""
    return float(sum(energy_parts(state, grid, eps, tau, n, potential)))


def dissipation_rate(state: FieldState, grid: RadialGrid, eps: float, n: int, damping: Damping) -> float:
    """``eps int g(u) u_t^2 r^(n-1) dr``, the instantaneous energy loss."""
    return eps * grid.weights(n).integrate(damping.g(state.u) * state.w**2)


def residuals_from_series(t, E, D) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-interval ``(lhs, rhs, lhs - rhs)`` with the dissipation integrated by the time trapezoid."""
    t, E, D = (np.asarray(x, dtype=float) for x in (t, E, D))
    lhs = 0.5 * np.diff(t) * (D[1:] + D[:-1])
    rhs = E[:-1] - E[1:]
    return lhs, rhs, lhs - rhs


def dissipation_residual(
    states: Sequence[FieldState], grid: RadialGrid, eps: float, tau: float, n: int, potential: Potential, damping: Damping
) -> np.ndarray:
    """Residual of ``eps int int g u_t^2 = E(t1) - E(t2)`` over consecutive states."""
    t = [s.t for s in states]
    E = [energy_eps(s, grid, eps, tau, n, potential) for s in states]
    D = [dissipation_rate(s, grid, eps, n, damping) for s in states]
    return residuals_from_series(t, E, D)[2]


# --------------------------------------------------------------------------- Psi bounds


def psi_grad_bv(state: FieldState, grid: RadialGrid, n: int, potential: Potential) -> float:
    """Discrete ``int |d/dr Psi(u)| r^(n-1) dr``.

    Per cell, ``sqrt(2 Fbar) |du/dr|`` with ``Fbar`` the volume-weighted mean of
    ``F`` at the two end nodes, weighted by ``min(cell volume, face area * dr)``.
    With that split Young's inequality holds cell by cell, so the result never
    exceeds the gradient plus potential part of :func:`energy_eps`.
    """
    wts = grid.weights(n)
    r, dr = grid.r, grid.dr
    faces = r[:-1] + 0.5 * dr
    v_plus = (faces**n - r[:-1] ** n) / n
    v_minus = (r[1:] ** n - faces**n) / n
    F = potential.F(state.u)
    cell_vol = v_plus + v_minus
    Fbar = (v_plus * F[:-1] + v_minus * F[1:]) / cell_vol
    weight = np.minimum(cell_vol, wts.A * dr)
    return float(np.sum(weight * np.sqrt(2.0 * Fbar) * np.abs(np.diff(state.u)) / dr))


@dataclass
class PsiVariation:
    times: np.ndarray
    grad_bv: np.ndarray
    time_bv: np.ndarray  # consecutive intervals
    holder: np.ndarray  # (i, j) ratio for every pair i < j, nan elsewhere
    M: float
    kappa: float

    @property
    def max_holder(self) -> float:
        return float(np.nanmax(self.holder)) if np.any(np.isfinite(self.holder)) else 0.0


def psi_time_variation(s1: FieldState, s2: FieldState, grid: RadialGrid, n: int, potential: Potential) -> float:
    """``int |Psi(u(t2)) - Psi(u(t1))| r^(n-1) dr``."""
    return grid.weights(n).integrate(np.abs(psi_values(potential, s2.u) - psi_values(potential, s1.u)))


def psi_variation(
    states: Sequence[FieldState], grid: RadialGrid, n: int, potential: Potential, kappa: float, M: float
) -> PsiVariation:
    """Spatial BV norm per state and the Hoelder-in-time ratio for every pair.

    ``holder[i, j] = int |Psi(u_j) - Psi(u_i)| / (sqrt(2/kappa) M (t_j - t_i)^(1/2))``,
    which the theory bounds by one.
    """
    t = np.array([s.t for s in states])
    psis = [psi_values(potential, s.u) for s in states]
    wts = grid.weights(n)
    grad = np.array([psi_grad_bv(s, grid, n, potential) for s in states])
    m = len(states)
    holder = np.full((m, m), np.nan)
    for i in range(m):
        for j in range(i + 1, m):
            if t[j] > t[i]:
                tv = wts.integrate(np.abs(psis[j] - psis[i]))
                holder[i, j] = tv / (np.sqrt(2.0 / kappa) * M * np.sqrt(t[j] - t[i]))
    time_bv = np.array([wts.integrate(np.abs(psis[k + 1] - psis[k])) for k in range(m - 1)])
    return PsiVariation(times=t, grad_bv=grad, time_bv=time_bv, holder=holder, M=M, kappa=kappa)


def potential_mass(state: FieldState, grid: RadialGrid, n: int, potential: Potential) -> float:
    """``int F(u) r^(n-1) dr``; bounded by ``eps M`` along a run."""
    return grid.weights(n).integrate(potential.F(state.u))


# --------------------------------------------------------------------------- interface


def extract_interface(state: FieldState, grid: RadialGrid, prev_rho: float | None = None) -> float | None:
    """Radius of the zero level set by linear interpolation across sign changes.

    With several crossings the one nearest ``prev_rho`` is returned, or the
    outermost one when there is no previous radius.  ``None`` if ``u`` does not
    change sign.
    """
    u, r = state.u, grid.r
    zero = np.nonzero(u == 0.0)[0]
    i = np.nonzero(u[:-1] * u[1:] < 0.0)[0]
    cands = r[i] - u[i] * (r[i + 1] - r[i]) / (u[i + 1] - u[i])
    cands = np.concatenate([cands, r[zero]])
    # an exact zero only counts if u changes sign around it
    if zero.size:
        keep = []
        for k, c in enumerate(cands):
            if k < i.size:
                keep.append(True)
                continue
            j = zero[k - i.size]
            left = u[:j][u[:j] != 0.0]
            right = u[j + 1 :][u[j + 1 :] != 0.0]
            keep.append(bool(left.size and right.size and left[-1] * right[0] < 0))
        cands = cands[np.array(keep, dtype=bool)]
    if cands.size == 0:
        return None
    if prev_rho is None:
        return float(np.max(cands))
    return float(cands[np.argmin(np.abs(cands - prev_rho))])


def l1_step_distance(state: FieldState, grid: RadialGrid, n: int, rho_ref: float) -> float:
    """``int_0^1 |u - omega| r^(n-1) dr`` with ``omega = -1`` below ``rho_ref`` and ``+1`` above.

    Exact for the piecewise-linear interpolant of ``u``: the step and the
    crossings of ``u`` with ``+-1`` become knots, so the integrand is a
    polynomial on each piece and 3-point Gauss-Legendre is exact.
    """
    if not 0.0 <= rho_ref <= 1.0:
        raise ValueError("rho_ref must lie in [0, 1]")
    r, u = grid.r, state.u
    extra = [rho_ref]
    for level in (-1.0, 1.0):
        d = u - level
        i = np.nonzero(d[:-1] * d[1:] < 0.0)[0]
        extra.extend(r[i] - d[i] * (r[i + 1] - r[i]) / (d[i + 1] - d[i]))
    knots = np.unique(np.concatenate([r, extra]))
    gx, gw = np.polynomial.legendre.leggauss(3)
    a, b = knots[:-1], knots[1:]
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    x = mid[:, None] + half[:, None] * gx[None, :]
    ux = np.interp(x, r, u)
    omega = np.where(x < rho_ref, -1.0, 1.0)
    vals = np.abs(ux - omega) * x ** (n - 1)
    return float(np.sum(half * (vals @ gw)))


def omega_pair_distance(rho_eps: float, rho_0ref: float, n: int) -> float:
    """L1 distance ``(2/n) |rho_eps^n - rho_0ref^n|`` between two sharp radial steps."""
    for x in (rho_eps, rho_0ref):
        if not 0.0 <= x <= 1.0:
            raise ValueError("radii must lie in [0, 1]")
    return 2.0 / n * abs(rho_eps**n - rho_0ref**n)


def velocity_curvature_check(t, rho, g_bar: float, n: int, trim: float = 0.1):
    """Compare ``g_bar |rho'|`` with the curvature ``(n-1)/rho``.

    The velocity is taken by centered differences; the first and last ``trim``
    fraction of the series is dropped.  Returns rows ``(t, measured_V, K/g_bar, ratio)``.
    """
    t = np.asarray(t, dtype=float)
    rho = np.asarray(rho, dtype=float)
    if t.size != rho.size or np.any(np.diff(t) <= 0):
        raise ValueError("need a series strictly increasing in t")
    lo, hi = t[0] + trim * (t[-1] - t[0]), t[-1] - trim * (t[-1] - t[0])
    idx = np.nonzero((t >= lo) & (t <= hi))[0]
    idx = idx[(idx > 0) & (idx < t.size - 1)]
    if idx.size < 5:
        raise ValueError(f"only {idx.size} usable samples away from the ends; need at least 5")
    V = (rho[idx + 1] - rho[idx - 1]) / (t[idx + 1] - t[idx - 1])
    K = (n - 1) / rho[idx]
    return [
        {"t": float(ti), "measured_V": float(v), "K_over_gbar": float(k / g_bar), "ratio": float(g_bar * abs(v) / k)}
        for ti, v, k in zip(t[idx], V, K)
    ]


# --------------------------------------------------------------------------- run recorder


@dataclass
class SeriesRecorder:
    """Run hook collecting energy, dissipation rate and the tracked interface radius.

    ``references`` maps a name to a function ``t -> radius``; for each one the
    L1 distance of ``u`` to the corresponding step function is recorded as
    ``l1_<name>``.  States whose time matches ``keep_times`` (or every
    ``keep_every`` hook calls) are retained.
    """

    grid: RadialGrid
    eps: float
    tau: float
    n: int
    potential: Potential
    damping: Damping
    references: dict[str, Callable[[float], float]] = field(default_factory=dict)
    keep_every: int | None = None
    rows: list = field(default_factory=list)
    kept: list = field(default_factory=list)
    _prev_rho: float | None = None
    _calls: int = 0

    def __call__(self, state: FieldState):
        kin, grad, pot = energy_parts(state, self.grid, self.eps, self.tau, self.n, self.potential)
        rho = extract_interface(state, self.grid, self._prev_rho)
        if rho is not None:
            self._prev_rho = rho
        row = {
            "t": state.t,
            "E": kin + grad + pot,
            "E_grad_pot": grad + pot,
            "D": dissipation_rate(state, self.grid, self.eps, self.n, self.damping),
            "U2": self.grid.weights(self.n).integrate(state.w**2),
            "rho": np.nan if rho is None else rho,
            "u_max": float(np.max(np.abs(state.u))),
            "F_mass": pot * self.eps,
        }
        for name, ref in self.references.items():
            rr = ref(state.t)
            row[f"l1_{name}"] = np.nan if rr is None else l1_step_distance(state, self.grid, self.n, rr)
        self.rows.append(row)
        if self.keep_every is not None and self._calls % self.keep_every == 0:
            self.kept.append(state)
        self._calls += 1
        return row

    def column(self, key: str) -> np.ndarray:
        return np.array([r[key] for r in self.rows], dtype=float)

    def extinction_time(self) -> float | None:
        """First recorded time at which a previously present interface is gone."""
        rho = self.column("rho")
        t = self.column("t")
        seen = False
        for ti, ri in zip(t, rho):
            if np.isfinite(ri):
                seen = True
            elif seen:
                return float(ti)
        return None

    def residuals(self) -> np.ndarray:
        return residuals_from_series(self.column("t"), self.column("E"), self.column("D"))[2]
