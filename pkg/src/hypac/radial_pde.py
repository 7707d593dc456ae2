"""Finite-difference solver for the radial damped hyperbolic Allen-Cahn equation.

Solves, on the fast time scale,

    eps^2 tau u_tt + g(u) u_t = u_rr + (n-1)/r u_r - eps^-2 F'(u),   0 < r < 1,

with ``u(1, t) = 1`` and ``u_r(0, t) = 0``, as the first-order system
``u_t = w``, ``eps^2 tau w_t = L u - eps^-2 F'(u) - g(u) w`` advanced by
classical RK4 with a fixed step.

``L`` is written in flux form on the node grid ``r_i = i dr``: faces sit at
``r_{i+1/2}`` with area ``r_{i+1/2}^(n-1)`` and node ``i`` owns the shell
``[r_{i-1/2}, r_{i+1/2}]`` (clipped to ``[0, 1]``).  At the origin this gives
``L u_0 = 2n (u_1 - u_0) / dr^2``, i.e. ``n u_rr(0)`` with the even ghost node.
The same weights define the discrete energy in :mod:`hypac.diagnostics`, for
which the semi-discrete scheme dissipates exactly ``eps * sum V g w^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .potential import Damping, Potential, constant_damping, quartic_potential

MAX_CELLS = 10**7
BLOWUP = 10.0
STIFFNESS_RANGE = (-1.5, 1.5)


class BlowUpError(RuntimeError):
    def __init__(self, t: float, message: str = ""):
        super().__init__(f"solution left the admissible range at t={t:.10g}" + (f": {message}" if message else ""))
        self.t = t
        self.partial = None


@dataclass(frozen=True)
class PdeParams:
    n: int = 2
    eps: float = 0.02
    tau: float = 1.0
    potential: Potential = field(default_factory=quartic_potential)
    damping: Damping = field(default_factory=constant_damping)
    t_end: float = 0.18
    boundary_value: float = 1.0

    def __post_init__(self):
        if self.n not in (2, 3):
            raise ValueError(f"dimension must be 2 or 3, got {self.n}")
        if not 0 < self.eps <= 0.2:
            raise ValueError(f"eps must lie in (0, 0.2], got {self.eps}")
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if not self.t_end >= 0:
            raise ValueError(f"t_end must be nonnegative, got {self.t_end}")
        if self.boundary_value not in (-1.0, 1.0):
            raise ValueError("Dirichlet value must be +1 or -1")

    @property
    def eta(self) -> float:
        return self.eps**2 * self.tau


@dataclass(frozen=True, eq=False)
class RadialGrid:
    n_cells: int
    dr: float
    r: np.ndarray

    def check_resolution(self, eps: float) -> None:
        if self.dr > eps / 8 * (1 + 1e-12):
            raise ValueError(f"grid too coarse: dr={self.dr:g} > eps/8={eps / 8:g}")

    def weights(self, n: int) -> "RadialWeights":
        return _weights(self, n)


@dataclass(frozen=True, eq=False)
class RadialWeights:
    """Face areas ``A`` (length N) and node shell volumes ``V`` (length N+1) of the radial measure."""

    A: np.ndarray
    V: np.ndarray
    dr: float

    def integrate(self, f) -> float:
        """``int_0^1 f(r) r^(n-1) dr`` by the node shell quadrature."""
        return float(np.dot(self.V, f))

    def laplacian(self, u: np.ndarray) -> np.ndarray:
        flux = self.A * np.diff(u) / self.dr
        out = np.zeros_like(u)
        out[:-1] = flux
        out[1:-1] -= flux[:-1]
        out[:-1] /= self.V[:-1]
        return out


_WEIGHT_CACHE: dict = {}


def _weights(grid: RadialGrid, n: int) -> RadialWeights:
    key = (id(grid), n)
    hit = _WEIGHT_CACHE.get(key)
    if hit is not None and hit[0] is grid:
        return hit[1]
    faces = grid.r[:-1] + 0.5 * grid.dr
    edges = np.concatenate([[0.0], faces, [1.0]])
    V = (edges[1:] ** n - edges[:-1] ** n) / n
    w = RadialWeights(A=faces ** (n - 1), V=V, dr=grid.dr)
    if len(_WEIGHT_CACHE) > 64:
        _WEIGHT_CACHE.clear()
    _WEIGHT_CACHE[key] = (grid, w)
    return w


@dataclass(frozen=True, eq=False)
class FieldState:
    t: float
    u: np.ndarray
    w: np.ndarray

    def check(self, boundary_value: float = 1.0) -> None:
        if self.u[-1] != boundary_value:
            raise ValueError(f"Dirichlet value violated: u(1)={self.u[-1]!r}")
        if not (np.all(np.isfinite(self.u)) and np.all(np.isfinite(self.w))):
            raise BlowUpError(self.t, "non-finite values")
        if np.max(np.abs(self.u)) > BLOWUP:
            raise BlowUpError(self.t, f"|u| exceeded {BLOWUP}")


def build_grid(eps: float, points_per_eps: int = 10) -> RadialGrid:
    """Uniform nodes on ``[0, 1]`` with ``ceil(points_per_eps / eps)`` cells."""
    if points_per_eps < 8:
        raise ValueError("need at least 8 points per eps")
    n_cells = math.ceil(points_per_eps / eps - 1e-9)
    if n_cells > MAX_CELLS:
        raise ValueError(f"{n_cells} cells exceeds the resource guard of {MAX_CELLS}")
    r = np.linspace(0.0, 1.0, n_cells + 1)
    return RadialGrid(n_cells=n_cells, dr=1.0 / n_cells, r=r)


def stable_dt(params: PdeParams, grid: RadialGrid, safety: float = 0.5) -> float:
    """Fixed RK4 step bounded by the wave CFL, damping relaxation and reaction time scales."""
    if not 0 < safety <= 1:
        raise ValueError(f"safety must lie in (0, 1], got {safety}")
    eps, tau = params.eps, params.tau
    s = np.linspace(*STIFFNESS_RANGE, 401)
    fpp_max = float(np.max(np.abs(params.potential.Fpp(s))))
    g_max = params.damping.max_on(STIFFNESS_RANGE)
    return safety * min(eps * math.sqrt(tau) * grid.dr, eps**2 * tau / g_max, eps**2 / math.sqrt(fpp_max))


def to_slow_time(t_fast, eps: float):
    """Fast-scale time to the original (slow) scale, ``t / eps^2``."""
    return t_fast / eps**2


def to_fast_time(t_slow, eps: float):
    return t_slow * eps**2


class _System:
    """Right-hand side of the first-order system on one grid."""

    def __init__(self, params: PdeParams, grid: RadialGrid):
        self.p = params
        self.wts = grid.weights(params.n)
        self.inv_eta = 1.0 / params.eta
        self.inv_eps2 = 1.0 / params.eps**2
        self.Fp = params.potential.Fp
        self.g = params.damping.g

    def __call__(self, u, w):
        dw = (self.wts.laplacian(u) - self.inv_eps2 * self.Fp(u) - self.g(u) * w) * self.inv_eta
        dw[-1] = 0.0
        du = w.copy()
        du[-1] = 0.0
        return du, dw


_SYSTEMS: dict = {}


def _system(params: PdeParams, grid: RadialGrid) -> _System:
    key = (id(params), id(grid))
    hit = _SYSTEMS.get(key)
    if hit is not None and hit[0] is params and hit[1] is grid:
        return hit[2]
    sys = _System(params, grid)
    if len(_SYSTEMS) > 64:
        _SYSTEMS.clear()
    _SYSTEMS[key] = (params, grid, sys)
    return sys


def _rk4(sys: _System, u, w, dt):
    k1u, k1w = sys(u, w)
    k2u, k2w = sys(u + 0.5 * dt * k1u, w + 0.5 * dt * k1w)
    k3u, k3w = sys(u + 0.5 * dt * k2u, w + 0.5 * dt * k2w)
    k4u, k4w = sys(u + dt * k3u, w + dt * k3w)
    u_new = u + dt / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
    w_new = w + dt / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w)
    return u_new, w_new


def step(params: PdeParams, grid: RadialGrid, state: FieldState, dt: float) -> FieldState:
    """Advance ``state`` by one RK4 step of size ``dt``."""
    if dt > stable_dt(params, grid, 1.0) * (1 + 1e-12):
        raise ValueError(f"dt={dt:g} exceeds the stability bound {stable_dt(params, grid, 1.0):g}")
    return _step(_system(params, grid), params.boundary_value, state, dt)


def _step(sys: _System, bc: float, state: FieldState, dt: float) -> FieldState:
    u, w = _rk4(sys, state.u, state.w, dt)
    u[-1] = bc
    w[-1] = 0.0
    t = state.t + dt
    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(w))):
        raise BlowUpError(t, "non-finite values")
    if np.max(np.abs(u)) > BLOWUP:
        raise BlowUpError(t, f"|u| exceeded {BLOWUP}")
    return FieldState(t, u, w)


@dataclass
class RunResult:
    final: FieldState
    snapshots: list[FieldState]
    series: list
    dt: float
    n_steps: int


def run(
    params: PdeParams,
    grid: RadialGrid,
    init: FieldState,
    snapshot_times: Sequence[float] = (),
    *,
    safety: float = 0.5,
    hook: Callable[[FieldState], object] | None = None,
    stride: int = 1,
) -> RunResult:
    """Integrate from ``init.t`` to ``params.t_end`` with a fixed step ``stable_dt(safety)``.

    The step before each snapshot time (and before ``t_end``) is shortened to
    land on it exactly.  ``hook(state)`` is called at the initial time, every
    ``stride`` steps, at snapshots and at the end; its return values form
    ``series``.
    """
    grid.check_resolution(params.eps)
    init.check(params.boundary_value)
    snaps = [float(s) for s in snapshot_times]
    if any(b <= a for a, b in zip(snaps, snaps[1:])):
        raise ValueError("snapshot times must be strictly increasing")
    if snaps and (snaps[0] < init.t or snaps[-1] > params.t_end):
        raise ValueError("snapshot times must lie in [t0, t_end]")
    dt = stable_dt(params, grid, safety)
    sys = _system(params, grid)
    bc = params.boundary_value

    series = []
    snapshots: list[FieldState] = []
    state = FieldState(init.t, init.u.copy(), init.w.copy())
    last_hooked = None
    if hook is not None:
        series.append(hook(state))
        last_hooked = state.t
    targets = sorted(set(snaps) | {float(params.t_end)})
    if snaps and snaps[0] == init.t:
        snapshots.append(state)
    n_steps = 0
    try:
        for target in targets:
            while state.t < target:
                h = target - state.t
                if h > dt * (1 + 1e-9):
                    h = dt
                    state = _step(sys, bc, state, h)
                else:
                    state = _step(sys, bc, state, h)
                    state = FieldState(target, state.u, state.w)
                n_steps += 1
                if hook is not None and (n_steps % stride == 0 or state.t == target):
                    series.append(hook(state))
                    last_hooked = state.t
            if target in snaps and (not snapshots or snapshots[-1].t != target):
                snapshots.append(state)
    except BlowUpError as exc:
        exc.partial = RunResult(state, snapshots, series, dt, n_steps)
        raise
    if hook is not None and last_hooked != state.t:
        series.append(hook(state))
    return RunResult(final=state, snapshots=snapshots, series=series, dt=dt, n_steps=n_steps)
