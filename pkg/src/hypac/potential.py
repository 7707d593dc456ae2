"""Double-well potentials, damping coefficients and the scalar constants built from them.

The potential ``F`` has wells of equal depth at ``s = -1`` and ``s = +1``; the
reaction term of the PDE is ``f = -F'``.  Everything here is pure and
immutable, so instances may be shared freely between threads and processes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial import Polynomial
from scipy import integrate
from scipy.interpolate import CubicHermiteSpline, PchipInterpolator

ScalarFn = Callable[[np.ndarray], np.ndarray]

WELL_TOL = 1e-10
QUAD_TOL = 1e-10
WELL_SPLIT = 1e-6
N_VALIDATION = 401

# 10-point Gauss-Legendre rule on [-1, 1]
_GL_X, _GL_W = np.polynomial.legendre.leggauss(10)


class PotentialError(ValueError):
    """Raised when a potential or damping function violates its structural assumptions."""


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance.

    The partial result is kept on the exception for diagnostics.
    """

    def __init__(self, message: str, value: float, abserr: float):
        super().__init__(f"{message} (partial value {value!r}, error estimate {abserr:.3e})")
        self.value = value
        self.abserr = abserr


@dataclass(frozen=True, eq=False)
class Potential:
    """Double-well energy density with its first two derivatives.

    ``gamma``, ``c1``, ``C1`` and ``Kgrowth`` are the optional constants of the
    polynomial growth condition ``c1 |s|^(gamma/2+1) <= F(s) <= C1 |s|^gamma``
    for ``|s| >= Kgrowth``; they are only used by :meth:`validate`.
    """

    F: ScalarFn
    Fp: ScalarFn
    Fpp: ScalarFn
    name: str = "custom"
    gamma: float | None = None
    c1: float | None = None
    C1: float | None = None
    Kgrowth: float | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    def f(self, s):
        """Bistable reaction term ``-F'(s)``."""
        return -self.Fp(s)

    def validate(self, interval: tuple[float, float] = (-2.0, 2.0)) -> None:
        wells = np.array([-1.0, 1.0])
        if np.any(np.abs(self.F(wells)) > WELL_TOL) or np.any(np.abs(self.Fp(wells)) > WELL_TOL):
            raise PotentialError(f"{self.name}: F and F' must vanish at the wells +-1")
        if np.any(self.Fpp(wells) <= 0.0):
            raise PotentialError(f"{self.name}: wells must be nondegenerate, F''(+-1) > 0")
        s = np.linspace(*interval, N_VALIDATION)
        s = s[np.min(np.abs(s[:, None] - wells[None, :]), axis=1) >= 1e-3]
        if np.any(self.F(s) <= 0.0):
            bad = s[self.F(s) <= 0.0][0]
            raise PotentialError(f"{self.name}: F must be positive away from the wells (F({bad:g}) <= 0)")
        if None not in (self.gamma, self.c1, self.C1, self.Kgrowth):
            lo, hi = self.Kgrowth, max(2.0 * self.Kgrowth, self.Kgrowth + 4.0)
            mag = np.linspace(lo, hi, N_VALIDATION)
            ss = np.concatenate([-mag, mag])
            Fs = self.F(ss)
            lower = self.c1 * np.abs(ss) ** (self.gamma / 2 + 1)
            upper = self.C1 * np.abs(ss) ** self.gamma
            if np.any(Fs < lower) or np.any(Fs > upper):
                raise PotentialError(f"{self.name}: growth condition violated for |s| >= {self.Kgrowth}")


@dataclass(frozen=True, eq=False)
class Damping:
    """Damping coefficient ``g`` with a certified positive lower bound ``kappa``."""

    g: ScalarFn
    kappa: float
    name: str = "custom"

    def validate(self, interval: tuple[float, float] = (-1.5, 1.5)) -> None:
        if not self.kappa > 0:
            raise PotentialError(f"damping {self.name}: kappa must be positive, got {self.kappa}")
        s = np.linspace(*interval, N_VALIDATION)
        gs = np.broadcast_to(self.g(s), s.shape)
        if np.any(gs < self.kappa):
            raise PotentialError(
                f"damping {self.name}: g drops to {gs.min():g} < kappa={self.kappa:g} on {interval}"
            )

    def max_on(self, interval: tuple[float, float] = (-1.5, 1.5)) -> float:
        s = np.linspace(*interval, N_VALIDATION)
        return float(np.max(np.broadcast_to(self.g(s), s.shape)))


@dataclass(frozen=True)
class WaveProfile:
    """Sampled standing wave ``U0`` on a symmetric, uniform grid of stretched coordinates."""

    z_samples: np.ndarray
    u_samples: np.ndarray

    def __call__(self, z):
        """Monotone cubic interpolation of the samples, clamped to +-1 outside the sampled range."""
        z = np.asarray(z, dtype=float)
        interp = PchipInterpolator(self.z_samples, self.u_samples, extrapolate=False)
        out = interp(z)
        out = np.where(z > self.z_samples[-1], 1.0, out)
        out = np.where(z < self.z_samples[0], -1.0, out)
        return out


def quartic_potential() -> Potential:
    """``F(s) = (s^2 - 1)^2 / 4``, the standard example with reaction term ``s - s^3``."""
    return Potential(
        F=lambda s: 0.25 * (np.square(s) - 1.0) ** 2,
        Fp=lambda s: s**3 - s,
        Fpp=lambda s: 3.0 * np.square(s) - 1.0,
        name="quartic",
        gamma=4.0,
        c1=0.05,
        C1=0.25,
        Kgrowth=2.0,
    )


def polynomial_potential(coeffs, name: str | None = None) -> Potential:
    """Potential from ascending polynomial coefficients ``F(s) = sum coeffs[k] s^k``."""
    P = Polynomial(np.asarray(coeffs, dtype=float))
    dP, d2P = P.deriv(1), P.deriv(2)
    pot = Potential(F=P, Fp=dP, Fpp=d2P, name=name or f"poly:{','.join(map(str, coeffs))}")
    pot.validate()
    return pot


def constant_damping(k: float = 1.0) -> Damping:
    k = float(k)
    return Damping(g=lambda s: np.full_like(np.asarray(s, dtype=float), k), kappa=k, name=f"const:{k:g}")


def affine_damping(a: float, b: float, interval: tuple[float, float] = (-1.5, 1.5)) -> Damping:
    """``g(s) = a + b s``; ``kappa`` is its minimum over ``interval``."""
    a, b = float(a), float(b)
    kappa = min(a + b * interval[0], a + b * interval[1])
    d = Damping(g=lambda s: a + b * np.asarray(s, dtype=float), kappa=kappa, name=f"affine:{a:g},{b:g}")
    d.validate(interval)
    return d


def potential_from_spec(spec: str) -> Potential:
    """Parse ``"quartic"`` or ``"poly:c0,c1,..."`` (ascending coefficients)."""
    spec = spec.strip()
    if spec == "quartic":
        return quartic_potential()
    if spec.startswith("poly:"):
        return polynomial_potential([float(c) for c in spec[5:].split(",")], name=spec)
    raise ValueError(f"unknown potential {spec!r}")


def damping_from_spec(spec: str) -> Damping:
    """Parse ``"const:<k>"`` or ``"affine:<a>,<b>"`` (meaning ``g(s) = a + b s``)."""
    spec = spec.strip()
    kind, _, args = spec.partition(":")
    try:
        vals = [float(v) for v in args.split(",")] if args else []
    except ValueError as exc:
        raise ValueError(f"bad damping arguments in {spec!r}") from exc
    if kind == "const" and len(vals) == 1:
        d = constant_damping(vals[0])
        d.validate()
        return d
    if kind == "affine" and len(vals) == 2:
        return affine_damping(*vals)
    raise ValueError(f"unknown damping {spec!r}")


# --------------------------------------------------------------------------- quadrature


def _breakpoints(a: float, b: float) -> list[float]:
    pts = [-1.0 - WELL_SPLIT, -1.0, -1.0 + WELL_SPLIT, 1.0 - WELL_SPLIT, 1.0, 1.0 + WELL_SPLIT]
    lo, hi = min(a, b), max(a, b)
    return [lo] + [x for x in pts if lo < x < hi] + [hi]


def _quad(fn: Callable[[float], float], a: float, b: float) -> float:
    if a == b:
        return 0.0
    sign = 1.0 if b > a else -1.0
    knots = _breakpoints(a, b)
    total, err = 0.0, 0.0
    for lo, hi in zip(knots[:-1], knots[1:]):
        val, abserr, info = integrate.quad(fn, lo, hi, epsabs=QUAD_TOL / 10, epsrel=1e-13, limit=200, full_output=1)[:3]
        total += val
        err += abserr
    if err > QUAD_TOL:
        raise QuadratureError(f"integral over [{a}, {b}] did not converge", sign * total, err)
    return sign * total


def _sqrt2F(p: Potential):
    return lambda s: float(np.sqrt(2.0 * max(float(p.F(s)), 0.0)))


def psi(p: Potential, x: float) -> float:
    """``Psi(x) = int_{-1}^x sqrt(2 F(s)) ds``."""
    if not np.isfinite(x):
        raise ValueError("psi needs a finite argument")
    return _quad(_sqrt2F(p), -1.0, float(x))


def psi_values(p: Potential, x) -> np.ndarray:
    """Vectorised ``Psi`` through a cached piecewise-Hermite table with exact slopes.

    Knots include +-1, where ``sqrt(2F)`` has its kinks, so every cubic piece is
    smooth; accuracy is far below the quadrature tolerance.
    """
    x = np.asarray(x, dtype=float)
    lim = max(2.0, float(np.max(np.abs(x))) if x.size else 0.0)
    lim = float(np.ceil(lim))
    key = ("psi_table", lim)
    table = p._cache.get(key)
    if table is None:
        knots = np.unique(np.concatenate([np.linspace(-lim, lim, int(800 * lim) + 1), [-1.0, 1.0]]))
        # panel integrals by Gauss-Legendre; each panel is smooth
        mid = 0.5 * (knots[1:] + knots[:-1])
        half = 0.5 * (knots[1:] - knots[:-1])
        nodes = mid[:, None] + half[:, None] * _GL_X[None, :]
        vals = np.sqrt(2.0 * np.maximum(p.F(nodes), 0.0))
        panels = half * (vals @ _GL_W)
        cum = np.concatenate([[0.0], np.cumsum(panels)])
        i_m1 = int(np.searchsorted(knots, -1.0))
        cum -= cum[i_m1]
        slopes = np.sqrt(2.0 * np.maximum(p.F(knots), 0.0))
        table = CubicHermiteSpline(knots, cum, slopes)
        p._cache[key] = table
    return table(x)


def sqrt_f_l1(p: Potential) -> float:
    return _quad(lambda s: float(np.sqrt(max(float(p.F(s)), 0.0))), -1.0, 1.0)


def scalar_constants(p: Potential, d: Damping) -> tuple[float, float, float]:
    """Return ``(c0, ||sqrt F||_L1, g_bar)``.

    ``c0 = Psi(1)`` is the energy of one transition layer and ``g_bar`` the
    ``sqrt(F)``-weighted mean of the damping over ``[-1, 1]``.
    """
    c0 = psi(p, 1.0)
    l1 = sqrt_f_l1(p)
    weighted = _quad(lambda s: float(np.sqrt(max(float(p.F(s)), 0.0)) * d.g(np.asarray(s))), -1.0, 1.0)
    return c0, l1, weighted / l1


# --------------------------------------------------------------------------- standing wave


class _HalfWave:
    """Inverse of ``z(u) = int_0^u ds / sqrt(2F(s))`` on one side of the origin.

    Uses ``u = sign (1 - e^{-y})`` so that ``dz/dy`` stays bounded at the well;
    beyond ``y_max = -ln(delta)`` the slope is frozen, which continues the
    profile by its exponential tail.
    """

    def __init__(self, p: Potential, sign: float, delta: float, n_knots: int = 4001):
        self.p, self.sign = p, sign
        self.y_max = -np.log(delta)
        self.y = np.linspace(0.0, self.y_max, n_knots)
        mid = 0.5 * (self.y[1:] + self.y[:-1])
        half = 0.5 * (self.y[1:] - self.y[:-1])
        nodes = mid[:, None] + half[:, None] * _GL_X[None, :]
        panels = half * (self._slope(nodes) @ _GL_W)
        self.z = np.concatenate([[0.0], np.cumsum(panels)])
        self.slope_max = float(self._slope(np.array(self.y_max)))

    def _slope(self, y):
        q = np.exp(-y)
        s = self.sign * (1.0 - q)
        return q / np.sqrt(2.0 * self.p.F(s))

    def _z_of_y(self, y):
        y = np.asarray(y, dtype=float)
        inside = np.minimum(y, self.y_max)
        k = np.clip(np.searchsorted(self.y, inside, side="right") - 1, 0, len(self.y) - 2)
        a = self.y[k]
        half = 0.5 * (inside - a)
        nodes = (a + half)[..., None] + half[..., None] * _GL_X
        z = self.z[k] + half * (self._slope(nodes) @ _GL_W)
        return z + self.slope_max * np.maximum(y - self.y_max, 0.0)

    def _dz(self, y):
        return np.where(y > self.y_max, self.slope_max, self._slope(np.minimum(y, self.y_max)))

    def u_at(self, zabs: np.ndarray) -> np.ndarray:
        z_top = self.z[-1]
        y = np.where(
            zabs <= z_top,
            np.interp(zabs, self.z, self.y),
            self.y_max + (zabs - z_top) / self.slope_max,
        )
        for _ in range(6):
            y = np.maximum(y - (self._z_of_y(y) - zabs) / self._dz(y), 0.0)
        return self.sign * (1.0 - np.exp(-y))


def _wave_inverse(p: Potential, delta: float = 1e-8):
    if np.any(p.Fpp(np.array([-1.0, 1.0])) <= 0.0):
        raise PotentialError(f"{p.name}: F''(+-1) <= 0, the layer profile does not converge to the wells")
    key = ("wave", delta)
    halves = p._cache.get(key)
    if halves is None:
        halves = (_HalfWave(p, -1.0, delta), _HalfWave(p, 1.0, delta))
        p._cache[key] = halves
    return halves


def standing_wave(p: Potential, z_max: float = 20.0, n_pts: int = 8001) -> WaveProfile:
    """Heteroclinic layer ``U0'' + f(U0) = 0`` with ``U0(0) = 0``, ``U0(+-inf) = +-1``.

    Built by inverting the first integral ``U0' = sqrt(2 F(U0))``; for the
    quartic potential this is ``tanh(z / sqrt 2)``.
    """
    if not z_max > 0:
        raise ValueError("z_max must be positive")
    if n_pts < 3 or n_pts % 2 == 0:
        raise ValueError("n_pts must be an odd integer >= 3")
    neg, pos = _wave_inverse(p)
    z = np.linspace(-z_max, z_max, n_pts)
    z[n_pts // 2] = 0.0
    u = np.where(z >= 0, pos.u_at(np.abs(z)), neg.u_at(np.abs(z)))
    return WaveProfile(z_samples=z, u_samples=u)
