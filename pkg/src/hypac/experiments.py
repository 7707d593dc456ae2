"""Experiment configuration and orchestration behind the ``hypac`` command.

A config file is an INI-style ``key = value`` table in an ``[experiment]``
section; every key is optional except ``mode``.  Times in the file are read
on the scale named by ``timescale`` (fast by default) and every time-stamped
output carries both scales.
"""

from __future__ import annotations

import configparser
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Callable

import numpy as np

from . import diagnostics as dg
from . import moving_frame as mf
from .initial_data import layer_initial_data, preparedness
from .interface_ode import (
    OdeError,
    OdeParams,
    OdeTrajectory,
    check_trajectory,
    convergence_sweep,
    fixed_step_rk4,
    integrate_to_extinction,
    mcf_exact,
    t_max,
)
from .io import write_csv, write_json, write_rows
from .potential import damping_from_spec, potential_from_spec, psi, scalar_constants, standing_wave
from .radial_pde import BlowUpError, PdeParams, build_grid, run, stable_dt, to_slow_time

MODES = ("pde", "ode", "sweep", "compare", "check")
EXIT_OK, EXIT_FAIL, EXIT_EMPTY, EXIT_CONFIG = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


# --------------------------------------------------------------------------- config


def parse_tau_schedule(spec: str) -> Callable[[float], float]:
    """``const:<v>`` gives ``tau = v``; ``power:<c>,<p>`` gives ``tau = c eps^p``."""
    kind, _, rest = spec.strip().partition(":")
    try:
        vals = [float(x) for x in rest.split(",")] if rest else []
    except ValueError as exc:
        raise ConfigError(f"bad tau_schedule {spec!r}") from exc
    if kind == "const" and len(vals) == 1 and vals[0] > 0:
        v = vals[0]
        return lambda eps: v
    if kind == "power" and len(vals) == 2 and vals[0] > 0:
        c, p = vals
        return lambda eps: c * eps**p
    raise ConfigError(f"bad tau_schedule {spec!r}; expected const:<v> or power:<c>,<p>")


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str
    n: int = 2
    rho0: float = 0.6
    eps: float = 0.02
    tau_schedule: str = "const:1"
    eps_list: tuple = ()
    eta: float | None = None
    eta_list: tuple = ()
    nu0: float = 0.0
    allow_outside: bool = False
    potential: str = "quartic"
    damping: str = "const:1"
    t_end: float = 0.18
    snapshot_times: tuple = ()
    timescale: str = "fast"
    points_per_eps: int = 10
    safety: float = 0.5
    series_stride: int = 10
    keep_dt: float = 0.005
    frame_T: float | None = 0.14
    alpha: float = 0.5
    frame_tol: float = 0.05
    gap_window: tuple = (0.02, 0.14)
    ode_T: float = 0.15
    ode_t1: float = 0.02
    tol: float = 1e-9
    residual_tol: float = 1e-2
    holder_tol: float = 1.05
    kind: str = "pde"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.timescale not in ("fast", "slow"):
            raise ConfigError("timescale must be fast or slow")
        if self.kind not in ("pde", "ode"):
            raise ConfigError("kind must be pde or ode")
        parse_tau_schedule(self.tau_schedule)
        potential_from_spec(self.potential)
        damping_from_spec(self.damping)
        if self.mode == "sweep" and not (self.eps_list if self.kind == "pde" else self.eta_list):
            raise ConfigError("sweep needs a nonempty eps_list (kind=pde) or eta_list (kind=ode)")
        if self.mode == "compare" and len(self.eps_list) < 3:
            raise ConfigError("compare needs at least three values in eps_list")
        if self.series_stride < 1 or self.points_per_eps < 8:
            raise ConfigError("series_stride must be >= 1 and points_per_eps >= 8")

    def tau(self, eps: float) -> float:
        return parse_tau_schedule(self.tau_schedule)(eps)

    def fast(self, t: float, eps: float) -> float:
        """A time read from the config, on the fast scale for this ``eps``."""
        return t * eps**2 if self.timescale == "slow" else t


_TUPLE_KEYS = {"eps_list", "eta_list", "snapshot_times", "gap_window"}


def _convert(name: str, raw: str, typ):
    raw = raw.strip()
    try:
        if name in _TUPLE_KEYS:
            return tuple(float(x) for x in raw.replace(",", " ").split()) if raw else ()
        if name in ("eta", "frame_T"):
            return None if raw.lower() in ("", "none") else float(raw)
        if name == "allow_outside":
            return raw.lower() in ("1", "true", "yes", "on")
        if typ in ("int", int):
            return int(raw)
        if typ in ("float", float):
            return float(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {raw!r}") from exc
    return raw


def load_config(path: str | Path | None, **overrides) -> ExperimentConfig:
    """Read ``[experiment]`` from ``path`` and apply keyword overrides (``None`` ones are ignored)."""
    values: dict = {}
    if path is not None:
        cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        cp.optionxform = str
        try:
            read = cp.read(path)
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from exc
        if not read:
            raise ConfigError(f"cannot read config file {path}")
        if not cp.has_section("experiment"):
            raise ConfigError("config needs an [experiment] section")
        known = {f.name: f.type for f in fields(ExperimentConfig)}
        for key, raw in cp.items("experiment"):
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
            values[key] = _convert(key, raw, known[key])
    values.update({k: v for k, v in overrides.items() if v is not None})
    if "mode" not in values:
        raise ConfigError("config must set mode")
    try:
        return ExperimentConfig(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


# --------------------------------------------------------------------------- checks


def _check(name: str, margin: float, ok: bool | None = None) -> dict:
    margin = float(margin)
    passed = bool(margin >= 0) if ok is None else bool(ok)
    return {"name": name, "pass": passed, "margin": margin}


def _fmt_t(x: float) -> str:
    return f"{x:.10g}"


# --------------------------------------------------------------------------- PDE runs


@dataclass
class PdeOutcome:
    eps: float
    tau: float
    params: PdeParams
    grid: object
    recorder: dg.SeriesRecorder
    traj: OdeTrajectory
    snapshots: list
    dt: float
    n_steps: int
    prepared: object
    blowup: str | None = None
    frame: mf.FrameReport | None = None
    frame_error: str | None = None
    psi_var: dg.PsiVariation | None = None

    @property
    def t(self) -> np.ndarray:
        return self.recorder.column("t")

    @property
    def rho(self) -> np.ndarray:
        return self.recorder.column("rho")

    @property
    def E0(self) -> float:
        return self.recorder.rows[0]["E"]

    @property
    def t_extinction(self) -> float | None:
        return self.recorder.extinction_time()

    def l1_integral(self, key: str) -> float:
        """Time integral of ``l1_<key>`` over the recorded series (trapezoid)."""
        return float(np.trapezoid(self.recorder.column(f"l1_{key}"), self.t))

    def sup_gap(self, window: tuple[float, float]) -> float:
        """``sup |rho_pde - rho_ode|`` over recorded times inside ``window``."""
        t, rho = self.t, self.rho
        sel = (t >= window[0]) & (t <= window[1])
        if not np.any(sel) or np.any(~np.isfinite(rho[sel])):
            return math.inf
        ode = np.array([self._ode_radius(x) for x in t[sel]])
        return float(np.max(np.abs(rho[sel] - ode)))

    def _ode_radius(self, t: float) -> float:
        if t >= self.traj.times[-1]:
            return 0.0
        return float(self.traj.at(t)[0])

    def residuals(self) -> np.ndarray:
        return self.recorder.residuals()


def _ode_radius_fn(traj: OdeTrajectory):
    def f(t):
        return 0.0 if t >= traj.times[-1] else float(traj.at(t)[0])

    return f


def _mcf_radius_fn(n: int, rho0: float):
    tm = t_max(n, rho0)
    return lambda t: 0.0 if t >= tm else mcf_exact(n, rho0, t)


def simulate_pde(
    eps: float,
    tau: float = 1.0,
    *,
    n: int = 2,
    rho0: float = 0.6,
    potential: str = "quartic",
    damping: str = "const:1",
    t_end: float = 0.18,
    snapshot_times=(),
    points_per_eps: int = 10,
    safety: float = 0.5,
    series_stride: int = 10,
    keep_dt: float = 0.005,
    frame_T: float | None = 0.14,
    alpha: float = 0.5,
    holder_kappa: float | None = None,
) -> PdeOutcome:
    """One radial PDE run from tanh-layer data with its interface ODE companion.

    Records energy, dissipation, the tracked radius and the L1 distances to the
    step functions of the ODE radius (``l1_ode``) and of the classical flow
    (``l1_mcf``) every ``series_stride`` steps.  States roughly every
    ``keep_dt`` are kept for the Psi-variation and moving-frame analysis.
    """
    P = potential_from_spec(potential)
    D = damping_from_spec(damping)
    params = PdeParams(n=n, eps=eps, tau=tau, potential=P, damping=D, t_end=t_end)
    grid = build_grid(eps, points_per_eps)
    init = layer_initial_data(grid, eps, rho0, profile=standing_wave(P))
    g_bar = scalar_constants(P, D)[2]
    if abs(g_bar - 1.0) < 1e-12:
        g_bar = 1.0
    traj = _rescale_time(integrate_to_extinction(OdeParams(n=n, eta=eps**2 * tau / g_bar**2, rho0=rho0), 1e-9), g_bar)
    dt = stable_dt(params, grid, safety)
    keep_every = max(1, int(round(keep_dt / (dt * series_stride))))
    rec = dg.SeriesRecorder(
        grid,
        eps,
        tau,
        n,
        P,
        D,
        references={"ode": _ode_radius_fn(traj), "mcf": _mcf_radius_fn_g(n, rho0, g_bar)},
        keep_every=keep_every,
    )
    out = PdeOutcome(
        eps=eps, tau=tau, params=params, grid=grid, recorder=rec, traj=traj, snapshots=[], dt=dt, n_steps=0,
        prepared=preparedness(init, params, grid, rho0),
    )
    try:
        res = run(params, grid, init, snapshot_times, safety=safety, hook=rec, stride=series_stride)
        out.snapshots, out.n_steps = res.snapshots, res.n_steps
        if not rec.kept or rec.kept[-1].t != res.final.t:
            rec.kept.append(res.final)
    except BlowUpError as exc:
        out.blowup = str(exc)
        if exc.partial is not None:
            out.snapshots, out.n_steps = exc.partial.snapshots, exc.partial.n_steps
    if rec.kept:
        kappa = D.kappa if holder_kappa is None else holder_kappa
        out.psi_var = dg.psi_variation(rec.kept, grid, n, P, kappa, out.E0)
    if frame_T is not None and out.blowup is None and frame_T <= t_end:
        try:
            frame = mf.default_frame(n, rho0, frame_T, alpha)
            out.frame = mf.frame_report(rec.kept, grid, traj, n=n, eps=eps, tau=tau, potential=P, frame=frame)
        except (mf.FrameError, OdeError) as exc:
            out.frame_error = str(exc)
    return out


def _mcf_radius_fn_g(n: int, rho0: float, g_bar: float):
    """Radius under ``g_bar V = K``, i.e. the classical flow slowed down by ``g_bar``."""
    base = _mcf_radius_fn(n, rho0)
    return lambda t: base(t / g_bar)


def _rescale_time(traj: OdeTrajectory, g_bar: float) -> OdeTrajectory:
    """Trajectory of ``eta rho'' + g_bar rho' + (n-1)/rho = 0`` from a unit-mobility one.

    In the time ``s = t / g_bar`` that equation is the standard one with
    ``eta / g_bar^2``; ``traj`` is that standard trajectory and is mapped back
    to ``t``.
    """
    if g_bar == 1.0:
        return traj
    p = traj.params
    out = OdeTrajectory(
        params=p,
        times=traj.times * g_bar,
        rho=traj.rho,
        nu=traj.nu / g_bar,
        t_extinction=None if traj.t_extinction is None else traj.t_extinction * g_bar,
        truncated=traj.truncated,
        n_steps=traj.n_steps,
        n_rejected=traj.n_rejected,
    )
    out._dense = _ScaledDense(traj, g_bar)
    return out


class _ScaledDense(tuple):
    def __new__(cls, traj: OdeTrajectory, g_bar: float):
        traj.at(traj.times[0])  # build the spline
        a, b = traj._dense
        return super().__new__(cls, (lambda t: a(t / g_bar), lambda t: b(t / g_bar) / g_bar))


def pde_checks(out: PdeOutcome, cfg: ExperimentConfig) -> list[dict]:
    """Invariant suite for one PDE run."""
    checks = []
    prefix = f"eps={out.eps:g}."
    if out.blowup is not None:
        checks.append(_check(prefix + "pde.blowup", math.nan, ok=False))
        return checks
    E = out.recorder.column("E")
    E0 = out.E0
    res = out.residuals()
    checks.append(_check(prefix + "pde.dissipation_residual", cfg.residual_tol * E0 - np.max(np.abs(res))))
    checks.append(_check(prefix + "pde.energy_nonincreasing", cfg.residual_tol * E0 - max(0.0, float(np.max(np.diff(E))))))
    checks.append(_check(prefix + "pde.int_F", out.eps * E0 - float(np.max(out.recorder.column("F_mass")))))
    kappa = out.params.damping.kappa
    U2 = out.recorder.column("U2")
    lhs = out.eps * kappa * np.concatenate([[0.0], np.cumsum(0.5 * np.diff(out.t) * (U2[1:] + U2[:-1]))])
    checks.append(_check(prefix + "pde.ut_estimate", cfg.residual_tol * E0 + float(np.min((E0 - E) - lhs))))
    rho = out.rho
    checks.append(_check(prefix + "pde.interface_at_start", 1.0 if np.isfinite(rho[0]) else -1.0))
    if out.psi_var is not None:
        Ek = np.array([dg.energy_eps(s, out.grid, out.eps, out.tau, out.params.n, out.params.potential) for s in out.recorder.kept])
        checks.append(_check(prefix + "pde.grad_bv_le_energy", float(np.min(Ek - out.psi_var.grad_bv))))
        checks.append(_check(prefix + "pde.holder", cfg.holder_tol - out.psi_var.max_holder))
    c0 = psi(out.params.potential, 1.0)
    if out.frame is not None:
        checks.append(_check(prefix + "frame.alpha", float(np.min(out.frame.alpha_margin))))
        checks.append(_check(prefix + "frame.energy", float(out.frame.E_phi[0] + cfg.frame_tol * c0 - np.max(out.frame.E_phi))))
    elif out.frame_error is not None:
        checks.append(_check(prefix + "frame.conditions", math.nan, ok=False))
    checks.append(_check(prefix + "init.residual_bound", 1.0 - out.prepared.residual_scaled))
    return checks


def write_pde_outputs(out: PdeOutcome, out_dir: Path) -> list[str]:
    """Snapshot, series, trajectory, frame and preparedness CSVs; returns paths relative to ``out_dir``."""
    files = []
    eps = out.eps
    for s in out.snapshots:
        name = f"snapshot_fast_{_fmt_t(s.t)}_slow_{_fmt_t(to_slow_time(s.t, eps))}.csv"
        write_csv(out_dir / name, {"r": out.grid.r, "u": s.u, "w": s.w})
        files.append(name)
    t = out.t
    res = np.concatenate([[0.0], out.residuals()]) if t.size else np.array([])
    write_csv(
        out_dir / "series.csv",
        {
            "t": t,
            "t_slow": to_slow_time(t, eps),
            "E_eps": out.recorder.column("E"),
            "rho_interface": out.rho,
            "dissipation_residual": res,
        },
    )
    files.append("series.csv")
    tr = out.traj
    write_csv(out_dir / "trajectory.csv", {"t": tr.times, "t_slow": to_slow_time(tr.times, eps), "rho": tr.rho, "nu": tr.nu})
    files.append("trajectory.csv")
    if out.frame is not None:
        cols = out.frame.columns()
        cols = {"t": cols["t"], "t_slow": to_slow_time(cols["t"], eps), **{k: v for k, v in cols.items() if k != "t"}}
        write_csv(out_dir / "frame.csv", cols)
        files.append("frame.csv")
    write_rows(out_dir / "preparedness.csv", [out.prepared.as_row()])
    files.append("preparedness.csv")
    return files


def _pde_kwargs(cfg: ExperimentConfig, eps: float) -> dict:
    return dict(
        n=cfg.n,
        rho0=cfg.rho0,
        potential=cfg.potential,
        damping=cfg.damping,
        t_end=cfg.fast(cfg.t_end, eps),
        snapshot_times=tuple(cfg.fast(s, eps) for s in cfg.snapshot_times),
        points_per_eps=cfg.points_per_eps,
        safety=cfg.safety,
        series_stride=cfg.series_stride,
        keep_dt=cfg.fast(cfg.keep_dt, eps),
        frame_T=None if cfg.frame_T is None else cfg.fast(cfg.frame_T, eps),
        alpha=cfg.alpha,
    )


def _pde_job(cfg: ExperimentConfig, eps: float, out_dir: str) -> dict:
    """Worker body: one PDE run with outputs in ``out_dir``; returns plain data only."""
    tau = cfg.tau(eps)
    try:
        out = simulate_pde(eps, tau, **_pde_kwargs(cfg, eps))
    except (ValueError, RuntimeError) as exc:
        return {"eps": eps, "tau": tau, "error": str(exc), "checks": [_check(f"eps={eps:g}.pde.setup", math.nan, ok=False)], "files": []}
    files = write_pde_outputs(out, Path(out_dir))
    frame = out.frame
    return {
        "eps": eps,
        "tau": tau,
        "error": out.blowup,
        "checks": pde_checks(out, cfg),
        "files": files,
        "t_extinction": out.t_extinction,
        "E0": out.E0,
        "max_residual": float(np.max(np.abs(out.residuals()))) if len(out.t) > 1 else 0.0,
        "sup_gap": out.sup_gap(tuple(cfg.fast(x, eps) for x in cfg.gap_window)),
        "l1_omega_eps": out.l1_integral("ode"),
        "l1_omega_0": out.l1_integral("mcf"),
        "d_eps_max": None if frame is None else float(np.max(frame.d_eps_from_0)),
        "P_phi": None if frame is None else frame.P_phi.tolist(),
        "lb_factor": None if frame is None else frame.lb_factor.tolist(),
    }


def _map_jobs(fn, jobs: list[tuple], workers: int) -> list:
    """Run ``fn(*job)`` for every job; results come back in job order."""
    if workers <= 1 or len(jobs) <= 1:
        return [fn(*j) for j in jobs]
    with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as ex:
        futs = [ex.submit(fn, *j) for j in jobs]
        return [f.result() for f in futs]


# --------------------------------------------------------------------------- modes


@dataclass
class Report:
    experiment: str
    params: dict
    checks: list = field(default_factory=list)
    files: list = field(default_factory=list)
    results: dict = field(default_factory=dict)
    failed: bool = False

    def summary(self) -> dict:
        return {
            "experiment": self.experiment,
            "params": self.params,
            "results": self.results,
            "checks": self.checks,
            "files": self.files,
        }


def _params(cfg: ExperimentConfig) -> dict:
    return asdict(cfg)


def _eps_dir(eps: float) -> str:
    return f"eps_{eps:g}"


def mode_pde(cfg: ExperimentConfig, out_dir: Path, workers: int = 1) -> Report:
    r = _pde_job(cfg, cfg.eps, str(out_dir))
    rep = Report("pde", _params(cfg), checks=r["checks"], files=r["files"])
    rep.results = {k: r.get(k) for k in ("eps", "tau", "t_extinction", "E0", "max_residual", "sup_gap", "l1_omega_eps", "l1_omega_0", "d_eps_max")}
    if r["error"] is not None:
        rep.results["error"] = r["error"]
        rep.failed = True
    return rep


def _ode_params(cfg: ExperimentConfig, eta: float | None = None) -> tuple[OdeParams, float]:
    """Interface ODE parameters and the ``eps`` used for slow-time reporting."""
    tau = cfg.tau(cfg.eps)
    if eta is None:
        eta = cfg.eta if cfg.eta is not None else cfg.eps**2 * tau
    eps = math.sqrt(eta / tau) if eta > 0 else cfg.eps
    return OdeParams(n=cfg.n, eta=eta, rho0=cfg.rho0, nu0=cfg.nu0, allow_outside=cfg.allow_outside), eps


def mode_ode(cfg: ExperimentConfig, out_dir: Path, workers: int = 1) -> Report:
    p, eps = _ode_params(cfg)
    traj = integrate_to_extinction(p, cfg.tol)
    write_csv(out_dir / "trajectory.csv", {"t": traj.times, "t_slow": to_slow_time(traj.times, eps), "rho": traj.rho, "nu": traj.nu})
    T = cfg.fast(cfg.ode_T, eps)
    T = T if T < t_max(p.n, p.rho0) else None
    rep = Report("ode", _params(cfg), checks=check_trajectory(traj, T), files=["trajectory.csv"])
    te = traj.t_extinction
    rep.results = {
        "eta": p.eta,
        "t_extinction": te,
        "t_extinction_slow": None if te is None else to_slow_time(te, eps),
        "truncated": traj.truncated,
        "n_steps": traj.n_steps,
    }
    return rep


def mode_sweep(cfg: ExperimentConfig, out_dir: Path, workers: int = 1) -> Report:
    if cfg.kind == "ode":
        T = cfg.ode_T
        rows = convergence_sweep(cfg.n, cfg.rho0, cfg.nu0, cfg.eta_list, T, cfg.ode_t1, cfg.tol)
        write_rows(out_dir / "sweep.csv", rows)
        rep = Report("sweep", _params(cfg), files=["sweep.csv"])
        for a, b in zip(rows, rows[1:]):
            for key in ("sup_error_rho", "sup_error_nu"):
                ratio = a[key] / b[key] if b[key] > 0 else math.inf
                rep.checks.append(_check(f"eta={b['eta']:g}.ode.{key}_ratio", min(ratio - 5.0, 20.0 - ratio)))
        rep.results = {"rows": rows}
        return rep
    eps_list = sorted(cfg.eps_list, reverse=True)
    jobs = [(cfg, e, str(out_dir / _eps_dir(e))) for e in eps_list]
    results = _map_jobs(_pde_job, jobs, workers)
    rep = Report("sweep", _params(cfg))
    rows = []
    for r in results:
        rep.checks.extend(r["checks"])
        rep.files.extend(f"{_eps_dir(r['eps'])}/{f}" for f in r["files"])
        rows.append(_table_row(r))
        rep.failed |= r["error"] is not None
    write_rows(out_dir / "sweep.csv", rows)
    rep.files.append("sweep.csv")
    rep.results = {"rows": rows}
    return rep


def _table_row(r: dict) -> dict:
    keys = ("eps", "tau", "t_extinction", "E0", "max_residual", "sup_gap", "l1_omega_eps", "l1_omega_0", "d_eps_max")
    row = {k: r.get(k) for k in keys}
    row["status"] = "ok" if r["error"] is None else "failed"
    return row


def mode_compare(cfg: ExperimentConfig, out_dir: Path, workers: int = 1) -> Report:
    eps_list = sorted(cfg.eps_list, reverse=True)
    jobs = [(cfg, e, str(out_dir / _eps_dir(e))) for e in eps_list]
    results = _map_jobs(_pde_job, jobs, workers)
    rep = Report("compare", _params(cfg))
    rows = []
    for r in results:
        rep.checks.extend(r["checks"])
        rep.files.extend(f"{_eps_dir(r['eps'])}/{f}" for f in r["files"])
        rows.append(_table_row(r))
        rep.failed |= r["error"] is not None
    write_rows(out_dir / "compare.csv", rows)
    rep.files.append("compare.csv")
    ok = [r for r in results if r["error"] is None]
    for key in ("l1_omega_eps", "l1_omega_0", "sup_gap"):
        vals = [r[key] for r in ok]
        if len(vals) == len(results) and len(vals) >= 2:
            margin = min(a - b for a, b in zip(vals, vals[1:]))
            rep.checks.append(_check(f"compare.{key}_decreasing", margin, ok=margin > 0))
    # lower bound on P_phi with C2 calibrated on the largest eps
    framed = [r for r in ok if r["P_phi"] is not None]
    if len(framed) >= 2:
        P = psi(potential_from_spec(cfg.potential), 1.0)
        C2 = mf.calibrate_C2(framed[0]["P_phi"], framed[0]["lb_factor"], framed[0]["eps"], P)
        rep.results["C2"] = C2
        for r in framed[1:]:
            m = mf.lower_bound_margins(r["P_phi"], r["lb_factor"], r["eps"], P, C2)
            rep.checks.append(_check(f"eps={r['eps']:g}.frame.lower_bound", float(np.min(m))))
    rep.results["rows"] = rows
    return rep


def mode_check(cfg: ExperimentConfig, out_dir: Path, workers: int = 1) -> Report:
    """Quick invariant suite: potential, standing wave, interface ODE, RK4 oracle and phi."""
    rep = Report("check", _params(cfg))
    P = potential_from_spec(cfg.potential)
    D = damping_from_spec(cfg.damping)
    try:
        P.validate()
        rep.checks.append(_check("potential.validate", 1.0))
    except ValueError:
        rep.checks.append(_check("potential.validate", -1.0))
    try:
        D.validate()
        rep.checks.append(_check("damping.validate", D.kappa))
    except ValueError:
        rep.checks.append(_check("damping.validate", -1.0))
    wave = standing_wave(P)
    z = np.linspace(-8.0, 8.0, 1601)
    U = wave(z)
    first_integral = np.gradient(U, z)[1:-1] - np.sqrt(2.0 * P.F(U[1:-1]))
    rep.checks.append(_check("potential.standing_wave", 1e-3 - float(np.max(np.abs(first_integral)))))
    p, eps = _ode_params(cfg)
    traj = integrate_to_extinction(p, cfg.tol)
    T = 0.9 * t_max(p.n, p.rho0)
    rep.checks.extend(check_trajectory(traj, T))
    if traj.t_extinction is not None and p.eta >= 1e-5:
        t_end = 0.9 * traj.t_extinction
        dt = 1e-7 if p.eta <= 1e-4 else 1e-6
        tt, rr, _ = fixed_step_rk4(p, dt, t_end, stride=100)
        diff = float(np.max(np.abs(rr - traj.at(tt)[0])))
        rep.checks.append(_check("ode.rk4_oracle", 1e-7 - diff))
    if p.in_gamma and p.eta > 0:
        tau = cfg.tau(cfg.eps)
        frame_T = cfg.frame_T if cfg.frame_T is not None else 0.8 * t_max(p.n, p.rho0)
        K = mf.quadratic_constant(p.n, p.rho0, frame_T, cfg.alpha)
        e = math.sqrt(p.eta / tau)
        worst: dict = {}
        for tt in np.linspace(0.0, frame_T, 21):
            rho, nu = (float(x) for x in traj.at(tt))
            for k, v in mf.phi_property_margins(p.n, e, tau, rho, nu, K_T=K).items():
                worst[k] = min(worst.get(k, math.inf), v)
        for k, v in worst.items():
            rep.checks.append(_check(f"phi.{k}", v + (1e-6 if k == "phi_t" else 0.0)))
    rep.results = {"t_extinction": traj.t_extinction}
    return rep


_MODES = {"pde": mode_pde, "ode": mode_ode, "sweep": mode_sweep, "compare": mode_compare, "check": mode_check}


def run_experiment(cfg: ExperimentConfig, out_dir: str | Path, workers: int = 1) -> tuple[int, Report]:
    """Run ``cfg`` writing into ``out_dir``; returns ``(exit_code, report)``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if not os.access(out_dir, os.W_OK):
        raise ConfigError(f"output directory {out_dir} is not writable")
    rep = _MODES[cfg.mode](cfg, out_dir, workers)
    write_json(out_dir / "summary.json", rep.summary())
    return exit_code(rep), rep


def exit_code(rep: Report) -> int:
    if not rep.checks and not rep.files:
        return EXIT_EMPTY
    if rep.failed or not all(c["pass"] for c in rep.checks):
        return EXIT_FAIL
    return EXIT_OK


def failed_checks(rep: Report) -> list[str]:
    return [c["name"] for c in rep.checks if not c["pass"]]
