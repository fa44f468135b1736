"""Time evolution of (v, v_t) for v_tt = lap4 v + F(v) on the radial mesh.

Classical RK4 in time, 4th-order parity stencils in space, a Maxwellian
sponge layer (-sigma(r) v_t with a quadratic ramp over the outer part of
the domain) standing in for the unbounded domain, and blow-up/breakdown
detection that separates monitored field growth from scheme failure.
Runs are deterministic: a fixed config reproduces diagnostics bit for bit.
"""
from __future__ import annotations

import csv
import hashlib
import math
from dataclasses import dataclass, field, fields as dc_fields

import numpy as np

from .grid import FieldState, RadialGrid, RadialField, _d1_values, _d2_values
from . import diagnostics as diag
from . import kernels
from .kernels import CutoffProfile, KernelParams
from .transform import u_to_v, v_to_u

__all__ = [
    "InitialDataSpec",
    "SpongeSpec",
    "RunConfig",
    "RunResult",
    "make_grid",
    "initial_state",
    "sponge_sigma",
    "rhs",
    "step",
    "run",
    "evolve_bundles",
    "detect_blowup",
    "config_fingerprint",
    "config_items",
    "write_checkpoint",
]


@dataclass(frozen=True)
class InitialDataSpec:
    """Initial data families.

    gaussian_v: v0(r) = amplitude * [e^(-((r-center)/width)^2)
                + e^(-((r+center)/width)^2)] / (1 + e^(-(2 center/width)^2)),
    an evenly symmetrized bump (reduces to a plain Gaussian at center 0,
    peak amplitude ~ amplitude for center >> width); the velocity profile
    is the analogous bump with the _t parameters.

    profile_u: tabulated (r, u0, u1) read from profile_path; the table must
    sit exactly on the run grid and satisfy u0(0) = pi.
    """

    family: str = "gaussian_v"
    amplitude: float = 0.5
    center: float = 0.0
    width: float = 1.0
    amplitude_t: float = 0.0
    center_t: float = 0.0
    width_t: float = 1.0
    profile_path: str = ""

    def __post_init__(self):
        if self.family not in ("gaussian_v", "profile_u"):
            raise ValueError(f"unknown initial-data family {self.family!r}")
        if self.width <= 0 or self.width_t <= 0:
            raise ValueError("gaussian widths must be positive")


@dataclass(frozen=True)
class SpongeSpec:
    """Damping layer; start < 0 means the default 0.85 * r_max."""

    start: float = -1.0
    strength: float = 1.0


@dataclass(frozen=True)
class RunConfig:
    n_cells: int = 512
    r_max: float = 16.0
    t_end: float = 5.0
    cfl: float = 0.25
    integrator: str = "rk4"
    sponge: SpongeSpec = field(default_factory=SpongeSpec)
    initial: InitialDataSpec = field(default_factory=InitialDataSpec)
    kernel_params: KernelParams = field(default_factory=KernelParams)
    profile: CutoffProfile = field(default_factory=CutoffProfile)
    output_every: int = 64
    snapshot_every: int = 0
    monitor_ceiling: float = 1e6
    drift_ceiling: float = 1e-2
    sobolev_orders: tuple = (1, 2, 3, 4)
    track_spacetime: bool = True
    decay_s_proxy: int = 2
    ghost_mode: str = "parity"

    def __post_init__(self):
        if not 0.0 < self.cfl <= 0.5:
            raise ValueError("cfl must lie in (0, 0.5]")
        if self.t_end <= 0.0:
            raise ValueError("t_end must be positive")
        if self.integrator != "rk4":
            raise ValueError(f"unknown integrator {self.integrator!r}")
        if self.sponge.start >= self.r_max:
            raise ValueError("sponge start must lie inside the domain")
        if self.output_every < 1:
            raise ValueError("output cadence must be >= 1 step")


@dataclass
class RunResult:
    status: str               # completed | blowup_nan | blowup_monitor | scheme_breakdown
    reason: str
    records: list
    state: FieldState
    snapshots: list
    e0: float
    config: RunConfig


def make_grid(config: RunConfig) -> RadialGrid:
    return RadialGrid(config.n_cells, config.r_max, dim=4)


def _bump(r, a, center, width):
    norm = 1.0 + math.exp(-(2.0 * center / width) ** 2)
    return a * (np.exp(-((r - center) / width) ** 2)
                + np.exp(-((r + center) / width) ** 2)) / norm


def initial_state(config: RunConfig) -> FieldState:
    g = make_grid(config)
    spec = config.initial
    if spec.family == "gaussian_v":
        v0 = _bump(g.r, spec.amplitude, spec.center, spec.width)
        v1 = _bump(g.r, spec.amplitude_t, spec.center_t, spec.width_t)
        return FieldState(RadialField(v0, "even", g), RadialField(v1, "even", g), 0.0)
    table = np.loadtxt(spec.profile_path, delimiter=",", skiprows=1)
    if table.shape != (g.n_nodes, 3):
        raise ValueError("tabulated profile does not match the run grid")
    if not np.allclose(table[:, 0], g.r, rtol=0.0, atol=1e-12 * g.r_max):
        raise ValueError("tabulated radii do not match the run grid nodes")
    g2 = g.with_dim(2)
    u_state = FieldState(RadialField(table[:, 1], "even", g2),
                         RadialField(table[:, 2], "even", g2), 0.0)
    return u_to_v(u_state, config.profile)


def sponge_sigma(grid: RadialGrid, spec: SpongeSpec) -> np.ndarray:
    """Quadratic damping ramp over [start, r_max]."""
    start = spec.start if spec.start >= 0.0 else 0.85 * grid.r_max
    sig = np.zeros(grid.n_nodes)
    m = grid.r > start
    if m.any() and grid.r_max > start:
        sig[m] = spec.strength * ((grid.r[m] - start) / (grid.r_max - start)) ** 2
    return sig


def _rhs_arrays(v, vt, t, grid, cut, sig, p, mode, forcing):
    # cut=None drops the nonlinearity entirely (free-wave benchmark path).
    vr = _d1_values(v, "even", grid, mode)
    d2 = _d2_values(v, "even", grid, mode)
    lap = np.empty_like(v)
    lap[0] = 4.0 * d2[0]
    lap[1:] = d2[1:] + 3.0 * vr[1:] / grid.r[1:]
    if cut is None:
        acc = lap
    else:
        acc = lap + kernels.eval_F_given_cutoffs(v, vt, vr, grid.r, cut, p)
    if sig is not None:
        acc -= sig * vt
    if forcing is not None:
        acc += forcing(t)
    return vt, acc


def rhs(state: FieldState, p=None, profile=None, sponge=None,
        mode="parity", forcing=None):
    """(dv/dt, dv_t/dt) for the lifted equation; returns a pair of arrays."""
    p = p or KernelParams()
    profile = profile or CutoffProfile()
    g = state.grid
    cut = kernels.cutoff_arrays(g.r, profile)
    dv, dvt = _rhs_arrays(state.f.values, state.f_t.values, state.time,
                          g, cut, sponge, p, mode, forcing)
    if not (np.all(np.isfinite(dvt)) and np.all(np.isfinite(dv))):
        raise FloatingPointError("non-finite right-hand side (blow-up candidate)")
    return dv, dvt


def _rk4(v, vt, t, dt, grid, cut, sig, p, mode, forcing):
    k1v, k1a = _rhs_arrays(v, vt, t, grid, cut, sig, p, mode, forcing)
    k2v, k2a = _rhs_arrays(v + 0.5 * dt * k1v, vt + 0.5 * dt * k1a,
                           t + 0.5 * dt, grid, cut, sig, p, mode, forcing)
    k3v, k3a = _rhs_arrays(v + 0.5 * dt * k2v, vt + 0.5 * dt * k2a,
                           t + 0.5 * dt, grid, cut, sig, p, mode, forcing)
    k4v, k4a = _rhs_arrays(v + dt * k3v, vt + dt * k3a,
                           t + dt, grid, cut, sig, p, mode, forcing)
    return (v + dt / 6.0 * (k1v + 2.0 * (k2v + k3v) + k4v),
            vt + dt / 6.0 * (k1a + 2.0 * (k2a + k3a) + k4a))


def step(state: FieldState, dt: float, p=None, profile=None, cfl=0.25,
         sponge=None, mode="parity", forcing=None) -> FieldState:
    """One RK4 step; rejects dt above the CFL bound cfl * dr."""
    g = state.grid
    if dt > cfl * g.dr * (1.0 + 1e-12):
        raise ValueError(f"CFL violation: dt={dt} exceeds {cfl} * dr = {cfl * g.dr}")
    p = p or KernelParams()
    profile = profile or CutoffProfile()
    cut = kernels.cutoff_arrays(g.r, profile)
    v, vt = _rk4(state.f.values, state.f_t.values, state.time, dt,
                 g, cut, sponge, p, mode, forcing)
    return FieldState(RadialField(v, "even", g), RadialField(vt, "even", g),
                      state.time + dt)


def detect_blowup(state: FieldState, record, monitor_ceiling=1e6,
                  drift_ceiling=1e-2):
    """(status, reason) when a stop condition fires, else None.

    NaN/Inf anywhere, a continuation monitor above its ceiling, or energy
    drift above the breakdown threshold (scheme failure, reported
    separately from physical growth).
    """
    if not (np.all(np.isfinite(state.f.values))
            and np.all(np.isfinite(state.f_t.values))):
        return "blowup_nan", f"non-finite field values at t={state.time:.6g}"
    worst = max(record.monitor_v, record.monitor_vt, record.monitor_gradv)
    if worst >= monitor_ceiling:
        return ("blowup_monitor",
                f"continuation monitor {worst:.6g} at ceiling {monitor_ceiling:.6g} "
                f"at t={state.time:.6g}")
    if record.energy_drift > drift_ceiling:
        return ("scheme_breakdown",
                f"energy drift {record.energy_drift:.6g} exceeds "
                f"{drift_ceiling:.6g} at t={state.time:.6g}")
    return None


def _sample(state, config, e0, tracker):
    p, profile = config.kernel_params, config.profile
    u_state = v_to_u(state, profile)
    e, tail = diag.energy(u_state, p, state, profile, return_tail=True)
    mv, mvt, mgv = diag.continuation_monitor(state)
    sob = {s: diag.sobolev_norm(state.f, s) for s in config.sobolev_orders}
    decay = diag.decay_report(state.f, config.decay_s_proxy)
    st = tracker.values() if tracker is not None else {}
    return diag.DiagnosticsRecord(
        time=state.time, energy=e,
        energy_drift=diag.energy_drift(e, e0 if e0 is not None else e),
        energy_tail=tail, monitor_v=mv, monitor_vt=mvt, monitor_gradv=mgv,
        sobolev=sob, decay_ratios=decay, spacetime_norms=st)


def run(config: RunConfig, forcing=None) -> RunResult:
    """Advance to t_end or until detect_blowup fires; diagnostics at the
    configured cadence (plus the initial and final instants)."""
    g = make_grid(config)
    state = initial_state(config)
    p, profile = config.kernel_params, config.profile
    cut = kernels.cutoff_arrays(g.r, profile)
    sig = sponge_sigma(g, config.sponge)
    if not sig.any():
        sig = None

    nsteps = max(1, math.ceil(config.t_end / (config.cfl * g.dr)))
    dt = config.t_end / nsteps

    tracker = diag.SpacetimeTracker() if config.track_spacetime else None
    if tracker is not None:
        tracker.update(state.f, 0.0)
    rec0 = _sample(state, config, None, tracker)
    e0 = rec0.energy
    records = [rec0]
    snapshots = [
        FieldState(state.f.copy(), state.f_t.copy(), state.time)
    ] if config.snapshot_every else []

    status = detect_blowup(state, rec0, config.monitor_ceiling, config.drift_ceiling)
    if status is not None:
        return RunResult(status[0], status[1], records, state, snapshots, e0, config)

    v, vt = state.f.values.copy(), state.f_t.values.copy()
    last_sample_t = 0.0
    for k in range(1, nsteps + 1):
        t_prev = (k - 1) * dt
        v, vt = _rk4(v, vt, t_prev, dt, g, cut, sig, p, config.ghost_mode, forcing)
        t = k * dt
        state = FieldState(RadialField(v, "even", g), RadialField(vt, "even", g), t)
        if config.snapshot_every and (k % config.snapshot_every == 0 or k == nsteps):
            snapshots.append(FieldState(state.f.copy(), state.f_t.copy(), t))
        if k % config.output_every == 0 or k == nsteps:
            if tracker is not None:
                tracker.update(state.f, t - last_sample_t)
            last_sample_t = t
            if not np.all(np.isfinite(v)):
                verdict = ("blowup_nan", f"non-finite field values at t={t:.6g}")
            else:
                rec = _sample(state, config, e0, tracker)
                records.append(rec)
                verdict = detect_blowup(state, rec, config.monitor_ceiling,
                                        config.drift_ceiling)
            if verdict is not None:
                return RunResult(verdict[0], verdict[1], records, state,
                                 snapshots, e0, config)
    return RunResult("completed", f"reached t_end={config.t_end:g}", records,
                     state, snapshots, e0, config)


def evolve_bundles(config: RunConfig, t_center: float, n_levels: int,
                   forcing=None):
    """Evolve quietly and return n_levels consecutive per-step transform
    bundles centered near t_center (for the residual-identity evaluators)."""
    from .transform import make_bundle
    g = make_grid(config)
    state = initial_state(config)
    p, profile = config.kernel_params, config.profile
    cut = kernels.cutoff_arrays(g.r, profile)
    sig = sponge_sigma(g, config.sponge)
    if not sig.any():
        sig = None
    nsteps = max(1, math.ceil(config.t_end / (config.cfl * g.dr)))
    dt = config.t_end / nsteps
    first = max(0, round(t_center / dt) - n_levels // 2)
    bundles = []
    v, vt = state.f.values.copy(), state.f_t.values.copy()
    for k in range(nsteps + 1):
        if first <= k < first + n_levels:
            st = FieldState(RadialField(v.copy(), "even", g),
                            RadialField(vt.copy(), "even", g), k * dt)
            bundles.append(make_bundle(st, p, profile))
            if len(bundles) == n_levels:
                break
        if k < nsteps:
            v, vt = _rk4(v, vt, k * dt, dt, g, cut, sig, p,
                         config.ghost_mode, forcing)
    return bundles


def config_items(config: RunConfig):
    """Flatten a RunConfig into deterministic (section.key, value) pairs."""
    items = []

    def emit(section, obj, skip=()):
        for f in dc_fields(obj):
            if f.name in skip:
                continue
            items.append((f"{section}.{f.name}", getattr(obj, f.name)))

    items.append(("grid.n_cells", config.n_cells))
    items.append(("grid.r_max", config.r_max))
    for key in ("t_end", "cfl", "integrator"):
        items.append((f"integrator.{key}", getattr(config, key)))
    items.append(("integrator.sponge_start", config.sponge.start))
    items.append(("integrator.sponge_strength", config.sponge.strength))
    emit("initial_data", config.initial)
    emit("kernels", config.kernel_params)
    items.append(("kernels.cutoff_order", config.profile.kind))
    for key in ("output_every", "monitor_ceiling", "drift_ceiling",
                "decay_s_proxy", "track_spacetime", "ghost_mode"):
        items.append((f"diagnostics.{key}", getattr(config, key)))
    items.append(("diagnostics.sobolev_orders",
                  ",".join(str(s) for s in config.sobolev_orders)))
    items.append(("output.snapshot_every", config.snapshot_every))
    return items


def config_fingerprint(config: RunConfig) -> str:
    text = "\n".join(f"{k} = {v}" for k, v in config_items(config))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def write_checkpoint(state: FieldState, path_base, config: RunConfig, step_no: int):
    """CSV snapshot (r, v, v_t) plus a key=value metadata sidecar."""
    from .grid import FLOAT_FMT
    g = state.grid
    with open(f"{path_base}.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["r", "v", "v_t"])
        for r, a, b in zip(g.r, state.f.values, state.f_t.values):
            w.writerow([FLOAT_FMT % r, FLOAT_FMT % a, FLOAT_FMT % b])
    with open(f"{path_base}.meta", "w") as fh:
        fh.write(f"time = {FLOAT_FMT % state.time}\n")
        fh.write(f"step = {step_no}\n")
        fh.write(f"config_hash = {config_fingerprint(config)}\n")
        for k, v in config_items(config):
            fh.write(f"{k} = {v}\n")
