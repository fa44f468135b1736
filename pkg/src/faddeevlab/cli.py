"""Command-line front end: run / verify / sweep / kernels-table.

Config files are INI-style `key = value` text with sections grid,
integrator, initial_data, kernels, diagnostics, output. Unknown keys are
hard errors. Exit codes: 0 success, 1 config error, 2 blow-up or scheme
breakdown, 3 verification-suite failure. Identical config and overrides
reproduce diagnostics byte for byte.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import itertools
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import diagnostics as diag
from . import kernels
from .evolve import (InitialDataSpec, RunConfig, SpongeSpec, config_items,
                     initial_state, make_grid, run, write_checkpoint)
from .grid import FLOAT_FMT, FieldState, RadialField, RadialGrid
from .kernels import CutoffProfile, KernelParams
from .transform import _grouped_line_integral, compute_Phi, compute_Phi_t, v_to_u
from .verify import (ManufacturedSolution, convergence_study, kernel_limit,
                     kernel_series_oracle, manufactured_config, study_to_csv)

__all__ = ["main", "load_config", "write_effective_config", "ConfigError"]


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on bad usage by default; 2 is reserved for blow-up."""

    def error(self, message):
        print(f"config-error: {message}", file=sys.stderr)
        raise SystemExit(1)


_BOOL_STATES = configparser.ConfigParser.BOOLEAN_STATES


def _bool(text):
    try:
        return _BOOL_STATES[text.strip().lower()]
    except KeyError:
        raise ValueError(f"not a boolean: {text!r}")


def _orders(text):
    text = text.strip()
    return tuple(int(tok) for tok in text.split(",") if tok.strip()) if text else ()


_SCHEMA = {
    "grid": {"n_cells": int, "r_max": float},
    "integrator": {"t_end": float, "cfl": float, "integrator": str,
                   "sponge_start": float, "sponge_strength": float},
    "initial_data": {"family": str, "amplitude": float, "center": float,
                     "width": float, "amplitude_t": float, "center_t": float,
                     "width_t": float, "profile_path": str},
    "kernels": {"alpha": float, "x_switch": float, "series_terms": int,
                "cutoff_order": int},
    "diagnostics": {"output_every": int, "monitor_ceiling": float,
                    "drift_ceiling": float, "sobolev_orders": _orders,
                    "track_spacetime": _bool, "decay_s_proxy": int,
                    "ghost_mode": str},
    "output": {"dir": str, "snapshot_every": int},
}


def _flatten_file(path):
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}")
    out = {}
    for section in cp.sections():
        for key, value in cp.items(section):
            out[f"{section}.{key}"] = value
    return out


def load_config(path=None, sets=()):
    """Build (RunConfig, out_dir) from an optional file plus --set overrides.
    Every key is validated against the schema; unknown keys raise ConfigError
    naming the key."""
    flat = _flatten_file(path) if path else {}
    for item in sets:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form section.key=value")
        dotted, value = item.split("=", 1)
        flat[dotted.strip()] = value.strip()

    typed = {}
    for dotted, raw in flat.items():
        if "." not in dotted:
            raise ConfigError(f"unknown key {dotted!r} (expected section.key)")
        section, key = dotted.split(".", 1)
        caster = _SCHEMA.get(section, {}).get(key)
        if caster is None:
            raise ConfigError(f"unknown key {dotted!r}")
        try:
            typed[dotted] = caster(raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {dotted}: {exc}")

    def take(dotted, default):
        return typed.pop(dotted, default)

    try:
        initial = InitialDataSpec(
            family=take("initial_data.family", "gaussian_v"),
            amplitude=take("initial_data.amplitude", 0.5),
            center=take("initial_data.center", 0.0),
            width=take("initial_data.width", 1.0),
            amplitude_t=take("initial_data.amplitude_t", 0.0),
            center_t=take("initial_data.center_t", 0.0),
            width_t=take("initial_data.width_t", 1.0),
            profile_path=take("initial_data.profile_path", ""),
        )
        sponge = SpongeSpec(start=take("integrator.sponge_start", -1.0),
                            strength=take("integrator.sponge_strength", 1.0))
        params = KernelParams(alpha=take("kernels.alpha", 1.0),
                              x_switch=take("kernels.x_switch", 1e-2),
                              series_terms=take("kernels.series_terms", 8))
        profile = CutoffProfile(kind=take("kernels.cutoff_order", 7))
        config = RunConfig(
            n_cells=take("grid.n_cells", 512),
            r_max=take("grid.r_max", 16.0),
            t_end=take("integrator.t_end", 5.0),
            cfl=take("integrator.cfl", 0.25),
            integrator=take("integrator.integrator", "rk4"),
            sponge=sponge, initial=initial,
            kernel_params=params, profile=profile,
            output_every=take("diagnostics.output_every", 64),
            snapshot_every=take("output.snapshot_every", 0),
            monitor_ceiling=take("diagnostics.monitor_ceiling", 1e6),
            drift_ceiling=take("diagnostics.drift_ceiling", 1e-2),
            sobolev_orders=take("diagnostics.sobolev_orders", (1, 2, 3, 4)),
            track_spacetime=take("diagnostics.track_spacetime", True),
            decay_s_proxy=take("diagnostics.decay_s_proxy", 2),
            ghost_mode=take("diagnostics.ghost_mode", "parity"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc))
    out_dir = typed.pop("output.dir", None)
    return config, out_dir


def write_effective_config(config: RunConfig, out_dir, path):
    """Round-trippable echo of every effective setting."""
    cp = configparser.ConfigParser()
    cp.optionxform = str
    for dotted, value in config_items(config):
        section, key = dotted.split(".", 1)
        if not cp.has_section(section):
            cp.add_section(section)
        cp.set(section, key, repr(value) if isinstance(value, float) else str(value))
    if not cp.has_section("output"):
        cp.add_section("output")
    cp.set("output", "dir", str(out_dir))
    with open(path, "w") as fh:
        cp.write(fh)


def _resolve_out(cli_out, file_out, default):
    return cli_out or file_out or default


def cmd_run(args) -> int:
    try:
        config, file_out = load_config(args.config, args.set or ())
    except ConfigError as exc:
        print(f"config-error: {exc}", file=sys.stderr)
        return 1
    out_dir = _resolve_out(args.out, file_out, "faddeev_out")
    os.makedirs(out_dir, exist_ok=True)
    try:
        result = run(config)
    except (ValueError, FileNotFoundError, OSError) as exc:
        print(f"config-error: {exc}", file=sys.stderr)
        return 1
    diag.write_diagnostics_csv(result.records, os.path.join(out_dir, "diagnostics.csv"))
    write_effective_config(config, out_dir, os.path.join(out_dir, "effective_config.ini"))
    for i, snap in enumerate(result.snapshots):
        write_checkpoint(snap, os.path.join(out_dir, f"snapshot_{i:04d}"), config, i)
    write_checkpoint(result.state, os.path.join(out_dir, "final"), config, -1)
    print(f"status={result.status} t_final={result.state.time:.17g} "
          f"out={out_dir} reason={result.reason!r}")
    return 0 if result.status == "completed" else 2


# ---------------------------------------------------------------------------
# verify suites


def _suite_kernels(rows, p, profile):
    for j in range(5):
        got = kernels.eval_Ftilde(j, 0.0, p)
        ref = kernel_limit(j, p)
        err = abs(got - ref) / max(1.0, abs(ref))
        rows.append(("kernels", f"Ftilde{j}_limit", err, 1e-12, err <= 1e-12))
    xs = np.logspace(-2, 0, 81)
    for j in range(5):
        got = kernels.eval_Ftilde(j, xs, p)
        ref = kernel_series_oracle(j, xs, p)
        err = float(np.max(np.abs(got - ref) / np.maximum(np.abs(ref), 1e-300)))
        rows.append(("kernels", f"Ftilde{j}_oracle_agreement", err, 1e-12, err <= 1e-12))

    rng = np.random.default_rng(0)
    n = 1000
    v = rng.uniform(-2.0, 2.0, n)
    vt = rng.uniform(-2.0, 2.0, n)
    vr = rng.uniform(-2.0, 2.0, n)
    r = rng.uniform(0.05, 0.45, n)
    f_direct = kernels.eval_F_rhs(v, vt, vr, r, p, profile)
    u = r * v + math.pi
    f_via_u = v / r ** 2 + kernels.eval_N(u, r * vt, r * vr + v, r, p) / r
    err = float(np.max(np.abs(f_direct - f_via_u) / (1.0 + np.abs(f_direct))))
    rows.append(("kernels", "two_path_identity", err, 1e-9, err <= 1e-9))

    h = 1e-3
    for which, r0 in (("phi", 1.5), ("lt1", 0.75)):
        stencil = (8.0 * (kernels.eval_cutoff(which, r0 + h, 0, profile)
                          - kernels.eval_cutoff(which, r0 - h, 0, profile))
                   - (kernels.eval_cutoff(which, r0 + 2 * h, 0, profile)
                      - kernels.eval_cutoff(which, r0 - 2 * h, 0, profile))) / (12 * h)
        err = abs(kernels.eval_cutoff(which, r0, 1, profile) - stencil)
        rows.append(("kernels", f"cutoff_{which}_derivative_fd", err, 1e-8, err <= 1e-8))
    lap_fd = ((-kernels.eval_cutoff("phi", 1.5 + 2 * h, 0, profile)
               + 16 * kernels.eval_cutoff("phi", 1.5 + h, 0, profile)
               - 30 * kernels.eval_cutoff("phi", 1.5, 0, profile)
               + 16 * kernels.eval_cutoff("phi", 1.5 - h, 0, profile)
               - kernels.eval_cutoff("phi", 1.5 - 2 * h, 0, profile)) / (12 * h * h)
              + kernels.eval_cutoff("phi", 1.5, 1, profile) / 1.5)
    err = abs(kernels.laplacian_phi_2d(1.5, profile) - lap_fd)
    rows.append(("kernels", "laplacian_phi_2d_fd", err, 1e-8, err <= 1e-8))


def _suite_transforms(rows, p, profile):
    g = RadialGrid(400, 2.0, dim=4)
    v = 0.3 * np.exp(-g.r ** 2)
    seam = (g.r >= 0.4) & (g.r <= 0.5)
    idx = np.nonzero(seam)[0]
    r_in = g.r[idx]
    v_in = v[idx]

    def a4_sqrt(y, sel):
        rr = r_in[sel][:, None]
        return np.sqrt(1.0 + y * y * kernels.eval_Ftilde(0, rr * y, p))

    def a3_sqrt(s, sel):
        rr = r_in[sel][:, None]
        y = math.pi + s
        return np.sqrt(1.0 + (p.alpha / rr) ** 2 * np.sin(y) ** 2)

    inner = _grouped_line_integral(v_in, a4_sqrt)
    outer = _grouped_line_integral(r_in * v_in, a3_sqrt) / r_in
    err = float(np.max(np.abs(inner - outer)))
    rows.append(("transforms", "phi_branch_seam", err, 1e-10, err <= 1e-10))

    from .transform import u_to_v, v_to_u as _v2u
    gv = RadialGrid(256, 8.0, dim=4)
    state = FieldState(RadialField(0.2 * np.exp(-gv.r ** 2), "even", gv),
                       RadialField(0.1 * np.exp(-gv.r ** 2), "even", gv), 0.0)
    back = u_to_v(_v2u(state, profile), profile)
    err = float(np.max(np.abs(back.f.values - state.f.values)))
    rows.append(("transforms", "chart_roundtrip", err, 1e-9, err <= 1e-9))

    u_state = _v2u(state, profile)
    phi_t = compute_Phi_t(u_state, p, profile, state)
    errs = []
    for dt in (1e-3, 5e-4):
        plus = FieldState(state.f.with_values(state.f.values + dt * state.f_t.values),
                          state.f_t, dt)
        minus = FieldState(state.f.with_values(state.f.values - dt * state.f_t.values),
                           state.f_t, -dt)
        pp = compute_Phi(_v2u(plus, profile), plus, p, profile)
        pm = compute_Phi(_v2u(minus, profile), minus, p, profile)
        fd = (pp.values - pm.values) / (2 * dt)
        errs.append(float(np.max(np.abs(fd - phi_t.values))))
    order = math.log(errs[0] / errs[1]) / math.log(2.0) if errs[1] > 0 else float("nan")
    rows.append(("transforms", "phi_t_identity_order", order, 2.0,
                 abs(order - 2.0) <= 0.3))


def _suite_convergence(rows, p, profile):
    ms = ManufacturedSolution()
    base = manufactured_config(ms, RunConfig(
        n_cells=128, r_max=8.0, t_end=1.0, output_every=32,
        drift_ceiling=1.0, track_spacetime=False, sobolev_orders=(),
        kernel_params=p, profile=profile))
    forced = convergence_study(base, levels=3,
                               observables=("solution", "residual_v"),
                               ms=ms, t_probe=0.7)
    sol = forced["solution"].ls_order
    rows.append(("convergence", "manufactured_solution_order", sol, 3.5,
                 sol >= 3.2))
    resv = forced["residual_v"].ls_order
    rows.append(("convergence", "residual_v_order", resv, 3.5, resv >= 3.2))
    # conservation drift only converges on the unforced equation
    free_base = RunConfig(n_cells=128, r_max=8.0, t_end=1.0, output_every=32,
                          drift_ceiling=1.0, track_spacetime=False,
                          sobolev_orders=(), kernel_params=p, profile=profile)
    free = convergence_study(free_base, levels=3, observables=("drift",))
    drift = free["drift"].ls_order
    rows.append(("convergence", "drift_order", drift, 3.5, drift >= 3.2))


def _suite_energy(rows, p, profile):
    g = RadialGrid(2048, 12.0, dim=2)
    u0 = math.pi * np.exp(-g.r ** 2)
    u_state = FieldState(RadialField(u0, "even", g),
                         RadialField(np.zeros(g.n_nodes), "even", g), 0.0)
    e = diag.energy(u_state, p, profile=profile)
    ref = 5.3665119245489741967
    err = abs(e - ref) / ref
    rows.append(("energy", "gaussian_u_reference", err, 1e-8, err <= 1e-8))

    cfg = RunConfig(n_cells=2048, r_max=40.0, t_end=1.0, output_every=1024,
                    track_spacetime=False, sobolev_orders=(),
                    kernel_params=p, profile=profile)
    e0 = diag.energy(v_to_u(initial_state(cfg), profile), p,
                     initial_state(cfg), profile)
    ref0 = 16.419293196580507863
    err = abs(e0 - ref0) / ref0
    rows.append(("energy", "gaussian_v_initial_energy", err, 5e-7, err <= 5e-7))

    small = RunConfig(n_cells=512, r_max=8.0, t_end=1.0, output_every=64,
                      drift_ceiling=1.0, track_spacetime=False,
                      sobolev_orders=(), kernel_params=p, profile=profile)
    res = run(small)
    drift = max(abs(rec.energy_drift) for rec in res.records)
    rows.append(("energy", "short_run_drift", drift, 5e-3, drift <= 5e-3))


_SUITES = {
    "kernels": _suite_kernels,
    "transforms": _suite_transforms,
    "convergence": _suite_convergence,
    "energy": _suite_energy,
}


def cmd_verify(args) -> int:
    try:
        config, file_out = load_config(args.config, args.set or ())
    except ConfigError as exc:
        print(f"config-error: {exc}", file=sys.stderr)
        return 1
    out_dir = _resolve_out(args.out, file_out, "faddeev_out")
    os.makedirs(out_dir, exist_ok=True)
    rows = []
    _SUITES[args.suite](rows, config.kernel_params, config.profile)
    report = os.path.join(out_dir, f"verify_{args.suite}.csv")
    with open(report, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["suite", "check", "value", "tolerance", "passed"])
        for suite, check, value, tol, ok in rows:
            w.writerow([suite, check, FLOAT_FMT % value, FLOAT_FMT % tol, ok])
    failed = [row for row in rows if not row[4]]
    for suite, check, value, tol, ok in rows:
        print(f"{'PASS' if ok else 'FAIL'} {suite}.{check} value={value:.6g} "
              f"tolerance={tol:.6g}")
    print(f"status={'ok' if not failed else 'verify-fail'} suite={args.suite} "
          f"checks={len(rows)} failures={len(failed)} report={report}")
    return 0 if not failed else 3


# ---------------------------------------------------------------------------
# sweep


def _sweep_one(packed):
    index, config, out_dir = packed
    os.makedirs(out_dir, exist_ok=True)
    try:
        result = run(config)
    except Exception as exc:  # a failed run must not kill the sweep
        return {"index": index, "status": "error", "reason": str(exc),
                "t_final": math.nan, "max_monitor_v": math.nan,
                "max_monitor_vt": math.nan, "max_monitor_gradv": math.nan,
                "max_drift": math.nan}
    diag.write_diagnostics_csv(result.records, os.path.join(out_dir, "diagnostics.csv"))
    write_effective_config(result.config, out_dir,
                           os.path.join(out_dir, "effective_config.ini"))
    write_checkpoint(result.state, os.path.join(out_dir, "final"), result.config, -1)
    recs = result.records
    return {"index": index, "status": result.status, "reason": result.reason,
            "t_final": result.state.time,
            "max_monitor_v": max(rec.monitor_v for rec in recs),
            "max_monitor_vt": max(rec.monitor_vt for rec in recs),
            "max_monitor_gradv": max(rec.monitor_gradv for rec in recs),
            "max_drift": max(abs(rec.energy_drift) for rec in recs)}


def cmd_sweep(args) -> int:
    axes = []
    try:
        for spec in args.sweep:
            if "=" not in spec:
                raise ConfigError(f"sweep axis {spec!r} is not of the form "
                                  "section.key=v1,v2,...")
            dotted, values = spec.split("=", 1)
            vals = [tok.strip() for tok in values.split(",") if tok.strip()]
            if not vals:
                raise ConfigError(f"sweep axis {dotted!r} has no values")
            axes.append((dotted.strip(), vals))
        base_sets = list(args.set or ())
        combos = list(itertools.product(*[vals for _, vals in axes]))
        jobs = []
        for i, combo in enumerate(combos):
            sets = base_sets + [f"{key}={val}"
                                for (key, _), val in zip(axes, combo)]
            config, file_out = load_config(args.config, sets)
            jobs.append((i, combo, config, file_out))
    except ConfigError as exc:
        print(f"config-error: {exc}", file=sys.stderr)
        return 1
    out_root = _resolve_out(args.out, jobs[0][3] if jobs else None, "faddeev_out")
    os.makedirs(out_root, exist_ok=True)

    packed = [(i, config, os.path.join(out_root, f"run_{i:03d}"))
              for i, _, config, _ in jobs]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            summaries = list(pool.map(_sweep_one, packed))
    else:
        summaries = [_sweep_one(item) for item in packed]

    keys = [key for key, _ in axes]
    path = os.path.join(out_root, "summary.csv")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["run_dir"] + keys + ["status", "reason", "t_final",
                                         "max_monitor_v", "max_monitor_vt",
                                         "max_monitor_gradv", "max_drift"])
        for (i, combo, _, _), summary in zip(jobs, summaries):
            w.writerow([f"run_{i:03d}"] + list(combo)
                       + [summary["status"], summary["reason"],
                          FLOAT_FMT % summary["t_final"],
                          FLOAT_FMT % summary["max_monitor_v"],
                          FLOAT_FMT % summary["max_monitor_vt"],
                          FLOAT_FMT % summary["max_monitor_gradv"],
                          FLOAT_FMT % summary["max_drift"]])
    n_bad = sum(1 for s in summaries if s["status"] != "completed")
    print(f"status=done runs={len(summaries)} incomplete={n_bad} summary={path}")
    return 0


def cmd_kernels_table(args) -> int:
    try:
        config, file_out = load_config(args.config, args.set or ())
    except ConfigError as exc:
        print(f"config-error: {exc}", file=sys.stderr)
        return 1
    out_dir = _resolve_out(args.out, file_out, "faddeev_out")
    os.makedirs(out_dir, exist_ok=True)
    p, profile = config.kernel_params, config.profile
    xs = np.linspace(-3.0, 3.0, 601)
    path_k = os.path.join(out_dir, "kernels.csv")
    with open(path_k, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x"] + [f"Ftilde{j}" for j in range(5)])
        cols = [kernels.eval_Ftilde(j, xs, p) for j in range(5)]
        for i, x in enumerate(xs):
            w.writerow([FLOAT_FMT % x] + [FLOAT_FMT % col[i] for col in cols])
    rs = np.linspace(0.0, 3.0, 601)
    path_c = os.path.join(out_dir, "cutoffs.csv")
    with open(path_c, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["r", "phi", "dphi", "lt1", "gt1", "lap2_phi", "A4_at_v1"])
        cut = kernels.cutoff_arrays(rs, profile)
        a4 = kernels.eval_A(4, np.ones_like(rs), rs, p, profile)
        for i, r in enumerate(rs):
            w.writerow([FLOAT_FMT % r, FLOAT_FMT % cut["phi"][i],
                        FLOAT_FMT % cut["dphi"][i], FLOAT_FMT % cut["lt1"][i],
                        FLOAT_FMT % cut["gt1"][i], FLOAT_FMT % cut["lap2phi"][i],
                        FLOAT_FMT % a4[i]])
    print(f"status=ok kernels={path_k} cutoffs={path_c}")
    return 0


def main(argv=None) -> int:
    parser = _Parser(prog="faddeevlab",
                     description="Radial wave laboratory for the lifted "
                                 "equivariant Faddeev field equation.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", default=None, help="INI config file")
        sp.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                        help="override a config value (repeatable)")
        sp.add_argument("--out", default=None, help="output directory")

    sp = sub.add_parser("run", help="evolve one configuration")
    common(sp)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("verify", help="run a verification suite")
    sp.add_argument("suite", choices=sorted(_SUITES))
    common(sp)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("sweep", help="cartesian parameter sweep")
    common(sp)
    sp.add_argument("--sweep", action="append", required=True,
                    metavar="SECTION.KEY=V1,V2,...",
                    help="sweep axis (repeatable; cartesian product)")
    sp.add_argument("--jobs", type=int, default=1, help="worker processes")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("kernels-table", help="dump kernel and cutoff samples")
    common(sp)
    sp.set_defaults(func=cmd_kernels_table)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
