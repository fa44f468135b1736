#!/usr/bin/env python3
"""Refinement studies over any mix of observables, written as a flat CSV.

Examples:
    python scripts/convergence_suite.py --observables solution,residual_v
    python scripts/convergence_suite.py --observables drift --forced no
    python scripts/convergence_suite.py --observables residual_Phi,residual_Phi_t \
        --base-n 256 --r-max 16 --t-end 2.5 --t-center 2.0
"""

import argparse

from faddeevlab.evolve import InitialDataSpec, RunConfig
from faddeevlab.verify import (ManufacturedSolution, convergence_study,
                               linear_wave_study, manufactured_config,
                               study_to_csv)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--observables", default="solution",
                    help="comma list: solution, drift, residual_v, "
                         "residual_Phi, residual_Phi_t, residual_Phi_tt, "
                         "residual_Phi_ttt, or 'linear'")
    ap.add_argument("--levels", type=int, default=3)
    ap.add_argument("--base-n", type=int, default=128)
    ap.add_argument("--r-max", type=float, default=8.0)
    ap.add_argument("--t-end", type=float, default=1.0)
    ap.add_argument("--t-probe", type=float, default=0.7)
    ap.add_argument("--t-center", type=float, default=2.0)
    ap.add_argument("--amplitude", type=float, default=0.5)
    ap.add_argument("--forced", choices=("yes", "no"), default="yes",
                    help="force with the manufactured solution (yes) or "
                         "evolve the plain Gaussian family (no)")
    ap.add_argument("--out", default="study.csv")
    args = ap.parse_args()

    obs = tuple(tok.strip() for tok in args.observables.split(",") if tok.strip())
    base = RunConfig(n_cells=args.base_n, r_max=args.r_max, t_end=args.t_end,
                     output_every=32, drift_ceiling=1.0,
                     track_spacetime=False, sobolev_orders=(),
                     initial=InitialDataSpec(amplitude=args.amplitude))
    ms = ManufacturedSolution()

    if obs == ("linear",):
        results = {"linear_solution": linear_wave_study(base, ms, args.levels)}
    elif args.forced == "yes":
        results = convergence_study(manufactured_config(ms, base), args.levels,
                                    obs, ms=ms, t_probe=args.t_probe,
                                    t_center=args.t_center)
    else:
        needs_ms = {"solution", "residual_v"} & set(obs)
        results = convergence_study(base, args.levels, obs,
                                    ms=ms if needs_ms else None,
                                    t_probe=args.t_probe,
                                    t_center=args.t_center, forcing=False)

    for name, res in sorted(results.items()):
        rows = " ".join(f"{r.error:.3e}" for r in res.rows)
        print(f"{name}: errors [{rows}] ls_order {res.ls_order:.3f} "
              f"monotone={res.monotone}")
    study_to_csv(results, args.out)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
