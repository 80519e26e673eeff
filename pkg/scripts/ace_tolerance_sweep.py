#!/usr/bin/env python3
"""Minimum committed radius and error of the adaptive solver versus tolerance."""

import argparse

from carleman.analysis import relative_error
from carleman.integrate import rk4_nonlinear_solve
from carleman.problems import get_problem
from carleman.solvers import AceConfig, ace_run


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--problem", default="cubic1d")
    ap.add_argument("--case", default="0.8,0.9,1.6", help="cubic fixed points, comma separated")
    ap.add_argument("--x0", default="3.0", help="initial state, comma separated")
    ap.add_argument("--t-max", type=float, default=20.0)
    ap.add_argument("--tols", default="1e-4,1e-6,1e-8,1e-10")
    ap.add_argument("--dxi", type=float, default=0.02)
    ap.add_argument("--xi-max", type=float, default=1.0)
    args = ap.parse_args()

    params = {}
    if args.problem == "cubic1d":
        params = dict(zip(("X_c1", "X_c2", "X_c3"), map(float, args.case.split(","))))
    prob = get_problem(args.problem, **params)
    x0 = [float(v) for v in args.x0.split(",")]
    cl = rk4_nonlinear_solve(prob, x0, args.t_max)
    print(f"{'eps_tol':>8}  {'min_xi':>6}  {'charts':>6}  {'max_err':>9}  {'final_err':>9}")
    for tol in map(float, args.tols.split(",")):
        cfg = AceConfig(eps_tol=tol, dxi=args.dxi, xi_min=args.dxi, xi_init=args.xi_max, xi_max=args.xi_max)
        tr = ace_run(prob, x0, cfg, 6, args.t_max)
        err = relative_error(cl, tr)
        print(f"{tol:8.0e}  {tr.xi.min():6.2f}  {tr.transitions + 1:6d}  {err.max_error:9.2e}  {err.final_error:9.2e}")


if __name__ == "__main__":
    main()
