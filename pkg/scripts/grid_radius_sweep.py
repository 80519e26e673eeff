#!/usr/bin/env python3
"""Static-grid versus piecewise error on the Duffing oscillator as the region size grows."""

import argparse

import numpy as np

from carleman.analysis import relative_error
from carleman.integrate import rk4_nonlinear_solve
from carleman.problems import duffing
from carleman.solvers import GridSpec, gce_run, pce_run


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--x0", type=float, nargs=2, default=(0.5, 0.5))
    ap.add_argument("--grid-center", type=float, nargs=2, default=(-0.1, 0.0))
    ap.add_argument("--t-max", type=float, default=30.0)
    ap.add_argument("--sizes", type=float, nargs="+", default=[0.2, 0.3, 0.4, 0.5, 0.6])
    args = ap.parse_args()

    prob = duffing()
    cl = rk4_nonlinear_solve(prob, args.x0, args.t_max)
    print(f"{'|xi|':>5}  {'GCE max':>9}  {'PCE max':>9}  {'GCE tiles':>9}  {'PCE charts':>10}")
    for r in args.sizes:
        g = gce_run(prob, args.x0, GridSpec.uniform(np.array(args.grid_center), r), 6, args.t_max)
        p = pce_run(prob, args.x0, r, 6, args.t_max)
        print(f"{r:5.2f}  {relative_error(cl, g).max_error:9.2e}  {relative_error(cl, p).max_error:9.2e}  "
              f"{g.transitions + 1:9d}  {p.transitions + 1:10d}")


if __name__ == "__main__":
    main()
