#!/usr/bin/env python3
"""Final states of SCE, PCE and the nonlinear reference across initial conditions.

Writes one CSV row per (case, X0) with the basin fixed point picked out by the
reference run.
"""

import argparse
import csv
from pathlib import Path

import numpy as np

from carleman.integrate import rk4_nonlinear_batch
from carleman.problems import CUBIC_CASES, cubic_1d
from carleman.solvers import pce_run, sce_run


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--count", type=int, default=15, help="initial conditions per case")
    ap.add_argument("--t-max", type=float, default=40.0)
    ap.add_argument("--xi", type=float, default=0.1)
    ap.add_argument("-P", type=int, default=6)
    ap.add_argument("-o", "--output", type=Path, default=Path("cubic_basins.csv"))
    args = ap.parse_args()

    rows = []
    for case, roots in CUBIC_CASES.items():
        prob = cubic_1d(*roots)
        ics = np.linspace(min(roots) - 0.6, max(roots) + 0.6, args.count)
        ref = rk4_nonlinear_batch(prob, ics[:, None], args.t_max)[-1, :, 0]
        for x0, cl in zip(ics, ref):
            fp = min(roots, key=lambda r: abs(r - cl))
            pce = pce_run(prob, [x0], args.xi, args.P, args.t_max)
            sce = sce_run(prob, [x0], args.P, args.t_max)
            rows.append({
                "case": case, "X0": x0, "basin": fp, "cl_final": cl,
                "pce_final": pce.states[-1, 0], "pce_transitions": pce.transitions,
                "sce_final": sce.states[-1, 0],
                "sce_unstable_t": "" if sce.unstable_at is None else sce.unstable_at * 1e-3,
            })
            print(f"({case}) X0={x0:+.3f} basin {fp:+.2f}  PCE |err| {abs(pce.states[-1, 0] - fp):.1e}  "
                  f"SCE {'unstable' if sce.unstable_at is not None else 'stable'}")
    with open(args.output, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)


if __name__ == "__main__":
    main()
