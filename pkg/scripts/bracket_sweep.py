#!/usr/bin/env python3
"""Bracket-containment and count-bound sweep over layer widths and radii.

Reproduces the twelve-configuration verification table: for each (d, R)
the solver spectrum is checked against the two-sided window-mode brackets
(widened by a coarse-grid error estimate) and the count bounds.
"""

import argparse
import csv
import math
import time

from windowlayers import layer_solver as ls
from windowlayers.bracketing import LayerPair, brackets, count_bounds
from windowlayers.window_eigs import disk_window_spectrum


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--h", type=float, default=0.1, help="grid step")
    ap.add_argument("--radii", type=float, nargs="+", default=[1.0, 2.0, 3.0, 5.0])
    ap.add_argument("--widths", nargs="+", default=["pi", "pi/2", "pi/4"])
    ap.add_argument("--out", default="bracket_sweep.csv")
    args = ap.parse_args()

    widths = {"pi": math.pi, "pi/2": math.pi / 2, "pi/4": math.pi / 4}
    nums = ls.SolverNumerics(h_rho=args.h, h_z=args.h)
    rows = []
    t_start = time.time()
    for wname in args.widths:
        lp = LayerPair(widths.get(wname, float(wname) if wname not in widths else 0))
        for R in args.radii:
            t0 = time.time()
            spec = ls.solve_all(lp, R, nums)
            coarse = ls.solve_all(lp, R, nums.scaled(1.5))
            n = disk_window_spectrum(R, "neumann", 28)
            d = disk_window_spectrum(R, "dirichlet", 28)
            cb = count_bounds(lp, n, d)
            brs = brackets(lp, n, d)
            evs, evc = spec.eigenvalues(), coarse.eigenvalues()
            contained = all(
                brs[i].contains(lam, slack=(abs(evc[i] - lam) if i < len(evc) else 1e-3) + 1e-9)
                for i, lam in enumerate(evs) if i < len(brs))
            ok_count = cb.consistent_with(spec.resolved_count, spec.unresolved_count)
            rows.append([wname, R, spec.resolved_count, spec.unresolved_count,
                         cb.min_count, cb.max_count, contained, ok_count,
                         round(time.time() - t0, 1)])
            print(f"d={wname:5s} R={R}: states={spec.resolved_count}"
                  f"(+{spec.unresolved_count}u) bounds=[{cb.min_count},{cb.max_count}]"
                  f" brackets={'ok' if contained else 'VIOLATED'}"
                  f" counts={'ok' if ok_count else 'VIOLATED'}"
                  f" ({time.time() - t0:.1f}s)")
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["d", "R", "resolved", "unresolved", "min_count", "max_count",
                    "brackets_ok", "counts_ok", "seconds"])
        w.writerows(rows)
    print(f"\nwrote {args.out}; total {time.time() - t_start:.0f}s")


if __name__ == "__main__":
    main()
