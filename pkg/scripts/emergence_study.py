#!/usr/bin/env python3
"""Locate the second critical window scale and watch the eigenvalue detach.

Bisects the bound-state count over the window radius (frozen grid topology,
so counts are clean step functions), then samples the new eigenvalue's gap
as the scale approaches the critical one from above.
"""

import argparse
import json
import math

from windowlayers import analysis as an
from windowlayers import layer_solver as ls
from windowlayers.bracketing import LayerPair


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--d", default="pi", help="narrow layer width: pi, pi/2, ...")
    ap.add_argument("--n", type=int, default=2, help="eigenvalue index")
    ap.add_argument("--interval", type=float, nargs=2, default=[2.0, 4.6])
    ap.add_argument("--h", type=float, default=0.1)
    ap.add_argument("--out", default="emergence.json")
    args = ap.parse_args()

    widths = {"pi": math.pi, "pi/2": math.pi / 2, "pi/4": math.pi / 4}
    lp = LayerPair(widths.get(args.d, 0.0) or float(args.d))
    nums = ls.SolverNumerics(h_rho=args.h, h_z=args.h)

    report = an.critical_scale(lp, args.n, tuple(args.interval), nums)
    print(f"t_{args.n} = {report.t_n:.6f}  "
          f"(interval width {report.final_interval_width:.2e}, L = {report.L:.0f})")
    print("bisection trace:")
    for t, c, amb in sorted(report.bisection_trace):
        print(f"  t = {t:.6f}  count = {c}{'  (ambiguous)' if amb else ''}")

    samples = []
    for fac in (1.01, 1.02, 1.04, 1.07, 1.10):
        spec = ls.solve_all(lp, report.t_n * fac, nums)
        evs = spec.eigenvalues()
        gap = 1.0 - evs[args.n - 1] if len(evs) >= args.n else None
        samples.append({"factor": fac, "gap": gap})
        print(f"  scale {fac:.2f} t_n: gap = {gap}")

    json.dump({"d": lp.d, "n": args.n, "t_n": report.t_n,
               "interval": list(report.interval),
               "trace": [[t, c, a] for t, c, a in report.bisection_trace],
               "approach": samples},
              open(args.out, "w"), indent=1)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
