#!/usr/bin/env python3
"""Grid-refinement ladders: rectangle self-test and windowed layer runs."""

import argparse
import math

from windowlayers import layer_solver as ls
from windowlayers.bracketing import LayerPair


def show(study, title):
    print(title)
    for h, lam in zip(study.hs, study.lams):
        print(f"  h = {h:<8g} lambda = {lam:.10f}")
    print(f"  diffs: {['%.3e' % d for d in study.diffs]}")
    print(f"  observed order {study.observed_order}  settled {study.settled}  "
          f"extrapolated {study.extrapolated}\n")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--R", type=float, default=5.0)
    ap.add_argument("--d", default="pi")
    ap.add_argument("--sector", type=int, default=0)
    ap.add_argument("--h", type=float, default=0.16)
    ap.add_argument("--levels", type=int, default=3)
    args = ap.parse_args()

    show(ls.rectangle_refinement_study(1.2, 1.0, 0.05, levels=args.levels),
         "rectangle self-test (expect order 2):")

    widths = {"pi": math.pi, "pi/2": math.pi / 2, "pi/4": math.pi / 4}
    lp = LayerPair(widths.get(args.d, 0.0) or float(args.d))
    nums = ls.SolverNumerics(h_rho=args.h, h_z=args.h)
    show(ls.refine_study(lp, args.R, args.sector, nums, levels=args.levels),
         f"windowed run (d={args.d}, R={args.R}, sector {args.sector}):")

    rows = ls.truncation_study(lp, args.R, args.sector, nums, L0=4 * args.R, steps=3)
    print("truncation sweep:")
    for L, lam in rows:
        print(f"  L = {L:<8g} lambda = {lam:.10f}")


if __name__ == "__main__":
    main()
