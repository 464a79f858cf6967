"""Cancellable (penalty) put: sweep the penalty and track the equilibrium.

For delta below the cap the game has an interior saddle; at and above the
cap the inf-player drops out and the game degenerates to the plain put.

Usage: python3 scripts/israeli_sweep.py [--K 100] [--r 0.05] [--sigma 0.3]
"""

import argparse
import math
import sys

from stopgame import (GBM, DiffusionSpec, PayoffSpec, SolveOptions,
                      cancellable_put_threshold, penalty_cap, solve_game)


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--K", type=float, default=100.0)
    ap.add_argument("--r", type=float, default=0.05)
    ap.add_argument("--sigma", type=float, default=0.3)
    args = ap.parse_args(argv)

    spec = DiffusionSpec(kind=GBM, rate=args.r, drift=args.r,
                         sigma=args.sigma, interval=(0.0, math.inf))
    dstar = penalty_cap(args.K, args.r, args.sigma)
    print("penalty cap delta* = %.10f" % dstar)
    print("%8s %16s %12s %12s %12s" %
          ("d/d*", "equilibrium", "x* (solve)", "x* (root)", "sigma edge"))
    for frac in (0.1, 0.25, 0.5, 0.75, 0.9, 1.1, 1.5, 2.0):
        delta = frac * dstar
        pay = PayoffSpec.from_sources(
            "max(K - x, 0)", "max(K - x, 0) + d",
            constants={"K": args.K, "d": delta})
        sol = solve_game(spec, pay, SolveOptions(n=2049))
        xs = sol.D_plus[0][1] if sol.D_plus else float("nan")
        xr = (cancellable_put_threshold(args.K, args.r, args.sigma, delta)
              if frac < 1.0 else float("nan"))
        se = sol.D_minus[0][0] if sol.D_minus else float("nan")
        print("%8.2f %16s %12.6f %12.6f %12.6f"
              % (frac, sol.equilibrium, xs, xr, se))
    return 0


if __name__ == "__main__":
    sys.exit(main())
