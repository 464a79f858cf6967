"""Perpetual put on GBM: solver vs closed form, with a CSV dump.

Usage: python3 scripts/put_example.py [--K 100] [--r 0.05] [--sigma 0.3]
                                      [--out put_grid.csv]
"""

import argparse
import math
import sys
import time

import numpy as np

from stopgame import (GBM, DiffusionSpec, PayoffSpec, put_threshold,
                      put_value, solve_stopping)
from stopgame.cli import write_csv


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--K", type=float, default=100.0)
    ap.add_argument("--r", type=float, default=0.05)
    ap.add_argument("--sigma", type=float, default=0.3)
    ap.add_argument("--out")
    args = ap.parse_args(argv)

    spec = DiffusionSpec(kind=GBM, rate=args.r, drift=args.r,
                         sigma=args.sigma, interval=(0.0, math.inf))
    pay = PayoffSpec.from_sources("max(K - x, 0)", constants={"K": args.K})
    t0 = time.time()
    sol = solve_stopping(spec, pay)
    elapsed = time.time() - t0

    xs = put_threshold(args.K, args.r, args.sigma)
    print("threshold: solver %.10f  closed form %.10f  |diff| %.2e"
          % (sol.b_star, xs, abs(sol.b_star - xs)))
    print("solve time: %.3f s on %d grid points" % (elapsed, len(sol.x_grid)))

    x = np.linspace(xs, 3 * args.K, 13)
    ref = put_value(x, args.K, args.r, args.sigma)
    v = sol.V(x)
    print("%10s %14s %14s %10s" % ("x", "V solver", "V closed", "rel err"))
    for a, b, c in zip(x, v, ref):
        print("%10.3f %14.8f %14.8f %10.2e" % (a, b, c, abs(b - c) / c))

    if args.out:
        with open(args.out, "w") as fh:
            write_csv(fh, spec, sol)
        print("wrote", args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
