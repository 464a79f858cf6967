"""Fuzz the two-obstacle kernel: taut string vs fixpoint vs brute force.

Random anchored corridors; reports the worst sup-norm deviation of each
independent method from the taut string, and checks that the contact
sets match the nonemptiness of the modified differentials.

Usage: python3 scripts/duality_fuzz.py [--count 50] [--seed 7] [--max-n 21]
"""

import argparse
import sys
import time

import numpy as np

from stopgame.barrier import (INFINF, INFSUP, SUPINF, SUPSUP, GridObstacle,
                              double_obstacle_fixpoint, modified_differentials,
                              supinf_bruteforce, taut_string)


def corridor(rng, n):
    y = np.cumsum(rng.uniform(0.2, 1.5, n))
    mid = rng.normal(0.0, 1.0, n)
    half = rng.uniform(0.05, 1.2, n)
    wg, wh = mid - half, mid + half
    wg[0] = wh[0] = mid[0]
    wg[-1] = wh[-1] = mid[-1]
    return GridObstacle.make(y, wg, wh)


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--count", type=int, default=50)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--max-n", type=int, default=21)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    worst = {m: 0.0 for m in (SUPSUP, INFINF, INFSUP, SUPINF, "fixpoint")}
    mismatches = 0
    t0 = time.time()
    for k in range(args.count):
        ob = corridor(rng, int(rng.integers(5, args.max_n + 1)))
        te = taut_string(ob)
        fx = double_obstacle_fixpoint(ob)
        worst["fixpoint"] = max(worst["fixpoint"],
                                float(np.max(np.abs(fx.values - te.values))))
        for side in (SUPSUP, INFINF, INFSUP, SUPINF):
            bf = supinf_bruteforce(ob, side)
            worst[side] = max(worst[side],
                              float(np.max(np.abs(bf - te.values))))
        for i in range(len(ob.y)):
            sub, sup = modified_differentials(te, ob, i)
            if (sup is not None) != bool(te.contact_lower[i]):
                mismatches += 1
            if (sub is not None) != bool(te.contact_upper[i]):
                mismatches += 1
    print("corridors: %d  elapsed: %.1f s" % (args.count, time.time() - t0))
    for m, v in worst.items():
        print("  %-9s worst sup-norm deviation: %.3e" % (m, v))
    print("  contact/differential mismatches: %d" % mismatches)
    return 0 if (max(worst.values()) < 1e-8 and mismatches == 0) else 1


if __name__ == "__main__":
    sys.exit(main())
