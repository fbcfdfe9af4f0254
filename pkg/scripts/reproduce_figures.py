#!/usr/bin/env python3
"""Run every study at desk scale and drop the CSV/JSON bundles under out/.

The defaults finish in a few minutes; --full restores the heavier run
counts (10k simulation runs, full conformal y-grid at m=1000).
"""

import argparse
import sys
import time

from polyatree.simharness import studies


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="out")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--full", action="store_true", help="paper-scale run counts")
    args = parser.parse_args(argv)
    runs = 10_000 if args.full else 500

    steps = [
        ("weight table", lambda: studies.run_table1(out=args.out)),
        (
            "prior CDF dispersion",
            lambda: studies.run_prior_cdf_study(seed=args.seed, out=args.out),
        ),
        (
            "1-D estimation error",
            lambda: studies.run_1d_study(
                m=50, a0=1.0, runs=runs, seed=args.seed, out=args.out
            ),
        ),
        (
            "2-D estimation error",
            lambda: studies.run_2d_study(runs=runs, seed=args.seed, out=args.out),
        ),
        (
            "quantile regression, m=100",
            lambda: studies.run_quantreg_study(m=100, seed=args.seed, out=args.out),
        ),
        (
            "quantile regression, m=1000",
            lambda: studies.run_quantreg_study(
                m=1000,
                seed=args.seed + 1,
                y_grid_size=None if args.full else 17,
                out=args.out + "/m1000",
            ),
        ),
        (
            "high-dimensional mixed data",
            lambda: studies.run_highdim_study(seed=1, out=args.out),
        ),
    ]
    for label, step in steps:
        t0 = time.time()
        step()
        print(f"{label}: {time.time() - t0:.1f} s")
    print(f"outputs under {args.out}/")
    return 0


if __name__ == "__main__":
    sys.exit(main())
