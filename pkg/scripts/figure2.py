"""Jamming constant of planar RSA against c, with the two bound curves and the
ER value ln(1 + c)/c. Defaults: N = 1000, 20 runs per c, 99% intervals.

    python scripts/figure2.py --out results/figure2
"""

import argparse
import sys

from jamming.cli import main

if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    p.add_argument("--grid", default="0.25:3:0.25")
    p.add_argument("--n", default="1000")
    p.add_argument("--reps", default="20")
    p.add_argument("--seed", default="0")
    p.add_argument("--out", default="results/figure2")
    a = p.parse_args()
    sys.exit(main(["figure2", "--grid", a.grid, "--n", a.n, "--reps", a.reps, "--seed", a.seed, "--out", a.out]))
