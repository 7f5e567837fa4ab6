"""Hitting-time CLT and fluid error envelope for the ER exploration chain.

    python scripts/clt_er.py --c 1 --n 10000 --out results/clt
"""

import argparse
import sys

from jamming.cli import main

if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    p.add_argument("--c", default="1")
    p.add_argument("--n", default="10000")
    p.add_argument("--reps", default="2000")
    p.add_argument("--seed", default="0")
    p.add_argument("--out", default="results/clt")
    a = p.parse_args()
    common = ["--c", a.c, "--n", a.n, "--seed", a.seed, "--out", a.out]
    code = main(["clt", "--reps", a.reps] + common)
    code = code or main(["envelope", "--reps", "100"] + common)
    sys.exit(code)
