"""One coupled RSA run in the plane (c = 1.4, N = 2000): per-step Z, U, L trace
plus the ODE curves u, l and the ER fluid limit for overlaying.

    python scripts/figure1.py --seed 3 --out results/figure1
"""

import argparse
import sys

from jamming.cli import main

if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    p.add_argument("--seed", default="0")
    p.add_argument("--out", default="results/figure1")
    args = p.parse_args()
    code = main(["figure1", "--seed", args.seed, "--out", args.out])
    code = code or main(["fluid", "--c", "1.4", "--out", args.out])
    sys.exit(code)
