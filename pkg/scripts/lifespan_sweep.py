"""Sweep the velocity norm across the branch threshold and print the lifespan pieces.

Usage: python scripts/lifespan_sweep.py [--grid 64] [--b-norm 0.1] [--c1 1] [--c2 1]
"""

import argparse

import numpy as np

from besovmhd.corpus import DataSpec
from besovmhd.dyadic import build_filter_bank
from besovmhd.fields import Grid
from besovmhd.lifespan import lifespan_estimate


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--grid", type=int, default=64)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--b-norm", type=float, default=0.1)
    ap.add_argument("--c1", type=float, default=1.0)
    ap.add_argument("--c2", type=float, default=1.0)
    args = ap.parse_args()

    grid = Grid(2, args.grid)
    bank = build_filter_bank(grid)
    print(f"{'|u0|':>9} {'branch':>11} {'a':>10} {'T0':>11} {'j0':>3} {'T1':>11} {'T2':>11} {'T':>11}")
    for un in np.geomspace(0.01, 2.0, 12):
        u, b = DataSpec(args.seed, float(un), args.b_norm).build(grid, bank)
        rep = lifespan_estimate(u, b, args.c1, args.c2, bank=bank)
        j0 = "-" if rep.j0 is None else rep.j0
        t1 = "-" if rep.T1 is None else f"{rep.T1:.4e}"
        t2 = "-" if rep.T2 is None else f"{rep.T2:.4e}"
        print(f"{un:9.4f} {rep.branch:>11} {rep.a:10.4e} {rep.T0:11.4e} {j0:>3} {t1:>11} {t2:>11} {rep.T:11.4e}")


if __name__ == "__main__":
    main()
