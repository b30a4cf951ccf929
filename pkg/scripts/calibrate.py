"""Suggest the smoothing and transport constants from solver runs on a seeded corpus.

Usage: python scripts/calibrate.py [--count 5] [--steps 32] [--threads 2]
"""

import argparse
import json

from besovmhd.cli import calibrate_constants
from besovmhd.corpus import small_branch_corpus
from besovmhd.fields import Grid


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--grid", type=int, default=64)
    ap.add_argument("--count", type=int, default=5)
    ap.add_argument("--steps", type=int, default=32)
    ap.add_argument("--threads", type=int, default=2)
    args = ap.parse_args()
    out = calibrate_constants(small_branch_corpus(args.count), Grid(2, args.grid), steps=args.steps,
                              threads=args.threads)
    print(json.dumps(out, indent=2, default=float))


if __name__ == "__main__":
    main()
