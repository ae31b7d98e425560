#!/usr/bin/env python3
"""Sweep the entanglement bounds over dimension and fidelity.

Writes one CSV row per (K, F) grid point with the formation bounds, the
partial-transpose bound, and the hashing rate, plus the fidelity threshold
above which the hashing rate turns positive for each K.

Usage: python scripts/bounds_landscape.py [--K 2 4 8 16] [--steps 101] [--out FILE]
"""

import argparse
import sys

from entdist.bounds import formation_bounds_isotropic, hashing_rate
from entdist.serialize import format_number


def positive_rate_threshold(k: int, steps: int = 10_000) -> float:
    """Smallest grid fidelity with a positive hashing rate."""
    for i in range(steps + 1):
        f = i / steps
        if hashing_rate(k, f).raw > 0:
            return f
    return 1.0


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--K", type=int, nargs="+", default=[2, 4, 8, 16])
    parser.add_argument("--steps", type=int, default=101)
    parser.add_argument("--out", default=None)
    args = parser.parse_args()

    lines = ["K,F,ef_lower,ef_upper,ppt_bound,hashing_raw,hashing_clamped"]
    for k in args.K:
        for i in range(args.steps):
            f = i / (args.steps - 1)
            fb = formation_bounds_isotropic(k, f)
            hr = hashing_rate(k, f)
            cells = [k, f, fb.lower, fb.upper, fb.ppt_bound, hr.raw, hr.clamped]
            lines.append(",".join(format_number(c) for c in cells))
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)

    for k in args.K:
        print(
            f"# K={k}: hashing rate positive above F ~ {positive_rate_threshold(k):.4f}",
            file=sys.stderr,
        )
    return 0


if __name__ == "__main__":
    sys.exit(main())
