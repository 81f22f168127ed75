#!/usr/bin/env python3
"""Brute-force identification probability vs pulse intensity.

Sweeps |alpha|^2 / M over several basis counts; identification only becomes
reliable once the pulse carries far more photons than there are candidate
polarizations, which is the security condition the mesoscopic channel rests
on.
"""
import argparse

import numpy as np

from hpqkd.attacks import attack_success_curve


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--m-bases", type=int, nargs="+", default=[16, 64])
    parser.add_argument("--trials", type=int, default=500)
    parser.add_argument("--seed", type=int, default=20260809)
    parser.add_argument(
        "--ratios", type=float, nargs="+", default=[2.0**e for e in range(-4, 7)]
    )
    args = parser.parse_args()

    print(f"{'M':>5} {'alpha_sq/M':>11} {'alpha_sq':>10} {'success':>8} {'stderr':>7}")
    for m in args.m_bases:
        grid = [ratio * m for ratio in args.ratios]
        points = attack_success_curve(grid, m, args.trials, np.random.default_rng(args.seed))
        for ratio, point in zip(args.ratios, points):
            print(
                f"{m:>5d} {ratio:>11.4f} {point.alpha_sq:>10.1f} "
                f"{point.success_rate:>8.4f} {point.stderr:>7.4f}"
            )
        print()


if __name__ == "__main__":
    main()
