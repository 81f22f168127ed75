#!/usr/bin/env python3
"""Closed-form vs oracle sideband fringes and the fitted fringe prefactor.

Scans the channel-1 phase difference, prints both intensity laws side by
side, and fits A*cos^2(dphi/2) to the oracle points to settle the fringe
amplitude (A = e0^2*m1^2/8 at matched depths m1 = 2*m3).
"""
import argparse

import numpy as np

from hpqkd.optics import (
    ModulationPlan,
    fit_half_angle_fringe,
    sideband_intensities_closed_form,
    sideband_intensities_oracle,
    tuned_fiber,
)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--points", type=int, default=24)
    parser.add_argument("--m1", type=float, default=0.1)
    parser.add_argument("--m3", type=float, default=0.05)
    args = parser.parse_args()

    plan = ModulationPlan(m1=args.m1, m3=args.m3)
    fiber = tuned_fiber(plan)
    phases = np.linspace(0, 2 * np.pi, args.points, endpoint=False)

    print(f"{'dphi1':>8} {'closed_up':>11} {'oracle_up':>11} {'closed_lo':>11} {'oracle_lo':>11}")
    upper = []
    for phase in phases:
        swept = plan.with_phases(phi1_a=float(phase))
        closed = sideband_intensities_closed_form(swept, fiber)
        oracle = sideband_intensities_oracle(swept, fiber)
        upper.append(oracle.upper1)
        print(
            f"{phase:>8.4f} {closed.upper1:>11.4e} {oracle.upper1:>11.4e} "
            f"{closed.lower1:>11.4e} {oracle.lower1:>11.4e}"
        )

    amplitude, residual = fit_half_angle_fringe(phases, upper, "cos2")
    ref = plan.e0**2 * plan.m1**2
    print(f"\nfitted A = {amplitude:.6e}  (max residual {residual:.3%})")
    print(f"e0^2*m1^2/8  = {ref / 8:.6e}   delta {abs(amplitude - ref / 8):.2e}")
    print(f"e0^2*m1^2/16 = {ref / 16:.6e}   delta {abs(amplitude - ref / 16):.2e}")


if __name__ == "__main__":
    main()
