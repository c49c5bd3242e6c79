"""Scrambling-speed distributions and a lightning-like burst trace.

The default seven-plate stack is dominated by its HWP, which gives a
peaked speed distribution just below the ceiling. Plates with comparable
incommensurate rates give a Rayleigh-like distribution instead.
"""

import argparse
import os

import numpy as np

from pmde.polarization import fibonacci_sphere, great_circle
from pmde.scrambler import (
    Plate,
    ScramblerTrajectory,
    WaveplateStack,
    seven_plate_stack,
    make_lightning_burst,
    max_sop_speed,
    scrambler_rotation,
    speed_histogram,
    with_burst,
)

H = np.array([1.0, 0.0, 0.0])


def comparable_stack(scale=0.35e6):
    roots = np.sqrt([2.0, 3.0, 5.0, 7.0, 11.0, 13.0, 17.0])
    kinds = ["QWP"] * 3 + ["HWP"] + ["QWP"] * 3
    return WaveplateStack(tuple(Plate(k, 0.7 * i, (-1) ** i * scale * r) for i, (k, r) in enumerate(zip(kinds, roots))))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--samples", type=int, default=100_000)
    ap.add_argument("--out", default="results")
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)

    for name, stack, span in (("default", seven_plate_stack(), 1e-2), ("comparable", comparable_stack(), 1.0)):
        hist = speed_histogram(ScramblerTrajectory(stack), H, (0.0, span), args.samples, dt=1e-11)
        centres = 0.5 * (hist.edges[1:] + hist.edges[:-1])
        np.savetxt(
            os.path.join(args.out, f"speed_hist_{name}.csv"),
            np.column_stack([centres, hist.counts]),
            fmt="%.9g",
            delimiter=",",
            header="speed_radps,count",
            comments="",
        )
        print(
            f"{name:>10}: bound {stack.speed_bound() / 1e6:.2f} Mrad/s, mode {hist.mode / 1e6:.2f} Mrad/s, "
            f"Rayleigh KS {hist.rayleigh_ks():.3f} -> {hist.classify()}"
        )

    base = ScramblerTrajectory(seven_plate_stack())
    burst = make_lightning_burst(5.1e6, 10e-6, 1e-6)
    traj = ScramblerTrajectory(with_burst(base.stack, burst))
    probe = fibonacci_sphere(1)[0]
    times = np.linspace(0.0, 12e-6, 241)
    rows = []
    for t in times:
        dev = great_circle(scrambler_rotation(traj, t) @ probe, scrambler_rotation(base, t) @ probe)
        rows.append([t, burst.rate(t), max_sop_speed(traj, t, 1e-11), dev])
    rows = np.array(rows)
    np.savetxt(
        os.path.join(args.out, "lightning_trace.csv"),
        rows,
        fmt="%.9g",
        delimiter=",",
        header="time_s,burst_rate_radps,max_speed_radps,sop_deviation_rad",
        comments="",
    )
    print(f"burst: peak {burst.peak_rate / 1e6:.2f} Mrad/s, max deviation from the plain trajectory {rows[:, 3].max():.3f} rad, final {rows[-1, 3]:.2g} rad")


if __name__ == "__main__":
    main()
