"""Total DGD of two 26 ps sections versus the middle mode converter's retardation.

Also prints how much the section retardation itself must change for the
same 0 -> 52 ps swing when one section's DGD is tuned instead.
"""

import argparse
import os

import numpy as np

from pmde.emulator import law_of_cosines_dgd, retardation_change, sweep_mode_converter


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dgd", type=float, default=26.0, help="per-section DGD in ps")
    ap.add_argument("--points", type=int, default=361)
    ap.add_argument("--out", default="results")
    args = ap.parse_args()

    deltas = np.linspace(0.0, 2 * np.pi, args.points)
    dgd = sweep_mode_converter(deltas, args.dgd)
    ref = law_of_cosines_dgd(deltas, args.dgd)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "mode_converter_sweep.csv")
    np.savetxt(path, np.column_stack([deltas, dgd, ref]), fmt="%.9g", delimiter=",", header="delta_rad,dgd_ps,law_of_cosines_ps", comments="")

    print(f"DGD range: {dgd.min():.3g} .. {dgd.max():.9g} ps")
    print(f"max deviation from 2 tau |cos(delta/2)|: {np.abs(dgd - ref).max():.2g} ps")
    change = retardation_change(0.0, 2 * args.dgd)
    print(f"retardation change for one section 0 -> {2 * args.dgd:g} ps: {change / np.pi:.6g} pi rad")
    print(f"wrote {path}")


if __name__ == "__main__":
    main()
