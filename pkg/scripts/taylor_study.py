"""How well truncated Taylor models of Omega(w) track a two-section emulator.

The section model is exact at every frequency; any polynomial must diverge
away from the carrier, and its error near the carrier scales with the next
power of the offset.
"""

import argparse
import os

import numpy as np

from pmde.emulator import build, frozen_retarders, preset
from pmde.statistics import remainder_exponent, taylor_accuracy

ORDERS = (0, 1, 2, 3)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--preset", default="highend-50")
    ap.add_argument("--time", type=float, default=1e-3, help="scrambler time in s")
    ap.add_argument("--out", default="results")
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)

    cfg = preset(args.preset)
    rets = frozen_retarders(build(cfg), args.time)
    secs = list(cfg.sections)

    print(f"{'band GHz':>9} " + " ".join(f"{'order ' + str(k):>12}" for k in ORDERS))
    for band_ghz in (10, 50, 100, 500, 1000, 2000, 4000):
        rep = taylor_accuracy(secs, 2 * np.pi * band_ghz * 1e9, ORDERS, retarders=rets, count=2001)
        print(f"{band_ghz:9d} " + " ".join(f"{w:12.4g}" for w in rep.worst()))
        if band_ghz == 500:
            np.savetxt(
                os.path.join(args.out, "taylor_error_500ghz.csv"),
                np.column_stack([rep.offsets / (2 * np.pi * 1e9), rep.errors.T]),
                fmt="%.9g",
                delimiter=",",
                header="offset_ghz," + ",".join(f"error_order{k}_ps" for k in ORDERS),
                comments="",
            )

    near = taylor_accuracy(secs, 2 * np.pi * 5e9, ORDERS, retarders=rets, count=4001)
    for k in ORDERS:
        slope = remainder_exponent(near, k, 2 * np.pi * 0.05e9, 2 * np.pi * 0.5e9)
        print(f"order {k}: remainder exponent {slope:.3f} (expected {k + 1})")
    print(f"parameters: Taylor {near.taylor_dof}, sections {near.section_dof}")


if __name__ == "__main__":
    main()
