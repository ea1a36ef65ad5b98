"""Driving-function moments of sampled branches at several meshes against the SDE."""

import argparse

import numpy as np

from ustsle import experiments as ex
from ustsle.sampler import RngStream


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="+", default=[32, 64, 128])
    ap.add_argument("--samples", type=int, default=2000)
    ap.add_argument("--setup", choices=sorted(ex.DRIVING_SETUPS), default="N1")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    times = np.array([0.01, 0.02, 0.04, 0.07, 0.1])
    points, alpha = ex.DRIVING_SETUPS[args.setup]
    streams = RngStream(args.seed).spawn(len(args.sizes) + 1)
    sde = ex.sde_driving_samples(points, alpha, times, 5 * args.samples, streams[0].gen)
    rows = [("sde", sde)] + [
        (f"n={n}", ex.branch_driving_samples(n, points, alpha, times, args.samples, s))
        for n, s in zip(args.sizes, streams[1:])
    ]
    print("t".ljust(10) + "".join(f"{t:>22}" for t in times))
    for label, w in rows:
        m, se = w.mean(axis=0), w.std(axis=0, ddof=1) / np.sqrt(w.shape[0])
        m2, se2 = (w**2).mean(axis=0), (w**2).std(axis=0, ddof=1) / np.sqrt(w.shape[0])
        print(f"{label:<10}" + "".join(f"{a:>11.4f}+-{b:<9.4f}" for a, b in zip(m, se)) + "  E[W]")
        print(f"{'':<10}" + "".join(f"{a:>11.4f}+-{b:<9.4f}" for a, b in zip(m2, se2)) + "  E[W^2]")


if __name__ == "__main__":
    main()
