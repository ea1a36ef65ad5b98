"""Kernel-ratio convergence on unit squares, with and without a slit."""

import argparse
from pathlib import Path

from ustsle.harmonic import kernel_ratio_experiment, poisson_slit_ratio_experiment, write_convergence_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="+", default=[8, 16, 32, 64, 128])
    ap.add_argument("--out-dir", default="results")
    args = ap.parse_args()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    plain = kernel_ratio_experiment(args.sizes, (3 / 8, 0.0), (1.0, 1 / 4), (0.5, 0.5), (0.75, 0.5))
    slit = poisson_slit_ratio_experiment(args.sizes, (3 / 8, 0.0), (0.5, 0.5), (0.75, 0.5), 0.75, 0.25)
    write_convergence_csv(plain, out / "kernel_ratio.csv")
    write_convergence_csv(slit, out / "slit_ratio.csv")
    for name, rows in (("excursion/poisson", plain), ("slit poisson", slit)):
        print(name)
        for r in rows:
            print(f"  mesh {r.mesh:.5f}  discrete {r.discrete_value:.6f}  continuum {r.continuum_value:.6f}  error {r.abs_error:.2e}")


if __name__ == "__main__":
    main()
