"""Run every experiment driver at full size and write one CSV per experiment plus a summary."""

import argparse
import json
from pathlib import Path

from ustsle import experiments as ex

DRIVERS = {
    "exact-pairing": lambda seed: ex.exact_pairing_check(seed=seed + 7),
    "branch-martingales": lambda seed: ex.branch_martingale_suite(max_t=3),
    "boundary-visits": lambda seed: ex.boundary_visit_suite(),
    "pairing-convergence": lambda seed: ex.pairing_convergence(samples=100_000, seed=seed),
    "pde-residuals": lambda seed: ex.pde_scan(seed=seed),
    "sde-identities": lambda seed: ex.sde_identities(seed=seed),
    "sle-martingale": lambda seed: ex.sle_martingale(seed=seed),
    "loewner-numerics": lambda seed: ex.loewner_numerics(),
    "kernel-suite": lambda seed: ex.kernel_suite(seed=seed),
    "driving-shadow": lambda seed: ex.driving_shadow(seed=seed),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", default="results")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--only", nargs="*", choices=sorted(DRIVERS))
    args = ap.parse_args()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary = {}
    for name in args.only or DRIVERS:
        res = DRIVERS[name](args.seed)
        print(res.line(), flush=True)
        res.write_csv(out / f"{name}.csv")
        summary[name] = {"passed": res.passed, "summary": res.summary, "seconds": round(res.seconds, 1)}
    (out / "summary.json").write_text(json.dumps(summary, indent=1))


if __name__ == "__main__":
    main()
