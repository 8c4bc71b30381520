"""Iterations for BAS and QIBAS to cut the 24-D sphere objective by 100x.

    python scripts/sphere_convergence.py --seeds 20 --out results/sphere.csv
"""

import argparse
import csv

import numpy as np

from cablecal.beetle import BAS, QIBAS, BeetleConfig, iterations_to, optimize


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--dims", type=int, default=24)
    ap.add_argument("--max-iters", type=int, default=3000)
    ap.add_argument("--out", default="results/sphere.csv")
    args = ap.parse_args(argv)

    f = lambda x: float(x @ x)
    rows = []
    for seed in range(args.seeds):
        init = np.random.default_rng(1000 + seed).uniform(-10, 10, args.dims)
        row = {"seed": seed}
        for variant in (BAS, QIBAS):
            cfg = BeetleConfig(bounds=[[-10, 10]] * args.dims, max_iters=args.max_iters, seed=seed, patience=10**6)
            res = optimize(f, cfg, variant, init=init)
            row[f"{variant}_iters"] = iterations_to(res.trace, 1e-2 * f(init))
            row[f"{variant}_final"] = res.best_value
        rows.append(row)

    with open(args.out, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    for variant in (BAS, QIBAS):
        its = [r[f"{variant}_iters"] for r in rows]
        print(f"{variant:<6} median iterations {np.median(its):g}  (unreached: {sum(np.isinf(its))}/{len(its)})")


if __name__ == "__main__":
    main()
