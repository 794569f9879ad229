"""Desk-scale reproduction of the directional claims: HS speedup (MTOP1),
LS non-degradation (MTOP8) and transfer asymmetry (MTOP6).

Usage: python scripts/desk_experiments.py [--runs 10] [--fe-max 150] [--out results/desk]
"""

import argparse
import time

import numpy as np

from msas.harness import MsasConfig, export, run_cell, transfer_rate_matrix
from msas.stats import ranksum


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--runs", type=int, default=10)
    ap.add_argument("--fe-max", type=int, default=150)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--suites", default="mtop1,mtop8,mtop6")
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    cfg = MsasConfig(fe_max=args.fe_max)
    all_records = []
    for suite in args.suites.split(","):
        recs = {}
        for mode in ("baseline", "bckt"):
            t0 = time.time()
            recs[mode] = [run_cell(suite, mode, args.seed + r, cfg) for r in range(args.runs)]
            print(f"{suite} {mode}: {args.runs} runs in {time.time() - t0:.0f}s")
            all_records.extend(recs[mode])
        for j in range(recs["bckt"][0].n_tasks):
            b = [r.final_best[j] for r in recs["baseline"]]
            c = [r.final_best[j] for r in recs["bckt"]]
            print(f"  T{j + 1}: baseline {np.mean(b):.4g}  bckt {np.mean(c):.4g}  p={ranksum(c, b):.3g}")
        print("  transfer rates (rows source, cols target):")
        print(np.array2string(transfer_rate_matrix(recs["bckt"]), precision=3))
        print("  final third:")
        print(np.array2string(transfer_rate_matrix(recs["bckt"], tail_fraction=1 / 3), precision=3))
    if args.out:
        export(all_records, args.out)


if __name__ == "__main__":
    main()
