"""Time one full fit (marginals + EM + calling) of a large simulated panel."""

import argparse
import os
import time

import numba

from snpmix.pipeline import fit_panel
from snpmix.simulate import SimSpec, simulate_dataset


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--snps", type=int, default=500_000)
    ap.add_argument("--cases", type=int, default=100)
    ap.add_argument("--controls", type=int, default=100)
    ap.add_argument("--seed", type=int, default=8)
    args = ap.parse_args()

    t0 = time.perf_counter()
    ds, _ = simulate_dataset(SimSpec(args.snps, args.cases, args.controls, effects=(100, 100), seed=args.seed))
    t1 = time.perf_counter()
    hyper, fit, calls = fit_panel(ds)
    t2 = time.perf_counter()
    print(f"cores={os.cpu_count()} numba threads={numba.get_num_threads()}")
    print(f"simulate {args.snps} x {args.cases + args.controls}: {t1 - t0:.1f}s")
    print(f"fit: {t2 - t1:.1f}s  alpha={hyper.alpha:.4g} beta={hyper.beta:.4g}  EM iterations={fit.iterations}  calls={len(calls)}")


if __name__ == "__main__":
    main()
