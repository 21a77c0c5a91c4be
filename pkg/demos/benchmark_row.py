"""One row of the synthetic recovery table, both estimators side by side.

    python demos/benchmark_row.py --T 100 --p 100 --s 2 --sigma 0.5 --trials 20
"""

import argparse
import time

from scheds.synth import METRICS, SynthConfig, run_benchmark


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--T", type=int, default=100)
    ap.add_argument("--p", type=int, default=100)
    ap.add_argument("--s", type=int, default=2)
    ap.add_argument("--sigma", type=float, default=0.5)
    ap.add_argument("--trials", type=int, default=20)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    cfg = SynthConfig(args.T, args.p, args.s, args.sigma, trials=args.trials)
    t0 = time.perf_counter()
    report = run_benchmark([cfg], n_jobs=args.jobs)
    print(f"{cfg.key}: {args.trials} trials in {time.perf_counter() - t0:.1f} s\n")

    # beta_err = ||beta_hat - beta*||, s_err = |s_hat - s*|, sigma_err10 = 10 |sigma_hat - sigma*|
    print(f"{'method':<10}" + "".join(f"{m:>22}" for m in METRICS))
    for method, row in report.summary[cfg.key].items():
        cells = "".join(f"{row[m + '_mean']:>12.3f} +- {row[m + '_std']:<6.3f}" for m in METRICS)
        print(f"{method:<10}{cells}   failed {row['failed']}")


if __name__ == "__main__":
    main()
